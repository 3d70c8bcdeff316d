#include <Eigen/Core>
#include <cmath>
#include <numbers>

#include "mifno/errors.hpp"
#include "mifno/layers.hpp"

namespace mifno {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConstMat = Eigen::Map<const RowMat>;

struct AxisSplit {
    std::size_t outer = 1;
    std::size_t n = 1;
    std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
    AxisSplit a;
    for (std::size_t i = 0; i < axis; ++i) a.outer *= s[i];
    a.n = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) a.inner *= s[i];
    return a;
}

// [outer][n][inner] -> [n][outer][inner]
void to_axis_major(const double* src, const AxisSplit& a, double* dst) {
    for (std::size_t o = 0; o < a.outer; ++o)
        for (std::size_t j = 0; j < a.n; ++j)
            std::copy_n(src + (o * a.n + j) * a.inner, a.inner, dst + (j * a.outer + o) * a.inner);
}

// [n][outer][inner] -> [outer][n][inner], accumulating.
void from_axis_major_add(const double* src, const AxisSplit& a, double* dst) {
    for (std::size_t o = 0; o < a.outer; ++o)
        for (std::size_t j = 0; j < a.n; ++j) {
            const double* s = src + (j * a.outer + o) * a.inner;
            double* d = dst + (o * a.n + j) * a.inner;
            for (std::size_t i = 0; i < a.inner; ++i) d[i] += s[i];
        }
}

double angle(std::size_t j, std::size_t k, std::size_t n) {
    return 2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
}

// Weight of mode k when a real signal is rebuilt from its non-negative half
// spectrum: interior modes stand for a conjugate pair, while DC and any bin
// sitting on a Nyquist frequency stand for a single real cosine.
double hermitian_weight(std::size_t k, std::size_t n_in, std::size_t n_out) {
    if (k == 0 || 2 * k == n_out || 2 * k == n_in) return 1.0;
    return 2.0;
}

// Truncated forward DFT: rows [0, M) real parts, rows [M, 2M) imaginary parts.
RowMat forward_matrix(std::size_t modes, std::size_t n) {
    RowMat a(2 * modes, n);
    for (std::size_t k = 0; k < modes; ++k)
        for (std::size_t j = 0; j < n; ++j) {
            const double t = angle(j, k, n);
            a(k, j) = std::cos(t);
            a(modes + k, j) = -std::sin(t);
        }
    return a;
}

// Real part of the Hermitian inverse at length n_out from the first `used` modes.
RowMat inverse_matrix(std::size_t modes, std::size_t used, std::size_t n_in, std::size_t n_out) {
    RowMat a = RowMat::Zero(n_out, 2 * modes);
    const double norm = 1.0 / static_cast<double>(n_in);
    for (std::size_t k = 0; k < used; ++k) {
        const double w = hermitian_weight(k, n_in, n_out) * norm;
        for (std::size_t j = 0; j < n_out; ++j) {
            const double t = angle(j, k, n_out);
            a(j, k) = w * std::cos(t);
            a(j, modes + k) = -w * std::sin(t);
        }
    }
    return a;
}

void check_real_channels_last(const Tensor& v, std::size_t axis, std::string_view op) {
    if (v.is_complex()) throw ContractError(std::string(op) + ": real input required");
    if (v.rank() < 2 || axis + 1 >= v.rank())
        throw ContractError(std::string(op) + ": axis " + std::to_string(axis) + " is not a spatial axis of " +
                            shape_string(v.shape()));
}

}  // namespace

Var spectral_axis(const Var& v, const Var& r, std::size_t axis, std::size_t out_len) {
    const Tensor& V = v.value();
    const Tensor& R = r.value();
    check_real_channels_last(V, axis, "spectral_axis");
    if (!R.is_complex() || R.rank() != 3) throw ContractError("spectral_axis: weights must be complex [M, c_in, c_out]");
    const std::size_t modes = R.dim(0), cin = R.dim(1), cout = R.dim(2);
    if (V.shape().back() != cin)
        throw ContractError("spectral_axis: input has " + std::to_string(V.shape().back()) +
                            " channels, weights expect " + std::to_string(cin));
    const AxisSplit in = split_axis(V.shape(), axis);
    if (modes == 0 || modes > max_modes(in.n))
        throw ContractError("spectral_axis: " + std::to_string(modes) + " modes exceed the spectrum of length " +
                            std::to_string(in.n));
    if (out_len == 0) throw ContractError("spectral_axis: output length must be >= 1");

    const std::size_t used = std::min(modes, max_modes(out_len));
    const std::size_t rest = in.inner / cin;
    const std::size_t positions = in.outer * rest;  // columns per mode block, in units of channels
    Shape out_shape = V.shape();
    out_shape[axis] = out_len;
    out_shape.back() = cout;
    const AxisSplit out{in.outer, out_len, rest * cout};

    auto fwd = std::make_shared<const RowMat>(forward_matrix(modes, in.n));
    auto inv = std::make_shared<const RowMat>(inverse_matrix(modes, used, in.n, out_len));

    // Split weights into real and imaginary matrices per mode.
    auto split = std::make_shared<std::pair<RowMat, RowMat>>(RowMat(modes * cin, cout), RowMat(modes * cin, cout));
    {
        auto rv = R.cvalues();
        for (std::size_t i = 0; i < rv.size(); ++i) {
            split->first.data()[i] = rv[i].real();
            split->second.data()[i] = rv[i].imag();
        }
    }

    // Spectrum X, layout [2M][outer * rest][c_in].
    const std::size_t cols_in = in.outer * in.inner;
    auto spec = std::make_shared<RowMat>(2 * modes, cols_in);
    {
        RowMat vt(in.n, cols_in);
        to_axis_major(V.values().data(), in, vt.data());
        spec->noalias() = *fwd * vt;
    }

    const std::size_t cols_out = in.outer * out.inner;
    RowMat y = RowMat::Zero(2 * modes, cols_out);
    for (std::size_t k = 0; k < used; ++k) {
        MapConstMat xr(spec->data() + k * cols_in, positions, cin);
        MapConstMat xi(spec->data() + (modes + k) * cols_in, positions, cin);
        MapConstMat rr(split->first.data() + k * cin * cout, cin, cout);
        MapConstMat ri(split->second.data() + k * cin * cout, cin, cout);
        MapMat yr(y.data() + k * cols_out, positions, cout);
        MapMat yi(y.data() + (modes + k) * cols_out, positions, cout);
        yr.noalias() = xr * rr;
        yr.noalias() -= xi * ri;
        yi.noalias() = xr * ri;
        yi.noalias() += xi * rr;
    }

    Tensor result(out_shape);
    {
        RowMat ot = *inv * y;
        from_axis_major_add(ot.data(), out, result.values().data());
    }

    return Tape::record(
        "spectral_axis", std::move(result), {v, r},
        [=](const Tensor& g, GradSink& s) {
            RowMat gt(out_len, cols_out);
            to_axis_major(g.values().data(), out, gt.data());
            const RowMat dy = inv->transpose() * gt;
            const bool want_v = s.wanted(0);
            RowMat dx;
            if (want_v) dx = RowMat::Zero(2 * modes, cols_in);
            std::span<cdouble> dr;
            if (s.wanted(1)) dr = s[1].cvalues();
            RowMat tmp_r(cin, cout), tmp_i(cin, cout);
            for (std::size_t k = 0; k < used; ++k) {
                MapConstMat dyr(dy.data() + k * cols_out, positions, cout);
                MapConstMat dyi(dy.data() + (modes + k) * cols_out, positions, cout);
                MapConstMat rr(split->first.data() + k * cin * cout, cin, cout);
                MapConstMat ri(split->second.data() + k * cin * cout, cin, cout);
                if (!dr.empty()) {
                    MapConstMat xr(spec->data() + k * cols_in, positions, cin);
                    MapConstMat xi(spec->data() + (modes + k) * cols_in, positions, cin);
                    tmp_r.noalias() = xr.transpose() * dyr;
                    tmp_r.noalias() += xi.transpose() * dyi;
                    tmp_i.noalias() = xr.transpose() * dyi;
                    tmp_i.noalias() -= xi.transpose() * dyr;
                    cdouble* d = dr.data() + k * cin * cout;
                    for (std::size_t i = 0; i < cin * cout; ++i) d[i] += cdouble(tmp_r.data()[i], tmp_i.data()[i]);
                }
                if (want_v) {
                    MapMat dxr(dx.data() + k * cols_in, positions, cin);
                    MapMat dxi(dx.data() + (modes + k) * cols_in, positions, cin);
                    dxr.noalias() = dyr * rr.transpose();
                    dxr.noalias() += dyi * ri.transpose();
                    dxi.noalias() = dyi * rr.transpose();
                    dxi.noalias() -= dyr * ri.transpose();
                }
            }
            if (want_v) {
                const RowMat dvt = fwd->transpose() * dx;
                from_axis_major_add(dvt.data(), in, s[0].values().data());
            }
        });
}

Var modify_dimensions(const Var& v, std::size_t axis, std::size_t new_len) {
    const Tensor& V = v.value();
    check_real_channels_last(V, axis, "modify_dimensions");
    if (new_len == 0) throw ContractError("modify_dimensions: new length must be >= 1");
    const AxisSplit in = split_axis(V.shape(), axis);
    if (new_len == in.n) return v;

    const std::size_t used = std::min(max_modes(in.n), max_modes(new_len));
    // Composite real map: truncated forward DFT followed by the Hermitian inverse.
    auto map = std::make_shared<const RowMat>(inverse_matrix(used, used, in.n, new_len) * forward_matrix(used, in.n));
    const AxisSplit out{in.outer, new_len, in.inner};
    Shape out_shape = V.shape();
    out_shape[axis] = new_len;

    Tensor result(out_shape);
    {
        RowMat vt(in.n, in.outer * in.inner);
        to_axis_major(V.values().data(), in, vt.data());
        const RowMat ot = *map * vt;
        from_axis_major_add(ot.data(), out, result.values().data());
    }
    return Tape::record("modify_dimensions", std::move(result), {v}, [=](const Tensor& g, GradSink& s) {
        if (!s.wanted(0)) return;
        RowMat gt(new_len, out.outer * out.inner);
        to_axis_major(g.values().data(), out, gt.data());
        const RowMat dvt = map->transpose() * gt;
        from_axis_major_add(dvt.data(), in, s[0].values().data());
    });
}

Var spectral_conv(const Var& v, const Var& r1, const Var& r2, const Var& r3, std::size_t out_len3) {
    if (v.value().rank() != 4) throw ContractError("spectral_conv: expected [n1, n2, n3, c] input");
    Var t12 = add(spectral_axis(v, r1, 0, v.shape()[0]), spectral_axis(v, r2, 1, v.shape()[1]));
    t12 = modify_dimensions(t12, 2, out_len3);
    return add(t12, spectral_axis(v, r3, 2, out_len3));
}

}  // namespace mifno
