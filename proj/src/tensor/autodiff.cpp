#include "mifno/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "mifno/errors.hpp"

namespace mifno {

namespace {

constexpr std::size_t kNoId = static_cast<std::size_t>(-1);

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConstMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXd>;
using MapConstVec = Eigen::Map<const Eigen::VectorXd>;

void require_real(const Tensor& t, std::string_view op) {
    if (t.is_complex()) throw ContractError(std::string(op) + ": real input required");
}

}  // namespace

Var constant(Tensor value) { return Var(std::make_shared<const Tensor>(std::move(value)), nullptr, kNoId); }

Tensor& GradSink::operator[](std::size_t i) {
    const std::size_t id = inputs_[i];
    if (id == kNoId) throw ContractError("GradSink: input does not require a gradient");
    auto& slot = grads_[id];
    if (!slot) {
        const Tensor& v = *tape_.nodes_[id].value;
        slot.emplace(v.shape(), v.dtype());
    }
    return *slot;
}

bool GradSink::wanted(std::size_t i) const { return inputs_[i] != kNoId; }

Var Tape::parameter(Tensor value, std::string name) {
    Node node;
    node.op = "parameter";
    node.name = std::move(name);
    node.value = std::make_shared<const Tensor>(std::move(value));
    node.trainable = true;
    node.requires_grad = true;
    nodes_.push_back(std::move(node));
    return Var(nodes_.back().value, this, nodes_.size() - 1);
}

Var Tape::record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
    return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward) {
    Tape* tape = nullptr;
    for (const auto& in : inputs) {
        if (!in.valid() || !in.on_tape()) continue;
        if (tape && tape != in.tape()) throw ContractError(std::string(op) + ": inputs recorded on different tapes");
        tape = in.tape();
    }
    auto shared = std::make_shared<const Tensor>(std::move(value));
    if (!tape) return Var(shared, nullptr, kNoId);

    Node node;
    node.op = std::string(op);
    node.value = shared;
    node.backward = std::move(backward);
    node.requires_grad = true;
    node.inputs.reserve(inputs.size());
    for (const auto& in : inputs) node.inputs.push_back(in.valid() && in.on_tape() ? in.id() : kNoId);
    tape->nodes_.push_back(std::move(node));
    return Var(shared, tape, tape->nodes_.size() - 1);
}

std::vector<std::size_t> Tape::parameter_ids() const {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].trainable) ids.push_back(i);
    return ids;
}

Gradients Tape::backward(const Var& loss) const {
    if (!loss.valid() || loss.tape() != this || loss.id() >= nodes_.size())
        throw ContractError("backward: loss id is not on this tape");
    const Tensor& lv = *nodes_[loss.id()].value;
    if (lv.size() != 1 || lv.is_complex()) throw ContractError("backward: loss must be a real scalar");

    std::vector<std::optional<Tensor>> grads(nodes_.size());
    grads[loss.id()].emplace(Tensor::full(lv.shape(), 1.0));
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
        const Node& node = nodes_[id];
        if (!grads[id] || !node.backward) continue;
        GradSink sink(*this, node.inputs, grads);
        node.backward(*grads[id], sink);
        if (!node.trainable) grads[id].reset();
    }

    Gradients out;
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
        if (!nodes_[id].trainable) continue;
        if (grads[id]) {
            out.emplace(id, std::move(*grads[id]));
        } else {
            const Tensor& v = *nodes_[id].value;
            out.emplace(id, Tensor(v.shape(), v.dtype()));
        }
    }
    return out;
}

// Elementwise ---------------------------------------------------------------

namespace {

Var binary_same(std::string_view op, const Var& a, const Var& b) {
    require_same_shape(a.value(), b.value(), op);
    if (a.value().dtype() != b.value().dtype()) throw ContractError(std::string(op) + ": dtype mismatch");
    return {};
}

}  // namespace

Var add(const Var& a, const Var& b) {
    binary_same("add", a, b);
    Tensor out = a.value();
    out += b.value();
    return Tape::record("add", std::move(out), {a, b}, [](const Tensor& g, GradSink& s) {
        if (s.wanted(0)) s[0] += g;
        if (s.wanted(1)) s[1] += g;
    });
}

Var sub(const Var& a, const Var& b) {
    binary_same("sub", a, b);
    Tensor out = a.value();
    auto o = out.raw();
    auto y = b.value().raw();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= y[i];
    return Tape::record("sub", std::move(out), {a, b}, [](const Tensor& g, GradSink& s) {
        if (s.wanted(0)) s[0] += g;
        if (s.wanted(1)) {
            auto d = s[1].raw();
            auto gr = g.raw();
            for (std::size_t i = 0; i < d.size(); ++i) d[i] -= gr[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    binary_same("mul", a, b);
    Tensor out(a.shape(), a.value().dtype());
    if (out.is_complex()) {
        auto o = out.cvalues();
        auto x = a.value().cvalues();
        auto y = b.value().cvalues();
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
    } else {
        auto o = out.values();
        auto x = a.value().values();
        auto y = b.value().values();
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
    }
    auto av = a.shared_value();
    auto bv = b.shared_value();
    return Tape::record("mul", std::move(out), {a, b}, [av, bv](const Tensor& g, GradSink& s) {
        // d/da = conj(b) * g under the (dL/dRe + i dL/dIm) convention.
        for (int which = 0; which < 2; ++which) {
            if (!s.wanted(which)) continue;
            const Tensor& other = which == 0 ? *bv : *av;
            Tensor& d = s[which];
            if (g.is_complex()) {
                auto dd = d.cvalues();
                auto gg = g.cvalues();
                auto oo = other.cvalues();
                for (std::size_t i = 0; i < dd.size(); ++i) dd[i] += std::conj(oo[i]) * gg[i];
            } else {
                auto dd = d.values();
                auto gg = g.values();
                auto oo = other.values();
                for (std::size_t i = 0; i < dd.size(); ++i) dd[i] += oo[i] * gg[i];
            }
        }
    });
}

Var scale(const Var& a, double factor) {
    Tensor out = a.value();
    for (auto& v : out.raw()) v *= factor;
    return Tape::record("scale", std::move(out), {a}, [factor](const Tensor& g, GradSink& s) {
        if (!s.wanted(0)) return;
        auto d = s[0].raw();
        auto gr = g.raw();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * gr[i];
    });
}

double gelu_value(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

Var gelu(const Var& a) {
    require_real(a.value(), "gelu");
    Tensor out(a.shape());
    auto x = a.value().values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = gelu_value(x[i]);
    auto av = a.shared_value();
    return Tape::record("gelu", std::move(out), {a}, [av](const Tensor& g, GradSink& s) {
        if (!s.wanted(0)) return;
        auto d = s[0].values();
        auto x = av->values();
        auto gg = g.values();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += gelu_derivative(x[i]) * gg[i];
    });
}

Var relu(const Var& a) {
    require_real(a.value(), "relu");
    Tensor out(a.shape());
    auto x = a.value().values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] > 0.0 ? x[i] : 0.0;
    auto av = a.shared_value();
    return Tape::record("relu", std::move(out), {a}, [av](const Tensor& g, GradSink& s) {
        if (!s.wanted(0)) return;
        auto d = s[0].values();
        auto x = av->values();
        auto gg = g.values();
        for (std::size_t i = 0; i < d.size(); ++i)
            if (x[i] > 0.0) d[i] += gg[i];
    });
}

Var activate(const Var& a, Activation act) { return act == Activation::gelu ? gelu(a) : relu(a); }

// Reductions ----------------------------------------------------------------

Var sum(const Var& a) {
    require_real(a.value(), "sum");
    double total = 0.0;
    for (double v : a.value().values()) total += v;
    return Tape::record("sum", Tensor::scalar(total), {a}, [](const Tensor& g, GradSink& s) {
        if (!s.wanted(0)) return;
        const double gv = g.item();
        for (auto& d : s[0].values()) d += gv;
    });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

// Shape ---------------------------------------------------------------------

Var reshape(const Var& a, Shape shape) {
    Tensor out = a.value().reshaped(std::move(shape));
    return Tape::record("reshape", std::move(out), {a}, [](const Tensor& g, GradSink& s) {
        if (!s.wanted(0)) return;
        auto d = s[0].raw();
        auto gr = g.raw();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += gr[i];
    });
}

Var concat_last(std::span<const Var> parts) {
    if (parts.empty()) throw ContractError("concat_last: no inputs");
    const Shape& first = parts[0].shape();
    if (first.empty()) throw ContractError("concat_last: rank-0 input");
    const DType dtype = parts[0].value().dtype();
    require_real(parts[0].value(), "concat_last");
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        if (s.size() != first.size() || !std::equal(s.begin(), s.end() - 1, first.begin()) ||
            p.value().dtype() != dtype)
            throw ContractError("concat_last: incompatible shapes " + shape_string(first) + " and " + shape_string(s));
        widths.push_back(s.back());
        total += s.back();
    }
    Shape out_shape = first;
    out_shape.back() = total;
    Tensor out(out_shape);
    const std::size_t rows = out.size() / total;
    auto o = out.values();
    std::size_t col = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        auto src = parts[k].value().values();
        const std::size_t w = widths[k];
        for (std::size_t r = 0; r < rows; ++r) std::copy_n(src.data() + r * w, w, o.data() + r * total + col);
        col += w;
    }
    return Tape::record("concat_last", std::move(out), parts, [widths, total, rows](const Tensor& g, GradSink& s) {
        auto gg = g.values();
        std::size_t col = 0;
        for (std::size_t k = 0; k < widths.size(); ++k) {
            const std::size_t w = widths[k];
            if (s.wanted(k)) {
                auto d = s[k].values();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < w; ++c) d[r * w + c] += gg[r * total + col + c];
            }
            col += w;
        }
    });
}

Var slice_last(const Var& a, std::size_t begin, std::size_t count) {
    require_real(a.value(), "slice_last");
    const Shape& in_shape = a.shape();
    if (in_shape.empty() || begin + count > in_shape.back() || count == 0)
        throw ContractError("slice_last: range out of bounds for shape " + shape_string(in_shape));
    const std::size_t width = in_shape.back();
    Shape out_shape = in_shape;
    out_shape.back() = count;
    Tensor out(out_shape);
    const std::size_t rows = out.size() / count;
    auto src = a.value().values();
    auto o = out.values();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(src.data() + r * width + begin, count, o.data() + r * count);
    return Tape::record("slice_last", std::move(out), {a}, [=](const Tensor& g, GradSink& s) {
        if (!s.wanted(0)) return;
        auto d = s[0].values();
        auto gg = g.values();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < count; ++c) d[r * width + begin + c] += gg[r * count + c];
    });
}

// Complex -------------------------------------------------------------------

Var to_complex(const Var& a) {
    require_real(a.value(), "to_complex");
    return Tape::record("to_complex", a.value().to_complex(), {a}, [](const Tensor& g, GradSink& s) {
        if (!s.wanted(0)) return;
        auto d = s[0].values();
        auto gg = g.cvalues();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += gg[i].real();
    });
}

Var real_part(const Var& a) {
    if (!a.value().is_complex()) throw ContractError("real_part: complex input required");
    return Tape::record("real_part", a.value().real_part(), {a}, [](const Tensor& g, GradSink& s) {
        if (!s.wanted(0)) return;
        auto d = s[0].cvalues();
        auto gg = g.values();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += gg[i];
    });
}

Var fft_axis(const Var& a, std::size_t axis, FftDirection dir) {
    Tensor out = fft_axis_kernel(a.value(), axis, dir);
    const bool real_input = !a.value().is_complex();
    const double n = static_cast<double>(a.shape()[axis]);
    return Tape::record("fft_axis", std::move(out), {a}, [=](const Tensor& g, GradSink& s) {
        if (!s.wanted(0)) return;
        // Adjoint of the unnormalized forward DFT is n * inverse; adjoint of the
        // 1/n-scaled inverse is forward / n.
        Tensor back = fft_axis_kernel(g, axis, dir == FftDirection::forward ? FftDirection::inverse
                                                                            : FftDirection::forward);
        const double factor = dir == FftDirection::forward ? n : 1.0 / n;
        Tensor& d = s[0];
        auto bb = back.cvalues();
        if (real_input) {
            auto dd = d.values();
            for (std::size_t i = 0; i < dd.size(); ++i) dd[i] += factor * bb[i].real();
        } else {
            auto dd = d.cvalues();
            for (std::size_t i = 0; i < dd.size(); ++i) dd[i] += factor * bb[i];
        }
    });
}

// Linear maps ---------------------------------------------------------------

Var pointwise_linear(const Var& v, const Var& w, const Var& b) {
    const Tensor& V = v.value();
    const Tensor& W = w.value();
    require_real(V, "pointwise_linear");
    require_real(W, "pointwise_linear");
    if (V.rank() == 0 || W.rank() != 2 || V.shape().back() != W.shape()[0])
        throw ContractError("pointwise_linear: channel mismatch between input " + shape_string(V.shape()) +
                            " and weight " + shape_string(W.shape()));
    const std::size_t cin = W.shape()[0];
    const std::size_t cout = W.shape()[1];
    const bool has_bias = b.valid();
    if (has_bias && (b.shape() != Shape{cout} || b.value().is_complex()))
        throw ContractError("pointwise_linear: bias shape " + shape_string(b.shape()) + " does not match c_out " +
                            std::to_string(cout));
    const std::size_t rows = V.size() / cin;
    Shape out_shape = V.shape();
    out_shape.back() = cout;
    Tensor out(out_shape);
    MapConstMat vm(V.values().data(), rows, cin);
    MapConstMat wm(W.values().data(), cin, cout);
    MapMat om(out.values().data(), rows, cout);
    om.noalias() = vm * wm;
    if (has_bias) om.rowwise() += MapConstVec(b.value().values().data(), cout).transpose();

    auto vv = v.shared_value();
    auto wv = w.shared_value();
    return Tape::record("pointwise_linear", std::move(out), {v, w, b},
                        [vv, wv, rows, cin, cout, has_bias](const Tensor& g, GradSink& s) {
                            MapConstMat gm(g.values().data(), rows, cout);
                            if (s.wanted(0)) {
                                MapMat dv(s[0].values().data(), rows, cin);
                                dv.noalias() += gm * MapConstMat(wv->values().data(), cin, cout).transpose();
                            }
                            if (s.wanted(1)) {
                                MapMat dw(s[1].values().data(), cin, cout);
                                dw.noalias() += MapConstMat(vv->values().data(), rows, cin).transpose() * gm;
                            }
                            if (has_bias && s.wanted(2)) {
                                MapVec db(s[2].values().data(), cout);
                                db += gm.colwise().sum().transpose();
                            }
                        });
}

Var pointwise_linear(const Var& v, const Var& w) { return pointwise_linear(v, w, Var{}); }

namespace {

// Shared 3^D-tap convolution over a channels-last grid. The innermost spatial
// axis is processed as contiguous row segments so each tap is a small GEMM.
template <std::size_t D>
Var conv_nd(std::string_view op, const Var& v, const Var& k, const Var& b) {
    const Tensor& V = v.value();
    const Tensor& K = k.value();
    require_real(V, op);
    require_real(K, op);
    if (V.rank() != D + 1 || K.rank() != D + 2)
        throw ContractError(std::string(op) + ": expected input rank " + std::to_string(D + 1) + " and kernel rank " +
                            std::to_string(D + 2));
    for (std::size_t a = 0; a < D; ++a)
        if (K.shape()[a] != 3) throw ContractError(std::string(op) + ": kernel size must be 3 along every axis");
    const std::size_t cin = V.shape()[D];
    const std::size_t cout = K.shape()[D + 1];
    if (K.shape()[D] != cin)
        throw ContractError(std::string(op) + ": channel mismatch, input has " + std::to_string(cin) +
                            " channels, kernel expects " + std::to_string(K.shape()[D]));
    const bool has_bias = b.valid();
    if (has_bias && b.shape() != Shape{cout}) throw ContractError(std::string(op) + ": bias shape mismatch");

    std::array<std::size_t, D> dims{};
    for (std::size_t a = 0; a < D; ++a) dims[a] = V.shape()[a];
    Shape out_shape(V.shape().begin(), V.shape().end() - 1);
    out_shape.push_back(cout);

    // Visits (input row segment, output row segment, tap) triples.
    auto for_each_segment = [dims, cin, cout](auto&& fn) {
        constexpr std::size_t taps = D == 2 ? 9 : 27;
        const std::size_t last = dims[D - 1];
        std::size_t outer_count = 1;
        for (std::size_t a = 0; a + 1 < D; ++a) outer_count *= dims[a];
        for (std::size_t tap = 0; tap < taps; ++tap) {
            std::array<int, D> off{};
            std::size_t t = tap;
            for (std::size_t a = D; a-- > 0;) {
                off[a] = static_cast<int>(t % 3) - 1;
                t /= 3;
            }
            const int o_last = off[D - 1];
            const std::size_t x0 = o_last < 0 ? 1 : 0;
            const std::size_t x1 = o_last > 0 ? last - 1 : last;
            if (x1 <= x0) continue;
            for (std::size_t outer = 0; outer < outer_count; ++outer) {
                // Decode outer index into the leading spatial coordinates.
                std::size_t rem = outer;
                std::size_t in_outer = 0;
                bool valid = true;
                std::array<std::size_t, D> coord{};
                for (std::size_t a = D - 1; a-- > 0;) {
                    coord[a] = rem % dims[a];
                    rem /= dims[a];
                }
                for (std::size_t a = 0; a + 1 < D; ++a) {
                    const long c = static_cast<long>(coord[a]) + off[a];
                    if (c < 0 || c >= static_cast<long>(dims[a])) {
                        valid = false;
                        break;
                    }
                    in_outer = in_outer * dims[a] + static_cast<std::size_t>(c);
                }
                if (!valid) continue;
                const std::size_t out_row = outer * last + x0;
                const std::size_t in_row = in_outer * last + static_cast<std::size_t>(static_cast<long>(x0) + o_last);
                fn(tap, in_row * cin, out_row * cout, x1 - x0);
            }
        }
    };

    Tensor out(out_shape);
    {
        auto vin = V.values();
        auto kk = K.values();
        auto o = out.values();
        for_each_segment([&](std::size_t tap, std::size_t in_off, std::size_t out_off, std::size_t len) {
            MapConstMat xin(vin.data() + in_off, len, cin);
            MapConstMat kt(kk.data() + tap * cin * cout, cin, cout);
            MapMat y(o.data() + out_off, len, cout);
            y.noalias() += xin * kt;
        });
        if (has_bias) {
            MapMat om(o.data(), out.size() / cout, cout);
            om.rowwise() += MapConstVec(b.value().values().data(), cout).transpose();
        }
    }

    auto vv = v.shared_value();
    auto kv = k.shared_value();
    return Tape::record(op, std::move(out), {v, k, b},
                        [vv, kv, cin, cout, has_bias, for_each_segment](const Tensor& g, GradSink& s) {
                            auto gg = g.values();
                            if (s.wanted(0)) {
                                auto d = s[0].values();
                                auto kk = kv->values();
                                for_each_segment([&](std::size_t tap, std::size_t in_off, std::size_t out_off,
                                                     std::size_t len) {
                                    MapMat dx(d.data() + in_off, len, cin);
                                    dx.noalias() += MapConstMat(gg.data() + out_off, len, cout) *
                                                    MapConstMat(kk.data() + tap * cin * cout, cin, cout).transpose();
                                });
                            }
                            if (s.wanted(1)) {
                                auto dk = s[1].values();
                                auto x = vv->values();
                                for_each_segment([&](std::size_t tap, std::size_t in_off, std::size_t out_off,
                                                     std::size_t len) {
                                    MapMat dkt(dk.data() + tap * cin * cout, cin, cout);
                                    dkt.noalias() += MapConstMat(x.data() + in_off, len, cin).transpose() *
                                                     MapConstMat(gg.data() + out_off, len, cout);
                                });
                            }
                            if (has_bias && s.wanted(2)) {
                                MapVec db(s[2].values().data(), cout);
                                db += MapConstMat(gg.data(), g.size() / cout, cout).colwise().sum().transpose();
                            }
                        });
}

}  // namespace

Var conv2d(const Var& v, const Var& k, const Var& b) { return conv_nd<2>("conv2d", v, k, b); }
Var conv3d(const Var& v, const Var& k, const Var& b) { return conv_nd<3>("conv3d", v, k, b); }

}  // namespace mifno
