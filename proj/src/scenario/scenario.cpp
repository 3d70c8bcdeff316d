#include "mifno/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "mifno/errors.hpp"
#include "mifno/fft.hpp"

namespace mifno {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// (Vs, rho) pairs of the Le Teil 1D model, sorted by Vs.
constexpr std::array<std::array<double, 2>, 5> kDensityTable{{
    {1200.0, 1923.0},
    {2100.0, 2329.0},
    {2300.0, 2380.0},
    {3500.0, 2706.0},
    {4500.0, 3170.0},
}};

double covariance(CorrelationKernel k, const std::array<double, 3>& d, const std::array<double, 3>& l) {
    switch (k) {
        case CorrelationKernel::gaussian: {
            double s = 0.0;
            for (int a = 0; a < 3; ++a) s += (d[a] / l[a]) * (d[a] / l[a]);
            return std::exp(-s);
        }
        case CorrelationKernel::exponential: {
            double s = 0.0;
            for (int a = 0; a < 3; ++a) s += (d[a] / l[a]) * (d[a] / l[a]);
            return std::exp(-std::sqrt(s));
        }
    }
    return 0.0;
}

Tensor fft3(Tensor t, FftDirection dir) {
    for (std::size_t a = 0; a < 3; ++a) t = fft_axis_kernel(t, a, dir);
    return t;
}

void check_range(const std::array<double, 2>& r, const char* what) {
    if (!(r[1] >= r[0])) throw ContractError(std::string("empty range for ") + what);
}

}  // namespace

std::string to_string(CorrelationKernel k) { return k == CorrelationKernel::gaussian ? "gaussian" : "exponential"; }

CorrelationKernel parse_kernel(const std::string& s) {
    if (s == "gaussian") return CorrelationKernel::gaussian;
    if (s == "exponential") return CorrelationKernel::exponential;
    throw ContractError("unknown correlation kernel '" + s + "'");
}

void GeneratorParams::validate() const {
    if (cells == 0 || !(domain_length > 0.0)) throw ContractError("generator: empty domain");
    if (max_layers == 0) throw ContractError("generator: max_layers must be >= 1");
    if (!(heterogeneous_thickness > 0.0) || bottom_thickness < 0.0) throw ContractError("generator: bad thickness");
    if (corr_lengths.empty()) throw ContractError("generator: no correlation lengths");
    for (double l : corr_lengths)
        if (!(l > 0.0)) throw ContractError("generator: correlation lengths must be positive");
    check_range(mean_vs_range, "mean_vs");
    check_range(source_x, "source_x");
    check_range(source_y, "source_y");
    check_range(source_z, "source_z");
    check_range(strike, "strike");
    check_range(dip, "dip");
    check_range(rake, "rake");
    if (!(vs_max >= vs_min) || !(vs_min > 0.0)) throw ContractError("generator: bad clip bounds");
    if (!(rise_time > 0.0)) throw ContractError("generator: rise_time must be positive");
}

std::vector<LayerSpec> sample_layered_model(Philox& rng, const GeneratorParams& p) {
    p.validate();
    const std::size_t n = 1 + rng.uniform_int(p.max_layers);
    std::vector<double> cuts(n - 1);
    for (auto& c : cuts) c = rng.uniform(0.0, p.heterogeneous_thickness);
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(p.heterogeneous_thickness);
    std::vector<LayerSpec> layers;
    double top = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        LayerSpec l;
        l.thickness = cuts[i] - top;
        top = cuts[i];
        l.mean_vs = rng.uniform(p.mean_vs_range[0], p.mean_vs_range[1]);
        l.cv = std::abs(rng.normal(p.cv_mean, p.cv_sd));
        for (auto& c : l.corr_length) c = p.corr_lengths[rng.uniform_int(p.corr_lengths.size())];
        layers.push_back(l);
    }
    if (p.bottom_thickness > 0.0) {
        LayerSpec b;
        b.thickness = p.bottom_thickness;
        b.mean_vs = p.bottom_vs;
        b.cv = 0.0;
        layers.push_back(b);
    }
    return layers;
}

Tensor gaussian_random_field(const Shape& shape, double spacing, const std::array<double, 3>& corr_length,
                             Philox& rng, CorrelationKernel kernel) {
    if (shape.size() != 3) throw ContractError("gaussian_random_field: shape must be 3-D");
    if (!(spacing > 0.0)) throw ContractError("gaussian_random_field: spacing must be positive");
    for (double l : corr_length)
        if (!(l > 0.0)) throw ContractError("gaussian_random_field: correlation length must be positive");
    Shape padded(3);
    for (int a = 0; a < 3; ++a)
        padded[a] = shape[a] + static_cast<std::size_t>(std::ceil(2.0 * corr_length[a] / spacing));

    // Spectrum of the periodized covariance, real because the covariance is even.
    Tensor cov(padded, DType::complex);
    auto cv = cov.cvalues();
    std::size_t idx = 0;
    for (std::size_t i = 0; i < padded[0]; ++i)
        for (std::size_t j = 0; j < padded[1]; ++j)
            for (std::size_t k = 0; k < padded[2]; ++k, ++idx) {
                const std::array<double, 3> d{spacing * double(std::min(i, padded[0] - i)),
                                              spacing * double(std::min(j, padded[1] - j)),
                                              spacing * double(std::min(k, padded[2] - k))};
                cv[idx] = covariance(kernel, d, corr_length);
            }
    const Tensor spectrum = fft3(std::move(cov), FftDirection::forward);

    Tensor noise(padded, DType::complex);
    for (auto& z : noise.cvalues()) z = rng.normal();
    noise = fft3(std::move(noise), FftDirection::forward);
    auto nv = noise.cvalues();
    auto sv = spectrum.cvalues();
    for (std::size_t i = 0; i < nv.size(); ++i) nv[i] *= std::sqrt(std::max(sv[i].real(), 0.0));
    noise = fft3(std::move(noise), FftDirection::inverse);

    Tensor out(shape);
    auto ov = out.values();
    nv = noise.cvalues();
    idx = 0;
    for (std::size_t i = 0; i < shape[0]; ++i)
        for (std::size_t j = 0; j < shape[1]; ++j)
            for (std::size_t k = 0; k < shape[2]; ++k, ++idx)
                ov[idx] = nv[(i * padded[1] + j) * padded[2] + k].real();
    return out;
}

std::size_t layer_at_depth(const std::vector<LayerSpec>& layers, double depth) {
    if (layers.empty()) throw ContractError("empty layer table");
    double bottom = 0.0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        bottom += layers[i].thickness;
        if (depth < bottom) return i;
    }
    return layers.size() - 1;
}

double vp_from_vs(double vs) { return 1.7 * vs; }

double density_from_vs(double vs) {
    if (vs <= kDensityTable.front()[0]) return kDensityTable.front()[1];
    if (vs >= kDensityTable.back()[0]) return kDensityTable.back()[1];
    for (std::size_t i = 1; i < kDensityTable.size(); ++i)
        if (vs <= kDensityTable[i][0]) {
            const auto& a = kDensityTable[i - 1];
            const auto& b = kDensityTable[i];
            return a[1] + (b[1] - a[1]) * (vs - a[0]) / (b[0] - a[0]);
        }
    return kDensityTable.back()[1];
}

void derive_vp_rho(GeologyModel& g) {
    g.vp = Tensor(g.vs.shape());
    g.rho = Tensor(g.vs.shape());
    auto vs = g.vs.values();
    auto vp = g.vp.values();
    auto rho = g.rho.values();
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (!(vs[i] > 0.0)) throw DataError("non-positive S-wave velocity");
        vp[i] = vp_from_vs(vs[i]);
        rho[i] = density_from_vs(vs[i]);
    }
}

GeologyModel apply_heterogeneity(const std::vector<LayerSpec>& layers, const std::vector<Tensor>& fields, double dx,
                                 double vs_min, double vs_max) {
    if (fields.size() != layers.size()) throw ContractError("apply_heterogeneity: need one field per layer");
    const Shape shape = fields.front().shape();
    if (shape.size() != 3) throw ContractError("apply_heterogeneity: fields must be 3-D");
    for (const auto& f : fields) require_same_shape(f, fields.front(), "apply_heterogeneity");
    GeologyModel g;
    g.dx = dx;
    g.layers = layers;
    g.vs = Tensor(shape);
    auto vs = g.vs.values();
    std::vector<std::size_t> layer_of(shape[2]);
    for (std::size_t k = 0; k < shape[2]; ++k) layer_of[k] = layer_at_depth(layers, (double(k) + 0.5) * dx);
    for (std::size_t i = 0; i < vs.size(); ++i) {
        const LayerSpec& l = layers[layer_of[i % shape[2]]];
        const double field = fields[layer_of[i % shape[2]]].values()[i];
        double v = l.mean_vs;
        if (l.cv > 0.0) {
            const double sg = std::sqrt(std::log1p(l.cv * l.cv));
            v = l.mean_vs * std::exp(sg * field - 0.5 * sg * sg);
        }
        vs[i] = std::clamp(v, vs_min, vs_max);
    }
    derive_vp_rho(g);
    return g;
}

GeologyModel layered_geology(const std::vector<LayerSpec>& layers, std::size_t cells, double dx) {
    std::vector<LayerSpec> flat = layers;
    for (auto& l : flat) l.cv = 0.0;
    std::vector<Tensor> fields(flat.size(), Tensor({cells, cells, cells}));
    GeologyModel g = apply_heterogeneity(flat, fields, dx, 0.0, std::numeric_limits<double>::infinity());
    g.layers = layers;
    return g;
}

namespace {

GeologyModel geology_from_layers(Philox& rng, const std::vector<LayerSpec>& layers, const GeneratorParams& p) {
    const Shape shape{p.cells, p.cells, p.cells};
    std::vector<Tensor> fields;
    for (const auto& l : layers)
        fields.push_back(l.cv > 0.0 ? gaussian_random_field(shape, p.dx(), l.corr_length, rng, p.kernel)
                                    : Tensor(shape));
    return apply_heterogeneity(layers, fields, p.dx(), p.vs_min, p.vs_max);
}

}  // namespace

GeologyModel generate_geology_from_layers(std::uint64_t seed, std::uint64_t index, const std::vector<LayerSpec>& layers,
                                          const GeneratorParams& p) {
    Philox rng = make_stream(seed, index, StreamPurpose::geology);
    return geology_from_layers(rng, layers, p);
}

GeologyModel generate_geology(std::uint64_t seed, std::uint64_t index, const GeneratorParams& p) {
    Philox rng = make_stream(seed, index, StreamPurpose::geology);
    const auto layers = sample_layered_model(rng, p);
    return geology_from_layers(rng, layers, p);
}

std::vector<std::vector<double>> lhs_sample(std::size_t n, const std::vector<std::array<double, 2>>& ranges,
                                            Philox& rng) {
    if (n == 0) throw ContractError("lhs_sample: n must be >= 1");
    for (const auto& r : ranges) check_range(r, "lhs dimension");
    std::vector<std::vector<double>> pts(n, std::vector<double>(ranges.size()));
    std::vector<std::size_t> perm(n);
    for (std::size_t d = 0; d < ranges.size(); ++d) {
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
        const double lo = ranges[d][0], width = ranges[d][1] - ranges[d][0];
        for (std::size_t i = 0; i < n; ++i)
            pts[i][d] = lo + width * (double(perm[i]) + rng.uniform()) / double(n);
    }
    return pts;
}

std::array<double, 6> angles_to_moment(double strike, double dip, double rake, double m0) {
    const double f = strike * kDeg, d = dip * kDeg, l = rake * kDeg;
    const double sd = std::sin(d), cd = std::cos(d), s2d = std::sin(2 * d), c2d = std::cos(2 * d);
    const double sl = std::sin(l), cl = std::cos(l);
    const double sf = std::sin(f), cf = std::cos(f), s2f = std::sin(2 * f), c2f = std::cos(2 * f);
    const double nn = -m0 * (sd * cl * s2f + s2d * sl * sf * sf);
    const double ne = m0 * (sd * cl * c2f + 0.5 * s2d * sl * s2f);
    const double nd = -m0 * (cd * cl * cf + c2d * sl * sf);
    const double ee = m0 * (sd * cl * s2f - s2d * sl * cf * cf);
    const double ed = -m0 * (cd * cl * sf - c2d * sl * cf);
    const double dd = m0 * s2d * sl;
    return {nn, ee, dd, ne, nd, ed};
}

std::vector<SourceSpec> generate_sources(std::uint64_t seed, std::size_t n, const GeneratorParams& p) {
    p.validate();
    Philox rng = make_stream(seed, 0, StreamPurpose::lhs);
    const auto pts = lhs_sample(n, {p.source_x, p.source_y, p.source_z, p.strike, p.dip, p.rake}, rng);
    std::vector<SourceSpec> out;
    out.reserve(n);
    for (const auto& q : pts) {
        SourceSpec s;
        s.position = {q[0], q[1], q[2]};
        s.angles = std::array<double, 3>{q[3], q[4], q[5]};
        s.m0 = p.m0;
        s.rise_time = p.rise_time;
        s.moment = angles_to_moment(q[3], q[4], q[5], p.m0);
        out.push_back(s);
    }
    return out;
}

Tensor rotate_grid_90(const Tensor& t, int k) {
    if (t.rank() < 2 || t.dim(0) != t.dim(1)) throw ContractError("rotate_grid_90: horizontal grid must be square");
    k = ((k % 4) + 4) % 4;
    Tensor cur = t;
    const std::size_t n = t.dim(0);
    const std::size_t inner = t.size() / (n * n) * (t.is_complex() ? 2 : 1);
    for (int r = 0; r < k; ++r) {
        Tensor next(cur.shape(), cur.dtype());
        auto src = cur.raw();
        auto dst = next.raw();
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                std::copy_n(&src[((n - 1 - b) * n + a) * inner], inner, &dst[(a * n + b) * inner]);
        cur = std::move(next);
    }
    return cur;
}

std::array<double, 6> rotate_moment_90(const std::array<double, 6>& m, int k) {
    k = ((k % 4) + 4) % 4;
    std::array<double, 6> cur = m;
    for (int r = 0; r < k; ++r) {
        const auto [nn, ee, dd, ne, nd, ed] = cur;
        cur = {ee, nn, dd, -ne, -ed, nd};
    }
    return cur;
}

Sample rotate_sample_90(const Sample& s, int k) {
    const GeologyModel& g = s.geology;
    if (g.vs.rank() != 3 || g.vs.dim(0) != g.vs.dim(1))
        throw ContractError("rotate_sample_90: horizontal grid must be square");
    k = ((k % 4) + 4) % 4;
    Sample out = s;
    if (k == 0) return out;
    out.geology.vs = rotate_grid_90(g.vs, k);
    if (g.vp.size()) out.geology.vp = rotate_grid_90(g.vp, k);
    if (g.rho.size()) out.geology.rho = rotate_grid_90(g.rho, k);

    const double len = g.domain_length();
    for (int r = 0; r < k; ++r) {
        auto& p = out.source.position;
        p = {p[1], len - p[0], p[2]};
        if (out.source.angles) {
            auto& a = *out.source.angles;
            a[0] += 90.0;
            if (a[0] >= 360.0) a[0] -= 360.0;
        }
    }
    out.source.moment = rotate_moment_90(s.source.moment, k);

    if (s.wavefield) {
        const WaveformRecord& w = *s.wavefield;
        if (w.data.rank() != 4 || w.data.dim(3) != 3 || w.sensor_x.size() != w.sensor_y.size())
            throw ContractError("rotate_sample_90: wavefield must be [ns, ns, Nt, 3] on a square sensor grid");
        WaveformRecord r = w;
        r.data = rotate_grid_90(w.data, k);
        auto v = r.data.values();
        for (int t = 0; t < k; ++t)
            for (std::size_t i = 0; i < v.size(); i += 3) {
                const double e = v[i];
                v[i] = v[i + 1];
                v[i + 1] = -e;
            }
        for (int t = 0; t < k; ++t) {
            const std::size_t n = r.sensor_x.size();
            std::vector<double> nx = r.sensor_y, ny(n);
            for (std::size_t b = 0; b < n; ++b) ny[b] = len - r.sensor_x[n - 1 - b];
            r.sensor_x = std::move(nx);
            r.sensor_y = std::move(ny);
        }
        out.wavefield = std::move(r);
    }
    return out;
}

std::vector<LayerSpec> load_preset(const std::string& name) {
    auto layer = [](double t, double vs) {
        LayerSpec l;
        l.thickness = t;
        l.mean_vs = vs;
        return l;
    };
    if (name == "le_teil_1d")
        return {layer(600, 2100), layer(600, 3500), layer(300, 1200),
                layer(600, 2300), layer(5700, 3500), layer(1800, 4500)};
    if (name == "paper_domain") {
        // One heterogeneous layer at the centre of the generator ranges above the fixed bottom layer.
        LayerSpec top = layer(7800, 0.5 * (1785.0 + 3214.0));
        top.cv = 0.2;
        top.corr_length = {3000.0, 3000.0, 3000.0};
        return {top, layer(1800, 4500)};
    }
    if (name == "homogeneous") return {layer(9600, 2000)};
    throw ContractError("unknown preset '" + name + "' (expected le_teil_1d, paper_domain or homogeneous)");
}

}  // namespace mifno
