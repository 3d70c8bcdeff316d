#include "mifno/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mifno/errors.hpp"

namespace mifno {

std::string to_string(SourceMode m) {
    switch (m) {
        case SourceMode::angles: return "angles";
        case SourceMode::moment: return "moment";
        case SourceMode::position_only: return "position_only";
        case SourceMode::none: return "none";
    }
    return "?";
}

std::string to_string(Baseline b) {
    switch (b) {
        case Baseline::mifno: return "mifno";
        case Baseline::ffno_cubes: return "ffno_cubes";
        case Baseline::ffno_binary: return "ffno_binary";
        case Baseline::ffno_plain: return "ffno_plain";
    }
    return "?";
}

SourceMode parse_source_mode(const std::string& s) {
    for (auto m : {SourceMode::angles, SourceMode::moment, SourceMode::position_only, SourceMode::none})
        if (to_string(m) == s) return m;
    throw ContractError("unknown source mode '" + s + "'");
}

Baseline parse_baseline(const std::string& s) {
    for (auto b : {Baseline::mifno, Baseline::ffno_cubes, Baseline::ffno_binary, Baseline::ffno_plain})
        if (to_string(b) == s) return b;
    throw ContractError("unknown model variant '" + s + "'");
}

std::size_t source_vector_length(SourceMode m) {
    switch (m) {
        case SourceMode::angles: return 6;
        case SourceMode::moment: return 9;
        case SourceMode::position_only: return 3;
        case SourceMode::none: return 0;
    }
    return 0;
}

ModelConfig ModelConfig::paper() { return ModelConfig{}; }

void ModelConfig::validate() const {
    if (branch_layers < 1 || branch_layers >= layers)
        throw ContractError("model: need 1 <= K < L, got K=" + std::to_string(branch_layers) +
                            " L=" + std::to_string(layers));
    if (d_v == 0 || q_hidden == 0 || source_hidden == 0 || source_conv_channels == 0)
        throw ContractError("model: channel widths must be positive");
    for (std::size_t a = 0; a < 3; ++a)
        if (resolution[a] == 0 || modes[a] == 0) throw ContractError("model: resolution and modes must be positive");
    if (modes[0] > max_modes(resolution[0]) || modes[1] > max_modes(resolution[1]))
        throw ContractError("model: horizontal modes exceed the spectrum of the input resolution");
    if (out_len < resolution[2]) throw ContractError("model: output length shorter than the depth axis");
    if (baseline == Baseline::mifno && source_mode == SourceMode::none)
        throw ContractError("model: the two-branch model needs a source encoding");
    if (baseline == Baseline::ffno_cubes && source_mode != SourceMode::angles)
        throw ContractError("model: ffno_cubes needs the position+angles source encoding");
    if (baseline == Baseline::ffno_binary && source_mode == SourceMode::none)
        throw ContractError("model: ffno_binary needs the source position");
}

namespace {

std::size_t round_even(double x) { return static_cast<std::size_t>(std::llround(x / 2.0)) * 2; }

std::size_t widened(const ModelConfig& cfg, std::size_t layer) {
    return layer < cfg.branch_layers ? cfg.d_v : 3 * cfg.d_v;
}

}  // namespace

std::vector<LayerConfig> layer_schedule(const ModelConfig& cfg) {
    cfg.validate();
    std::vector<LayerConfig> out(cfg.layers);
    std::size_t n3 = cfg.resolution[2];
    const std::size_t grow = cfg.layers - cfg.branch_layers;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        LayerConfig& lc = out[l];
        lc.d_v = widened(cfg, l);
        lc.mlp_hidden = cfg.mlp_hidden ? cfg.mlp_hidden : lc.d_v;
        lc.modes = {cfg.modes[0], cfg.modes[1], l == 0 ? cfg.modes3_first : cfg.modes[2]};
        lc.modes[2] = std::min(lc.modes[2], max_modes(n3));
        if (l < cfg.branch_layers) {
            lc.out_len_axis3 = 0;
        } else {
            const std::size_t step = l - cfg.branch_layers + 1;
            const double target = static_cast<double>(cfg.resolution[2]) +
                                  static_cast<double>(cfg.out_len - cfg.resolution[2]) * static_cast<double>(step) /
                                      static_cast<double>(grow);
            lc.out_len_axis3 = step == grow ? cfg.out_len : std::max<std::size_t>(2, round_even(target));
            n3 = lc.out_len_axis3;
        }
    }
    return out;
}

std::array<std::size_t, 3> effective_source_modes(const ModelConfig& cfg) {
    std::array<std::size_t, 3> m = cfg.source_modes;
    if (m[0] == 0) m[0] = cfg.modes[0];
    if (m[1] == 0) m[1] = cfg.modes[1];
    if (m[2] == 0) m[2] = std::max<std::size_t>(1, cfg.resolution[2] / 2);
    return m;
}

Tensor resample_grid(const Tensor& grid, const Shape& shape) {
    if (grid.rank() != 3 || shape.size() != 3) throw ContractError("resample_grid: rank-3 grids only");
    if (grid.shape() == shape) return grid;
    Tensor out(shape);
    auto coord = [](std::size_t i, std::size_t n_out, std::size_t n_in, std::size_t& i0, double& f) {
        // Cell centres of the new grid mapped into index space of the old one.
        double x = (static_cast<double>(i) + 0.5) * static_cast<double>(n_in) / static_cast<double>(n_out) - 0.5;
        x = std::clamp(x, 0.0, static_cast<double>(n_in - 1));
        i0 = std::min(static_cast<std::size_t>(x), n_in > 1 ? n_in - 2 : 0);
        f = n_in > 1 ? x - static_cast<double>(i0) : 0.0;
    };
    const std::size_t n0 = grid.dim(0), n1 = grid.dim(1), n2 = grid.dim(2);
    auto at = [&](std::size_t a, std::size_t b, std::size_t c) {
        return grid.values()[(std::min(a, n0 - 1) * n1 + std::min(b, n1 - 1)) * n2 + std::min(c, n2 - 1)];
    };
    for (std::size_t i = 0; i < shape[0]; ++i) {
        std::size_t a;
        double fa;
        coord(i, shape[0], n0, a, fa);
        for (std::size_t j = 0; j < shape[1]; ++j) {
            std::size_t b;
            double fb;
            coord(j, shape[1], n1, b, fb);
            for (std::size_t k = 0; k < shape[2]; ++k) {
                std::size_t c;
                double fc;
                coord(k, shape[2], n2, c, fc);
                double acc = 0.0;
                for (int da = 0; da < 2; ++da)
                    for (int db = 0; db < 2; ++db)
                        for (int dc = 0; dc < 2; ++dc) {
                            const double w = (da ? fa : 1 - fa) * (db ? fb : 1 - fb) * (dc ? fc : 1 - fc);
                            if (w != 0.0) acc += w * at(a + da, b + db, c + dc);
                        }
                out.at({i, j, k}) = acc;
            }
        }
    }
    return out;
}

Tensor normalize_geology(const Tensor& a, const NormalizationSpec& spec) {
    if (!spec.ready()) throw ContractError("normalize_geology: missing dataset statistics");
    const Tensor mean = resample_grid(spec.mean_geology, a.shape());
    Tensor out(a.shape());
    const double s = 1.0 / (4.0 * spec.std_geology);
    auto x = a.values();
    auto m = mean.values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = (x[i] - m[i]) * s;
    return out;
}

Tensor denormalize_geology(const Tensor& a, const NormalizationSpec& spec) {
    if (!spec.ready()) throw ContractError("denormalize_geology: missing dataset statistics");
    const Tensor mean = resample_grid(spec.mean_geology, a.shape());
    Tensor out(a.shape());
    const double s = 4.0 * spec.std_geology;
    auto x = a.values();
    auto m = mean.values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * s + m[i];
    return out;
}

std::vector<double> normalize_source(const SourceSpec& s, double domain_length, SourceMode mode) {
    if (mode == SourceMode::none) return {};
    std::vector<double> v{s.position[0] / domain_length, s.position[1] / domain_length,
                          std::abs(s.position[2]) / domain_length};
    if (mode == SourceMode::angles) {
        if (!s.angles) throw ContractError("normalize_source: angle encoding requested for a moment-only source");
        v.push_back((*s.angles)[0] / 360.0);
        v.push_back((*s.angles)[1] / 90.0);
        v.push_back((*s.angles)[2] / 360.0);
    } else if (mode == SourceMode::moment) {
        if (!(s.m0 > 0.0)) throw ContractError("normalize_source: scalar moment must be positive");
        for (double m : s.moment) v.push_back(m / s.m0);
    }
    return v;
}

double output_norm_factor(double vs_at_source, double z_s, double domain_length) {
    if (!(vs_at_source > 0.0)) throw ContractError("output_norm_factor: velocity must be positive");
    const double q = domain_length / 4.0;
    return vs_at_source * std::sqrt(z_s * z_s + q * q);
}

double vs_at(const Tensor& vs, double dx, const std::array<double, 3>& position) {
    const double coords[3] = {position[0], position[1], std::abs(position[2])};
    std::size_t idx[3];
    for (int a = 0; a < 3; ++a) {
        const double f = std::floor(coords[a] / dx);
        idx[a] = static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(vs.dim(a) - 1)));
    }
    return vs.at({idx[0], idx[1], idx[2]});
}

double wavefield_scale(const NormalizationSpec& spec, const GeologyModel& g, const SourceSpec& s) {
    const double c = output_norm_factor(vs_at(g.vs, g.dx, s.position), s.position[2], spec.domain_length);
    return spec.output_scale * c;
}

// Weights -------------------------------------------------------------------

namespace {

std::string layer_name(std::size_t l) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "layer%02zu", l + 1);
    return buf;
}

std::size_t extra_input_channels(const ModelConfig& cfg) {
    switch (cfg.baseline) {
        case Baseline::ffno_cubes: return 6;
        case Baseline::ffno_binary: return 1;
        default: return 0;
    }
}

}  // namespace

WeightMap init_weights(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Philox rng = make_stream(seed, 0, StreamPurpose::init);
    WeightMap w;
    init_linear(w, "uplift", 4 + extra_input_channels(cfg), cfg.d_v, rng);
    const auto schedule = layer_schedule(cfg);
    for (std::size_t l = 0; l < schedule.size(); ++l) init_fourier_layer(w, layer_name(l), schedule[l], rng);
    init_project(w, "project", 3 * cfg.d_v, cfg.q_hidden, rng);
    if (cfg.baseline == Baseline::mifno) {
        const auto m = effective_source_modes(cfg);
        const std::size_t c = cfg.source_conv_channels;
        init_linear(w, "source/dense1", source_vector_length(cfg.source_mode), cfg.source_hidden, rng);
        init_linear(w, "source/dense2", cfg.source_hidden, 4 * m[0] * m[1], rng);
        init_conv(w, "source/conv2d_1", 2, 1, c, rng);
        init_conv(w, "source/conv2d_2", 2, c, 2 * m[2], rng);
        init_conv(w, "source/conv3d_1", 3, 1, c, rng);
        init_conv(w, "source/conv3d_2", 3, c, cfg.d_v, rng);
    } else {
        init_linear(w, "widen", cfg.d_v, 3 * cfg.d_v, rng);
    }
    return w;
}

Var source_branch(const std::vector<double>& s_norm, const ParamBinding& p, const ModelConfig& cfg,
                  const std::array<std::size_t, 3>& target) {
    const std::size_t len = source_vector_length(cfg.source_mode);
    if (s_norm.size() != len)
        throw ContractError("source_branch: source vector has " + std::to_string(s_norm.size()) +
                            " entries, the " + to_string(cfg.source_mode) + " encoding needs " + std::to_string(len));
    const auto m = effective_source_modes(cfg);
    const Activation act = cfg.activation;
    Var x = constant(Tensor({len}, s_norm));
    Var h = activate(dense(x, p, "source/dense1"), act);
    h = dense(h, p, "source/dense2");
    Var plane = reshape(h, {2 * m[0], 2 * m[1], 1});
    plane = activate(conv2d(plane, p("source/conv2d_1/k"), p("source/conv2d_1/b")), act);
    plane = conv2d(plane, p("source/conv2d_2/k"), p("source/conv2d_2/b"));
    Var cube = reshape(plane, {2 * m[0], 2 * m[1], 2 * m[2], 1});
    cube = activate(conv3d(cube, p("source/conv3d_1/k"), p("source/conv3d_1/b")), act);
    cube = conv3d(cube, p("source/conv3d_2/k"), p("source/conv3d_2/b"));
    for (std::size_t a = 0; a < 3; ++a) cube = modify_dimensions(cube, a, target[a]);
    return cube;
}

Var combine_branches(const Var& vk, const Var& vs) {
    if (vk.shape() != vs.shape())
        throw ContractError("combine_branches: shape mismatch " + shape_string(vk.shape()) + " vs " +
                            shape_string(vs.shape()));
    const std::vector<Var> parts{add(vk, vs), sub(vk, vs), mul(vk, vs)};
    return concat_last(parts);
}

namespace {

Var run_layers(Var v, const ParamBinding& p, const std::vector<LayerConfig>& schedule, std::size_t begin,
               std::size_t end, Activation act) {
    for (std::size_t l = begin; l < end; ++l) {
        LayerConfig lc = schedule[l];
        if (lc.out_len_axis3 == 0) lc.out_len_axis3 = v.shape()[2];
        v = fourier_layer(v, p, layer_name(l), lc, act);
    }
    return v;
}

void check_geology(const Tensor& geology, const ModelConfig& cfg) {
    if (geology.rank() != 3) throw ContractError("model: geology must be a rank-3 grid");
    if (cfg.modes[0] > max_modes(geology.dim(0)) || cfg.modes[1] > max_modes(geology.dim(1)))
        throw ContractError("model: geology resolution " + shape_string(geology.shape()) +
                            " is too coarse for the configured modes");
}

}  // namespace

Var mifno_forward(const Tensor& geology, const std::vector<double>& s_norm, const ParamBinding& p,
                  const ModelConfig& cfg) {
    check_geology(geology, cfg);
    const auto schedule = layer_schedule(cfg);
    Var v = uplift(geology, p, "uplift");
    v = run_layers(v, p, schedule, 0, cfg.branch_layers, cfg.activation);
    Var vs = source_branch(s_norm, p, cfg, {v.shape()[0], v.shape()[1], v.shape()[2]});
    v = combine_branches(v, vs);
    v = run_layers(v, p, schedule, cfg.branch_layers, cfg.layers, cfg.activation);
    return project(v, p, "project", cfg.activation);
}

Tensor baseline_input(const Tensor& geology, const std::vector<double>& s_norm, const ModelConfig& cfg) {
    check_geology(geology, cfg);
    if (cfg.baseline == Baseline::mifno) throw ContractError("baseline_input: configuration selects mifno");
    const std::size_t len = source_vector_length(cfg.source_mode);
    if (cfg.baseline != Baseline::ffno_plain && s_norm.size() != len)
        throw ContractError("baseline_input: source vector length mismatch");
    Tensor base = uplift_input(geology);
    const std::size_t extra = extra_input_channels(cfg);
    const std::size_t s0 = geology.dim(0), s1 = geology.dim(1), s2 = geology.dim(2);
    Tensor input({s0, s1, s2, 4 + extra});
    {
        auto b = base.values();
        auto in = input.values();
        const std::size_t cells = s0 * s1 * s2;
        for (std::size_t i = 0; i < cells; ++i) {
            std::copy_n(b.data() + 4 * i, 4, in.data() + (4 + extra) * i);
            if (cfg.baseline == Baseline::ffno_cubes)
                for (std::size_t c = 0; c < 6; ++c) in[(4 + extra) * i + 4 + c] = s_norm[c];
        }
        if (cfg.baseline == Baseline::ffno_binary) {
            std::size_t idx[3];
            const std::size_t dims[3] = {s0, s1, s2};
            for (int a = 0; a < 3; ++a) {
                // Nearest cell centre; a tie goes to the lower index.
                const double x = s_norm[a] * static_cast<double>(dims[a]) - 0.5;
                const double r = std::ceil(x - 0.5);
                idx[a] = static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(dims[a] - 1)));
            }
            in[(4 + extra) * ((idx[0] * s1 + idx[1]) * s2 + idx[2]) + 4] = 1.0;
        }
    }
    return input;
}

Var ffno_baseline_forward(const Tensor& geology, const std::vector<double>& s_norm, const ParamBinding& p,
                          const ModelConfig& cfg) {
    Tensor input = baseline_input(geology, s_norm, cfg);
    const auto schedule = layer_schedule(cfg);
    Var v = pointwise_linear(constant(std::move(input)), p("uplift/w"), p("uplift/b"));
    v = run_layers(v, p, schedule, 0, cfg.branch_layers, cfg.activation);
    v = pointwise_linear(v, p("widen/w"), p("widen/b"));
    v = run_layers(v, p, schedule, cfg.branch_layers, cfg.layers, cfg.activation);
    return project(v, p, "project", cfg.activation);
}

Var model_forward(const Tensor& geology, const std::vector<double>& s_norm, const ParamBinding& p,
                  const ModelConfig& cfg) {
    return cfg.baseline == Baseline::mifno ? mifno_forward(geology, s_norm, p, cfg)
                                           : ffno_baseline_forward(geology, s_norm, p, cfg);
}

std::size_t count_parameters(const WeightMap& w) {
    std::size_t n = 0;
    for (const auto& [name, t] : w) n += t.raw().size();
    return n;
}

std::map<std::string, std::size_t> count_parameters_by_group(const WeightMap& w) {
    std::map<std::string, std::size_t> out;
    for (const auto& [name, t] : w) out[name.substr(0, name.find('/'))] += t.raw().size();
    return out;
}

}  // namespace mifno
