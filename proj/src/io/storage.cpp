#include "mifno/storage.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "mifno/errors.hpp"

namespace mifno {

// Dataset containers --------------------------------------------------------

namespace {

Tensor stack(const std::vector<const Tensor*>& parts, const char* what) {
    const Shape inner = parts.front()->shape();
    Shape shape{parts.size()};
    shape.insert(shape.end(), inner.begin(), inner.end());
    Tensor out(shape);
    auto dst = out.values();
    std::size_t off = 0;
    for (const Tensor* t : parts) {
        if (t->shape() != inner)
            throw ContractError(std::string(what) + ": arrays differ in shape (" + shape_string(t->shape()) + " vs " +
                                shape_string(inner) + ")");
        std::copy(t->values().begin(), t->values().end(), dst.begin() + std::ptrdiff_t(off));
        off += t->size();
    }
    return out;
}

Tensor unstack(const Tensor& t, std::size_t i) {
    const Shape inner(t.shape().begin() + 1, t.shape().end());
    Tensor out(inner);
    const std::size_t n = out.size();
    std::copy_n(t.values().begin() + std::ptrdiff_t(i * n), n, out.values().begin());
    return out;
}

Tensor rows(const std::vector<std::vector<double>>& r, std::size_t width) {
    Tensor t({r.size(), width});
    for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = 0; j < width; ++j) t.at({i, j}) = r[i][j];
    return t;
}

const Entry& require(const Container& c, const std::string& name) {
    if (!c.has(name)) throw DataError("dataset container: missing entry '" + name + "'");
    return c.at(name);
}

std::size_t leading(const Tensor& t, const std::string& name, std::size_t rank) {
    if (t.rank() != rank) throw DataError("dataset container: '" + name + "' has rank " + std::to_string(t.rank()));
    return t.dim(0);
}

}  // namespace

Container to_container(const DatasetFile& d, bool wavefield_f32) {
    Container c;
    if (!d.geologies.empty()) {
        std::vector<const Tensor*> vs, vp, rho;
        for (const auto& g : d.geologies) {
            if (g.dx != d.geologies.front().dx) throw ContractError("dataset: geologies differ in cell size");
            vs.push_back(&g.vs);
            vp.push_back(&g.vp);
            rho.push_back(&g.rho);
        }
        c.add(Entry::from_tensor("geology/vs", stack(vs, "geology/vs")));
        c.add(Entry::from_tensor("geology/vp", stack(vp, "geology/vp")));
        c.add(Entry::from_tensor("geology/rho", stack(rho, "geology/rho")));
        c.add(Entry::scalar("geology/dx", d.geologies.front().dx));
    }
    if (!d.sources.empty()) {
        std::vector<std::vector<double>> pos, ang, mom;
        std::vector<double> m0, rise;
        for (const auto& s : d.sources) {
            pos.push_back({s.position.begin(), s.position.end()});
            if (s.angles)
                ang.push_back({s.angles->begin(), s.angles->end()});
            else
                ang.push_back(std::vector<double>(3, std::numeric_limits<double>::quiet_NaN()));
            mom.push_back({s.moment.begin(), s.moment.end()});
            m0.push_back(s.m0);
            rise.push_back(s.rise_time);
        }
        const std::size_t n = d.sources.size();
        c.add(Entry::from_tensor("source/position", rows(pos, 3)));
        c.add(Entry::from_tensor("source/angles", rows(ang, 3)));
        c.add(Entry::from_tensor("source/moment", rows(mom, 6)));
        c.add(Entry::from_tensor("source/m0", Tensor({n}, m0)));
        c.add(Entry::from_tensor("source/rise_time", Tensor({n}, rise)));
    }
    std::string provenance = d.provenance;
    if (!d.wavefields.empty()) {
        std::vector<const Tensor*> data;
        for (const auto& w : d.wavefields) {
            if (w.dt_out != d.wavefields.front().dt_out) throw ContractError("dataset: wavefields differ in time step");
            data.push_back(&w.data);
        }
        const Tensor stacked = stack(data, "wavefield/data");
        c.add(wavefield_f32 ? Entry::from_tensor_f32("wavefield/data", stacked)
                            : Entry::from_tensor("wavefield/data", stacked));
        if (wavefield_f32 && provenance.find("f32") == std::string::npos) provenance += "+wavefield_f32";
        c.add(Entry::scalar("wavefield/dt", d.wavefields.front().dt_out));
        const auto& w0 = d.wavefields.front();
        c.add(Entry::from_tensor("wavefield/sensor_x", Tensor({w0.sensor_x.size()}, w0.sensor_x)));
        c.add(Entry::from_tensor("wavefield/sensor_y", Tensor({w0.sensor_y.size()}, w0.sensor_y)));
    }
    c.add(Entry::from_i64("meta/seed", {}, {d.seed}));
    c.add(Entry::from_string("meta/provenance", provenance));
    c.add(Entry::from_i64("meta/augmented", {}, {d.augmented ? 1 : 0}));
    return c;
}

DatasetFile from_container(const Container& c) {
    DatasetFile d;
    if (c.has("meta/seed")) d.seed = c.at("meta/seed").to_i64().at(0);
    if (c.has("meta/provenance")) d.provenance = c.at("meta/provenance").to_string();
    if (c.has("meta/augmented")) d.augmented = c.at("meta/augmented").to_i64().at(0) != 0;
    if (c.has("geology/vs")) {
        const Tensor vs = require(c, "geology/vs").to_tensor();
        const Tensor vp = require(c, "geology/vp").to_tensor();
        const Tensor rho = require(c, "geology/rho").to_tensor();
        const double dx = require(c, "geology/dx").to_scalar();
        const std::size_t n = leading(vs, "geology/vs", 4);
        if (vp.shape() != vs.shape() || rho.shape() != vs.shape())
            throw DataError("dataset container: geology arrays differ in shape");
        for (std::size_t i = 0; i < n; ++i) {
            GeologyModel g;
            g.vs = unstack(vs, i);
            g.vp = unstack(vp, i);
            g.rho = unstack(rho, i);
            g.dx = dx;
            d.geologies.push_back(std::move(g));
        }
    }
    if (c.has("source/position")) {
        const Tensor pos = require(c, "source/position").to_tensor();
        const Tensor ang = require(c, "source/angles").to_tensor();
        const Tensor mom = require(c, "source/moment").to_tensor();
        const Tensor m0 = require(c, "source/m0").to_tensor();
        const Tensor rise = require(c, "source/rise_time").to_tensor();
        const std::size_t n = leading(pos, "source/position", 2);
        if (ang.shape() != Shape{n, 3} || mom.shape() != Shape{n, 6} || m0.shape() != Shape{n} ||
            rise.shape() != Shape{n})
            throw DataError("dataset container: source arrays disagree on the sample count");
        for (std::size_t i = 0; i < n; ++i) {
            SourceSpec s;
            for (std::size_t a = 0; a < 3; ++a) s.position[a] = pos.at({i, a});
            if (!std::isnan(ang.at({i, 0}))) s.angles = std::array<double, 3>{ang.at({i, 0}), ang.at({i, 1}), ang.at({i, 2})};
            for (std::size_t a = 0; a < 6; ++a) s.moment[a] = mom.at({i, a});
            s.m0 = m0[i];
            s.rise_time = rise[i];
            d.sources.push_back(s);
        }
    }
    if (c.has("wavefield/data")) {
        const Tensor data = require(c, "wavefield/data").to_tensor();
        const double dt = require(c, "wavefield/dt").to_scalar();
        const Tensor sx = require(c, "wavefield/sensor_x").to_tensor();
        const Tensor sy = require(c, "wavefield/sensor_y").to_tensor();
        const std::size_t n = leading(data, "wavefield/data", 5);
        for (std::size_t i = 0; i < n; ++i) {
            WaveformRecord w;
            w.data = unstack(data, i);
            w.dt_out = dt;
            w.sensor_x.assign(sx.values().begin(), sx.values().end());
            w.sensor_y.assign(sy.values().begin(), sy.values().end());
            w.provenance = d.provenance;
            d.wavefields.push_back(std::move(w));
        }
    }
    return d;
}

void save_dataset(const std::filesystem::path& path, const DatasetFile& d, bool wavefield_f32) {
    write_container(path, to_container(d, wavefield_f32));
}

DatasetFile load_dataset(const std::filesystem::path& path) { return from_container(read_container(path)); }

Dataset to_dataset(const DatasetFile& f) {
    if (f.geologies.size() != f.sources.size())
        throw DataError("dataset: " + std::to_string(f.geologies.size()) + " geologies but " +
                        std::to_string(f.sources.size()) + " sources");
    if (!f.wavefields.empty() && f.wavefields.size() != f.geologies.size())
        throw DataError("dataset: wavefield count does not match the sample count");
    Dataset d;
    d.augmented = f.augmented;
    d.provenance = f.provenance;
    for (std::size_t i = 0; i < f.geologies.size(); ++i) {
        Sample s{f.geologies[i], f.sources[i], std::nullopt};
        if (!f.wavefields.empty()) s.wavefield = f.wavefields[i];
        d.samples.push_back(std::move(s));
    }
    return d;
}

DatasetFile to_file(const Dataset& d) {
    DatasetFile f;
    f.augmented = d.augmented;
    f.provenance = d.provenance;
    const bool with_wave = !d.samples.empty() && d.samples.front().wavefield.has_value();
    for (const auto& s : d.samples) {
        f.geologies.push_back(s.geology);
        f.sources.push_back(s.source);
        if (with_wave != s.wavefield.has_value()) throw ContractError("dataset: some samples lack a wavefield");
        if (with_wave) f.wavefields.push_back(*s.wavefield);
    }
    return f;
}

// Run configuration ---------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[40];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

double to_double(const std::string& s, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v))
        throw ContractError("config: " + where + ": expected a number, got '" + s + "'");
    return v;
}

std::uint64_t to_uint(const std::string& s, const std::string& where) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw ContractError("config: " + where + ": expected a non-negative integer, got '" + s + "'");
    try {
        return std::stoull(s);
    } catch (const std::exception&) {
        throw ContractError("config: " + where + ": integer out of range '" + s + "'");
    }
}

std::vector<double> to_doubles(const std::string& s, const std::string& where, std::size_t expect = 0) {
    std::vector<double> out;
    for (const auto& p : split(s)) out.push_back(to_double(p, where));
    if (out.empty() || (expect && out.size() != expect))
        throw ContractError("config: " + where + ": expected " + (expect ? std::to_string(expect) : "some") +
                            " comma-separated values");
    return out;
}

std::array<double, 2> to_range(const std::string& s, const std::string& where) {
    auto v = to_doubles(s, where, 2);
    return {v[0], v[1]};
}

std::array<std::size_t, 3> to_triple(const std::string& s, const std::string& where) {
    const auto parts = split(s);
    if (parts.size() != 3) throw ContractError("config: " + where + ": expected 3 comma-separated integers");
    return {std::size_t(to_uint(parts[0], where)), std::size_t(to_uint(parts[1], where)),
            std::size_t(to_uint(parts[2], where))};
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s;
}

std::string join(const std::array<double, 2>& v) { return fmt(v[0]) + ", " + fmt(v[1]); }

std::string join(const std::array<std::size_t, 3>& v) {
    return std::to_string(v[0]) + ", " + std::to_string(v[1]) + ", " + std::to_string(v[2]);
}

struct Key {
    std::string section, name, comment;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

#define MIFNO_DOUBLE(sec, key, field, comment)                                                          \
    Key {                                                                                               \
        sec, key, comment, [](const RunConfig& c) { return fmt(c.field); },                             \
            [](RunConfig& c, const std::string& v, const std::string& w) { c.field = to_double(v, w); } \
    }
#define MIFNO_SIZE(sec, key, field, comment)                                                                   \
    Key {                                                                                                      \
        sec, key, comment, [](const RunConfig& c) { return std::to_string(c.field); },                        \
            [](RunConfig& c, const std::string& v, const std::string& w) { c.field = to_uint(v, w); }          \
    }
#define MIFNO_RANGE(sec, key, field, comment)                                                           \
    Key {                                                                                               \
        sec, key, comment, [](const RunConfig& c) { return join(c.field); },                            \
            [](RunConfig& c, const std::string& v, const std::string& w) { c.field = to_range(v, w); } \
    }
#define MIFNO_TRIPLE(sec, key, field, comment)                                                           \
    Key {                                                                                                \
        sec, key, comment, [](const RunConfig& c) { return join(c.field); },                             \
            [](RunConfig& c, const std::string& v, const std::string& w) { c.field = to_triple(v, w); } \
    }

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        Key{"domain", "length", "m, horizontal extent and depth of the domain",
            [](const RunConfig& c) { return fmt(c.generator.domain_length); },
            [](RunConfig& c, const std::string& v, const std::string& w) {
                c.generator.domain_length = to_double(v, w);
                c.model.domain_length = c.generator.domain_length;
            }},
        MIFNO_SIZE("domain", "cells", generator.cells, "geology cells per axis"),

        Key{"geology", "preset", "empty for sampled layers, or le_teil_1d | paper_domain | homogeneous",
            [](const RunConfig& c) { return c.preset; },
            [](RunConfig& c, const std::string& v, const std::string&) {
                if (!v.empty()) load_preset(v);
                c.preset = v;
            }},
        MIFNO_DOUBLE("geology", "heterogeneous_thickness", generator.heterogeneous_thickness, "m"),
        MIFNO_DOUBLE("geology", "bottom_thickness", generator.bottom_thickness, "m"),
        MIFNO_DOUBLE("geology", "bottom_vs", generator.bottom_vs, "m/s"),
        MIFNO_SIZE("geology", "max_layers", generator.max_layers, "heterogeneous layers, at most"),
        MIFNO_RANGE("geology", "mean_vs_range", generator.mean_vs_range, "m/s, layer mean S velocity range"),
        MIFNO_DOUBLE("geology", "cv_mean", generator.cv_mean, "coefficient of variation ~ |N(cv_mean, cv_sd)|"),
        MIFNO_DOUBLE("geology", "cv_sd", generator.cv_sd, "dimensionless"),
        Key{"geology", "corr_lengths", "m, candidate correlation lengths",
            [](const RunConfig& c) { return join(c.generator.corr_lengths); },
            [](RunConfig& c, const std::string& v, const std::string& w) { c.generator.corr_lengths = to_doubles(v, w); }},
        Key{"geology", "kernel", "gaussian | exponential",
            [](const RunConfig& c) { return to_string(c.generator.kernel); },
            [](RunConfig& c, const std::string& v, const std::string&) { c.generator.kernel = parse_kernel(v); }},
        MIFNO_DOUBLE("geology", "vs_min", generator.vs_min, "m/s, clip after heterogeneity"),
        MIFNO_DOUBLE("geology", "vs_max", generator.vs_max, "m/s"),

        MIFNO_RANGE("source", "x_range", generator.source_x, "m"),
        MIFNO_RANGE("source", "y_range", generator.source_y, "m"),
        MIFNO_RANGE("source", "z_range", generator.source_z, "m, negative below the surface"),
        MIFNO_RANGE("source", "strike_range", generator.strike, "degrees"),
        MIFNO_RANGE("source", "dip_range", generator.dip, "degrees"),
        MIFNO_RANGE("source", "rake_range", generator.rake, "degrees"),
        MIFNO_DOUBLE("source", "m0", generator.m0, "N m, scalar moment"),
        MIFNO_DOUBLE("source", "rise_time", generator.rise_time, "s"),

        MIFNO_DOUBLE("sim", "dx", sim.dx, "m, solver grid spacing"),
        MIFNO_DOUBLE("sim", "dt", sim.dt, "s, solver time step"),
        MIFNO_DOUBLE("sim", "duration", sim.duration, "s, recorded length"),
        MIFNO_DOUBLE("sim", "dt_out", sim.dt_out, "s, recording interval (multiple of dt)"),
        MIFNO_SIZE("sim", "sponge_width", sim.sponge_width, "cells"),
        MIFNO_DOUBLE("sim", "sponge_edge_factor", sim.sponge_edge_factor, "damping factor at the outer face"),
        MIFNO_SIZE("sim", "sensors_per_side", sim.sensors_per_side, "surface sensors per horizontal axis"),

        MIFNO_SIZE("model", "layers", model.layers, "Fourier layers in total"),
        MIFNO_SIZE("model", "branch_layers", model.branch_layers, "layers in the geology branch"),
        MIFNO_SIZE("model", "d_v", model.d_v, "channels"),
        MIFNO_TRIPLE("model", "modes", model.modes, "Fourier modes per axis"),
        MIFNO_SIZE("model", "modes3_first", model.modes3_first, "third-axis modes of layer 1"),
        MIFNO_TRIPLE("model", "source_modes", model.source_modes, "0, 0, 0 picks the default"),
        MIFNO_SIZE("model", "mlp_hidden", model.mlp_hidden, "0: the layer's channel count"),
        MIFNO_SIZE("model", "q_hidden", model.q_hidden, "projection hidden width"),
        MIFNO_SIZE("model", "source_hidden", model.source_hidden, "source perceptron hidden width"),
        MIFNO_SIZE("model", "source_conv_channels", model.source_conv_channels, "source branch convolution channels"),
        Key{"model", "source_mode", "angles | moment | position_only | none",
            [](const RunConfig& c) { return to_string(c.model.source_mode); },
            [](RunConfig& c, const std::string& v, const std::string&) { c.model.source_mode = parse_source_mode(v); }},
        Key{"model", "baseline", "mifno | ffno_cubes | ffno_binary | ffno_plain",
            [](const RunConfig& c) { return to_string(c.model.baseline); },
            [](RunConfig& c, const std::string& v, const std::string&) { c.model.baseline = parse_baseline(v); }},
        MIFNO_TRIPLE("model", "resolution", model.resolution, "geology cells per axis seen by the model"),
        MIFNO_SIZE("model", "out_len", model.out_len, "output time samples"),
        Key{"model", "activation", "gelu | relu",
            [](const RunConfig& c) { return std::string(c.model.activation == Activation::relu ? "relu" : "gelu"); },
            [](RunConfig& c, const std::string& v, const std::string& w) {
                if (v == "gelu")
                    c.model.activation = Activation::gelu;
                else if (v == "relu")
                    c.model.activation = Activation::relu;
                else
                    throw ContractError("config: " + w + ": expected gelu or relu");
            }},

        MIFNO_DOUBLE("train", "learning_rate", train.learning_rate, "initial rate"),
        MIFNO_SIZE("train", "patience", train.patience, "epochs without improvement before the rate drops"),
        MIFNO_DOUBLE("train", "factor", train.factor, "rate multiplier on plateau"),
        MIFNO_DOUBLE("train", "plateau_threshold", train.plateau_threshold, "relative improvement that counts"),
        MIFNO_SIZE("train", "epochs", train.epochs, ""),
        MIFNO_SIZE("train", "batch_size", train.batch_size, "samples"),
        MIFNO_SIZE("train", "seed", train.seed, "initialization and shuffling"),
        Key{"train", "augmentation", "none | rotations4",
            [](const RunConfig& c) { return to_string(c.train.augmentation); },
            [](RunConfig& c, const std::string& v, const std::string&) { c.train.augmentation = parse_augmentation(v); }},
        MIFNO_SIZE("train", "n_train", train.n_train, "samples; 0 uses whatever the other splits leave"),
        MIFNO_SIZE("train", "n_val", train.n_val, "samples"),
        MIFNO_SIZE("train", "n_test", train.n_test, "samples"),
        MIFNO_DOUBLE("train", "clip_norm", train.clip_norm, "global gradient norm cap, 0 disables"),
        MIFNO_SIZE("train", "workers", train.workers, "threads for batch members"),

        MIFNO_DOUBLE("eval", "eps", eval.eps, "normalized units, relative error floor"),
        MIFNO_DOUBLE("eval", "f_min", eval.gof.f_min, "Hz"),
        MIFNO_DOUBLE("eval", "f_max", eval.gof.f_max, "Hz"),
        MIFNO_SIZE("eval", "voices", eval.gof.voices, "wavelet frequencies"),
        MIFNO_DOUBLE("eval", "omega0", eval.gof.omega0, "Morlet centre frequency, rad"),
    };
    return table;
}

#undef MIFNO_DOUBLE
#undef MIFNO_SIZE
#undef MIFNO_RANGE
#undef MIFNO_TRIPLE

const char* kSections[] = {"domain", "geology", "source", "sim", "model", "train", "eval"};

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ContractError(std::string("config: ") + e.what());
    }
    RunConfig cfg;
    std::set<std::string> known_sections(std::begin(kSections), std::end(kSections));
    for (const auto& [section, body] : tree) {
        if (!known_sections.count(section))
            throw ContractError("config: unknown section [" + section + "] or key outside a section");
        for (const auto& [name, value] : body) {
            const Key* key = nullptr;
            for (const auto& k : keys())
                if (k.section == section && k.name == name) key = &k;
            if (!key) throw ContractError("config: unknown key '" + name + "' in [" + section + "]");
            key->set(cfg, trim(value.data()), "[" + section + "] " + name);
        }
    }
    cfg.generator.validate();
    cfg.sim.validate();
    cfg.model.validate();
    cfg.train.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("config: cannot read " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_run_config(ss.str());
}

std::string run_config_text(const RunConfig& cfg) {
    std::ostringstream os;
    for (const char* section : kSections) {
        os << '[' << section << "]\n";
        for (const auto& k : keys()) {
            if (k.section != section) continue;
            if (!k.comment.empty()) os << "; " << k.comment << '\n';
            os << k.name << " = " << k.get(cfg) << '\n';
        }
        os << '\n';
    }
    return os.str();
}

// Pipeline stages -----------------------------------------------------------

std::size_t effective_workers(std::size_t requested) {
    std::size_t n = std::max<std::size_t>(1, requested);
    if (const char* env = std::getenv("MIFNO_THREADS")) {
        char* end = nullptr;
        const unsigned long cap = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && cap > 0) n = std::min<std::size_t>(n, cap);
    }
    return n;
}

std::vector<GeologyModel> generate_geologies(std::uint64_t seed, std::size_t n, const GeneratorParams& p,
                                             const std::string& preset, std::size_t workers) {
    p.validate();
    const std::vector<LayerSpec> layers = preset.empty() ? std::vector<LayerSpec>{} : load_preset(preset);
    std::vector<GeologyModel> out(n);
    parallel_for(n, workers, [&](std::size_t i) {
        out[i] = preset.empty() ? generate_geology(seed, i, p) : generate_geology_from_layers(seed, i, layers, p);
        out[i].layers.clear();
    });
    return out;
}

void simulate_to_file(const std::vector<GeologyModel>& geologies, const std::vector<SourceSpec>& sources,
                      const SimConfig& cfg, const std::filesystem::path& out, std::size_t workers, std::int64_t seed,
                      bool wavefield_f32) {
    cfg.validate();
    if (geologies.size() != sources.size())
        throw DataError("simulate: " + std::to_string(geologies.size()) + " geologies but " +
                        std::to_string(sources.size()) + " sources");
    const std::size_t n = geologies.size();
    workers = std::max<std::size_t>(1, std::min(workers, n));
    auto shard_path = [&](std::size_t w) {
        std::filesystem::path p = out;
        p += ".shard" + std::to_string(w);
        return p;
    };
    parallel_for(workers, workers, [&](std::size_t w) {
        DatasetFile shard;
        shard.provenance = "simulated";
        for (std::size_t i = w * n / workers; i < (w + 1) * n / workers; ++i)
            shard.wavefields.push_back(simulate(geologies[i], sources[i], cfg));
        write_container(shard_path(w), to_container(shard));
    });
    DatasetFile merged;
    merged.geologies = geologies;
    merged.sources = sources;
    merged.seed = seed;
    merged.provenance = "simulated";
    for (std::size_t w = 0; w < workers; ++w) {
        DatasetFile part = load_dataset(shard_path(w));
        for (auto& r : part.wavefields) merged.wavefields.push_back(std::move(r));
    }
    for (auto& r : merged.wavefields) r.provenance = merged.provenance;
    save_dataset(out, merged, wavefield_f32);
    for (std::size_t w = 0; w < workers; ++w) std::filesystem::remove(shard_path(w));
}

}  // namespace mifno
