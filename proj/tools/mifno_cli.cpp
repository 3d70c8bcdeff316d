// Command-line front end: every stage reads and writes container files.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>

#include "canvas.hpp"
#include "mifno/errors.hpp"
#include "mifno/storage.hpp"

using namespace mifno;
using json = nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

void report_error(const char* kind, const std::string& message, int code) {
    json rec{{"error", kind}, {"code", code}, {"message", message}};
    std::cerr << rec.dump() << std::endl;
}

const char* container_kind(ContainerError::Kind k) {
    switch (k) {
        case ContainerError::Kind::magic: return "magic";
        case ContainerError::Kind::truncated: return "truncated";
        case ContainerError::Kind::crc: return "crc";
        case ContainerError::Kind::format: return "format";
        case ContainerError::Kind::io: return "io";
    }
    return "container";
}

RunConfig config_or_default(const std::string& path) { return path.empty() ? RunConfig{} : load_run_config(path); }

/// Loads geology and sources either from one dataset or from two separate files.
DatasetFile load_inputs(const std::string& data, const std::string& geology, const std::string& sources) {
    if (!data.empty()) return load_dataset(data);
    if (geology.empty() || sources.empty()) throw ContractError("give --data, or both --geology and --sources");
    DatasetFile g = load_dataset(geology);
    DatasetFile s = load_dataset(sources);
    g.sources = std::move(s.sources);
    return g;
}

void print_json_line(std::ostream& os, const EpochRecord& r) {
    json rec{{"epoch", r.epoch},
             {"train_loss", r.train_loss},
             {"val_loss", r.val_loss},
             {"lr", r.learning_rate},
             {"time", r.wall_time}};
    os << rec.dump() << std::endl;
}

Splits splits_for(const Dataset& d, const TrainConfig& tc) {
    std::size_t n_train = tc.n_train;
    if (n_train == 0) {
        if (tc.n_val + tc.n_test >= d.samples.size()) throw ContractError("train: no samples left for training");
        n_train = d.samples.size() - tc.n_val - tc.n_test;
    }
    return split_dataset(d, n_train, tc.n_val, tc.n_test);
}

TrainResult run_training(const std::string& config, const std::string& data, const std::string& log_path,
                         std::size_t workers, const std::optional<Checkpoint>& init) {
    RunConfig cfg = config_or_default(config);
    if (workers) cfg.train.workers = workers;
    cfg.train.workers = effective_workers(cfg.train.workers);
    if (init && !config.empty() && config_to_json(cfg.model) != config_to_json(init->config))
        throw DataError("finetune: the [model] section of the config does not match the checkpoint architecture");
    const Dataset d = to_dataset(load_dataset(data));
    const Splits sp = splits_for(d, cfg.train);
    std::ofstream log_file;
    if (!log_path.empty()) {
        log_file.open(log_path);
        if (!log_file) throw DataError("cannot write log " + log_path);
    }
    auto progress = [&](const EpochRecord& r) {
        print_json_line(std::cout, r);
        if (log_file) print_json_line(log_file, r);
    };
    TrainResult r = init ? fine_tune(*init, sp.train, sp.val, cfg.train, progress)
                         : train(cfg.model, sp.train, sp.val, cfg.train, progress);
    r.best.extra.put(Entry::from_string("meta/run_config", run_config_text(cfg)));
    return r;
}

// plot ----------------------------------------------------------------------

void plot_snapshot(const WaveformRecord& w, double time, std::size_t comp, const std::string& out) {
    const std::size_t ns = w.data.dim(0), nt = w.data.dim(2);
    const std::size_t t = std::min(nt - 1, std::size_t(std::lround(time / w.dt_out)));
    double peak = 0;
    for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < ns; ++j) peak = std::max(peak, std::abs(w.data.at({i, j, t, comp})));
    const long cell = 16;
    plot::Canvas c(ns * cell, ns * cell);
    for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < ns; ++j) {
            const double v = peak > 0 ? w.data.at({i, j, t, comp}) / peak : 0.0;
            // x to the right, y (north) up.
            c.rect(long(i) * cell, long(ns - 1 - j) * cell, long(i + 1) * cell - 1, long(ns - j) * cell - 1,
                   plot::diverging(v));
        }
    c.write_png(out);
}

void plot_traces(const WaveformRecord& ref, const WaveformRecord* pred, std::size_t si, std::size_t sj,
                 const std::string& out) {
    const long width = 900, panel = 180, margin = 10;
    plot::Canvas c(width, 3 * panel);
    for (std::size_t comp = 0; comp < 3; ++comp) {
        const auto r = sensor_trace(ref, si, sj, comp);
        double peak = 0;
        for (double v : r) peak = std::max(peak, std::abs(v));
        std::vector<double> p;
        if (pred) {
            p = sensor_trace(*pred, si, sj, comp);
            for (double v : p) peak = std::max(peak, std::abs(v));
        }
        if (peak == 0) peak = 1;
        const long y0 = long(comp) * panel + margin, y1 = long(comp + 1) * panel - margin;
        c.frame(margin, y0, width - margin, y1, plot::kGrey);
        c.line(margin, 0.5 * (y0 + y1), width - margin, 0.5 * (y0 + y1), plot::kGrey);
        c.series(r, margin, y0, width - margin, y1, -peak, peak, plot::kBlack);
        if (pred) c.series(p, margin, y0, width - margin, y1, -peak, peak, plot::kRed);
    }
    c.write_png(out);
}

void plot_gof_histograms(const Evaluation& e, const std::string& out) {
    const long width = 800, height = 300, margin = 20, bins = 20;
    plot::Canvas c(width, height);
    const char* names[2] = {"eg", "pg"};
    const plot::Rgb colors[2] = {plot::kBlue, plot::kRed};
    for (int k = 0; k < 2; ++k) {
        std::vector<std::size_t> h(bins, 0);
        for (double v : e.report.values().at(names[k]))
            if (std::isfinite(v)) ++h[std::min<std::size_t>(bins - 1, std::size_t(v / 10.0 * bins))];
        const std::size_t top = std::max<std::size_t>(1, *std::max_element(h.begin(), h.end()));
        const long x0 = margin + k * width / 2, x1 = (k + 1) * width / 2 - margin;
        c.frame(x0, margin, x1, height - margin, plot::kGrey);
        const double bw = double(x1 - x0) / bins;
        for (long b = 0; b < bins; ++b) {
            const long top_y = height - margin - long(double(height - 2 * margin) * double(h[b]) / double(top));
            c.rect(x0 + long(b * bw) + 1, top_y, x0 + long((b + 1) * bw) - 1, height - margin, colors[k]);
        }
    }
    c.write_png(out);
}

Evaluation evaluate_files(const DatasetFile& pred, const DatasetFile& ref, const MetricOptions& opt) {
    if (pred.wavefields.size() != ref.wavefields.size())
        throw DataError("evaluate: " + std::to_string(pred.wavefields.size()) + " predictions for " +
                        std::to_string(ref.wavefields.size()) + " references");
    std::vector<WaveformRecord> p = pred.wavefields, r = ref.wavefields;
    // Per-sample physical factors need the reference inputs; without them only the set-wide scale applies.
    std::vector<double> factors(r.size(), 1.0);
    if (ref.geologies.size() == r.size() && ref.sources.size() == r.size())
        for (std::size_t i = 0; i < r.size(); ++i) factors[i] = metric_scale(ref.geologies[i], ref.sources[i]);
    normalize_for_metrics(p, r, factors);
    return evaluate_records(p, r, opt);
}

int run(int argc, char** argv) {
    CLI::App app{"Multiple-input neural operator for 3D elastic wavefields"};
    app.require_subcommand(1);
    std::string config;
    app.add_option("--config", config, "run configuration (INI)");

    std::size_t n = 0, workers = 1, sample = 0;
    std::uint64_t seed = 0;
    std::string out, data, geology, sources, checkpoint, pred, ref, preset, kind = "traces", log, table;
    bool f32 = false;
    double time = 1.0, dt = 0.0;
    std::string component = "Z";
    std::vector<std::size_t> sensor{0, 0};

    auto* gen_geo = app.add_subcommand("gen-geology", "generate geologies");
    gen_geo->add_option("--n", n, "number of geologies")->required();
    gen_geo->add_option("--seed", seed, "random seed")->required();
    gen_geo->add_option("--preset", preset, "layer preset (overrides the config)");
    gen_geo->add_option("--workers", workers, "threads");
    gen_geo->add_option("--out", out, "output container")->required();

    auto* gen_src = app.add_subcommand("gen-sources", "Latin-hypercube source design");
    gen_src->add_option("--n", n, "number of sources")->required();
    gen_src->add_option("--seed", seed, "random seed")->required();
    gen_src->add_option("--out", out, "output container")->required();

    auto* sim = app.add_subcommand("simulate", "simulate surface wavefields");
    sim->add_option("--data", data, "container with geologies and sources");
    sim->add_option("--geology", geology, "geology container");
    sim->add_option("--sources", sources, "source container");
    sim->add_option("--workers", workers, "parallel shards");
    sim->add_flag("--f32", f32, "store wavefields in single precision (lossy)");
    sim->add_option("--out", out, "output dataset")->required();

    auto* tr = app.add_subcommand("train", "train a model");
    tr->add_option("--data", data, "dataset")->required();
    tr->add_option("--workers", workers, "threads");
    tr->add_option("--log", log, "also write the JSON-lines progress log here");
    tr->add_option("--out", out, "checkpoint")->required();

    auto* ft = app.add_subcommand("finetune", "continue training from a checkpoint");
    ft->add_option("--checkpoint", checkpoint, "pretrained checkpoint")->required();
    ft->add_option("--data", data, "dataset")->required();
    ft->add_option("--workers", workers, "threads");
    ft->add_option("--log", log, "also write the JSON-lines progress log here");
    ft->add_option("--out", out, "checkpoint")->required();

    auto* pr = app.add_subcommand("predict", "predict wavefields");
    pr->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    pr->add_option("--data", data, "container with geologies and sources");
    pr->add_option("--geology", geology, "geology container");
    pr->add_option("--sources", sources, "source container");
    pr->add_option("--dt", dt, "output time step, s (default: the training data's)");
    pr->add_option("--workers", workers, "threads");
    pr->add_option("--out", out, "output dataset")->required();

    auto* ev = app.add_subcommand("evaluate", "score predictions against references");
    ev->add_option("--pred", pred, "predicted dataset")->required();
    ev->add_option("--ref", ref, "reference dataset")->required();
    ev->add_option("--table", table, "write the per-sensor table (TSV) here");

    auto* aug = app.add_subcommand("augment", "append the three quarter-turn rotations of every sample");
    aug->add_option("--data", data, "dataset")->required();
    aug->add_option("--out", out, "output dataset")->required();

    auto* pl = app.add_subcommand("plot", "snapshots, trace overlays and GOF histograms as PNG");
    pl->add_option("--kind", kind, "snapshot | traces | gof")->check(CLI::IsMember({"snapshot", "traces", "gof"}));
    pl->add_option("--ref", ref, "reference dataset")->required();
    pl->add_option("--pred", pred, "predicted dataset");
    pl->add_option("--sample", sample, "sample index");
    pl->add_option("--sensor", sensor, "sensor indices i j")->expected(2);
    pl->add_option("--time", time, "snapshot time, s");
    pl->add_option("--component", component, "E | N | Z")->check(CLI::IsMember({"E", "N", "Z"}));
    pl->add_option("--out", out, "PNG file")->required();

    auto* in = app.add_subcommand("inspect", "summarize a container");
    in->add_option("file", data, "container")->required();
    std::vector<std::size_t> trace_at;
    in->add_option("--trace", trace_at, "print one series as TSV: sample i j component(0 E, 1 N, 2 Z)")->expected(4);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("usage", e.what(), kUsage);
        return kUsage;
    }

    if (*gen_geo) {
        RunConfig cfg = config_or_default(config);
        if (!preset.empty()) cfg.preset = preset;
        DatasetFile f;
        f.geologies = generate_geologies(seed, n, cfg.generator, cfg.preset, effective_workers(workers));
        f.seed = std::int64_t(seed);
        f.provenance = cfg.preset.empty() ? "generated" : "preset:" + cfg.preset;
        save_dataset(out, f);
    } else if (*gen_src) {
        const RunConfig cfg = config_or_default(config);
        DatasetFile f;
        f.sources = generate_sources(seed, n, cfg.generator);
        f.seed = std::int64_t(seed);
        save_dataset(out, f);
    } else if (*sim) {
        const RunConfig cfg = config_or_default(config);
        const DatasetFile in_file = load_inputs(data, geology, sources);
        simulate_to_file(in_file.geologies, in_file.sources, cfg.sim, out, effective_workers(workers), in_file.seed, f32);
    } else if (*tr) {
        const TrainResult r = run_training(config, data, log, workers, std::nullopt);
        save_checkpoint(out, r.best);
    } else if (*ft) {
        const TrainResult r = run_training(config, data, log, workers, load_checkpoint(checkpoint));
        save_checkpoint(out, r.best);
    } else if (*pr) {
        const Checkpoint ck = load_checkpoint(checkpoint);
        DatasetFile f = load_inputs(data, geology, sources);
        if (f.geologies.size() != f.sources.size()) throw DataError("predict: geology and source counts differ");
        const double step = dt > 0 ? dt : checkpoint_dt_out(ck);
        if (!(step > 0)) throw ContractError("predict: no output time step in the checkpoint, pass --dt");
        f.wavefields.assign(f.geologies.size(), {});
        parallel_for(f.geologies.size(), effective_workers(workers),
                     [&](std::size_t i) { f.wavefields[i] = predict(ck, f.geologies[i], f.sources[i], step); });
        f.provenance = "predicted";
        save_dataset(out, f);
    } else if (*ev) {
        const RunConfig cfg = config_or_default(config);
        const Evaluation e = evaluate_files(load_dataset(pred), load_dataset(ref), cfg.eval);
        if (!table.empty()) {
            std::ofstream t(table);
            if (!t) throw DataError("cannot write " + table);
            t << e.table();
        }
        std::cout << e.report.table();
    } else if (*aug) {
        DatasetFile f = load_dataset(data);
        save_dataset(out, to_file(augment_rotations(to_dataset(f))));
    } else if (*pl) {
        const DatasetFile r = load_dataset(ref);
        std::optional<DatasetFile> p;
        if (!pred.empty()) p = load_dataset(pred);
        if (kind == "gof") {
            if (!p) throw ContractError("plot gof: needs --pred");
            plot_gof_histograms(evaluate_files(*p, r, config_or_default(config).eval), out);
        } else {
            if (sample >= r.wavefields.size()) throw ContractError("plot: sample index out of range");
            if (kind == "snapshot") {
                const std::size_t comp = component == "E" ? 0 : component == "N" ? 1 : 2;
                plot_snapshot(p ? p->wavefields.at(sample) : r.wavefields[sample], time, comp, out);
            } else {
                const std::size_t ns = r.wavefields[sample].data.dim(0);
                if (sensor[0] >= ns || sensor[1] >= ns) throw ContractError("plot: sensor index out of range");
                plot_traces(r.wavefields[sample], p ? &p->wavefields.at(sample) : nullptr, sensor[0], sensor[1], out);
            }
        }
    } else if (*in && !trace_at.empty()) {
        const DatasetFile f = load_dataset(data);
        if (trace_at[0] >= f.wavefields.size()) throw ContractError("inspect: sample index out of range");
        const WaveformRecord& w = f.wavefields[trace_at[0]];
        if (trace_at[1] >= w.data.dim(0) || trace_at[2] >= w.data.dim(1) || trace_at[3] > 2)
            throw ContractError("inspect: sensor or component index out of range");
        const auto series = sensor_trace(w, trace_at[1], trace_at[2], trace_at[3]);
        std::cout.precision(17);
        for (std::size_t t = 0; t < series.size(); ++t) std::cout << double(t) * w.dt_out << '\t' << series[t] << '\n';
    } else if (*in) {
        const Container c = read_container(data);
        for (const auto& e : c.entries()) {
            std::cout << e.name << '\t' << to_string(e.dtype) << '\t' << shape_string(e.shape) << '\t'
                      << e.payload.size() << " bytes";
            if (e.name == "meta/provenance") std::cout << "\t" << e.to_string();
            std::cout << '\n';
        }
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ContainerError& e) {
        json rec{{"error", "data"}, {"kind", container_kind(e.kind())}, {"code", kData}, {"message", e.what()}};
        std::cerr << rec.dump() << std::endl;
        return kData;
    } catch (const ContractError& e) {
        report_error("usage", e.what(), kUsage);
        return kUsage;
    } catch (const DataError& e) {
        report_error("data", e.what(), kData);
        return kData;
    } catch (const NumericalError& e) {
        report_error("numerical", e.what(), kNumerical);
        return kNumerical;
    } catch (const std::exception& e) {
        report_error("data", e.what(), kData);
        return kData;
    }
}
