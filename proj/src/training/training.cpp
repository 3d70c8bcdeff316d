#include "mifno/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "mifno/errors.hpp"
#include "mifno/random.hpp"

namespace mifno {

std::string to_string(Augmentation a) { return a == Augmentation::rotations4 ? "rotations4" : "none"; }

Augmentation parse_augmentation(const std::string& s) {
    if (s == "none") return Augmentation::none;
    if (s == "rotations4") return Augmentation::rotations4;
    throw ContractError("unknown augmentation '" + s + "' (expected none or rotations4)");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ContractError("train: learning rate must be positive");
    if (!(factor > 0.0 && factor < 1.0)) throw ContractError("train: plateau factor must be in (0, 1)");
    if (patience < 1) throw ContractError("train: patience must be at least 1");
    if (!(plateau_threshold >= 0.0)) throw ContractError("train: plateau threshold must be >= 0");
    if (batch_size < 1) throw ContractError("train: batch size must be at least 1");
    if (!(clip_norm >= 0.0)) throw ContractError("train: clip norm must be >= 0");
    if (workers < 1) throw ContractError("train: need at least one worker");
}

Splits split_dataset(const Dataset& d, std::size_t n_train, std::size_t n_val, std::size_t n_test) {
    if (n_train + n_val + n_test > d.samples.size())
        throw ContractError("split: " + std::to_string(n_train + n_val + n_test) + " samples requested, dataset has " +
                            std::to_string(d.samples.size()));
    Splits s;
    for (Dataset* part : {&s.train, &s.val, &s.test}) {
        part->augmented = d.augmented;
        part->provenance = d.provenance;
    }
    auto it = d.samples.begin();
    s.train.samples.assign(it, it + std::ptrdiff_t(n_train));
    it += std::ptrdiff_t(n_train);
    s.val.samples.assign(it, it + std::ptrdiff_t(n_val));
    it += std::ptrdiff_t(n_val);
    s.test.samples.assign(it, it + std::ptrdiff_t(n_test));
    return s;
}

// Loss ----------------------------------------------------------------------

Var relative_mae(const Var& pred, const Tensor& ref) {
    require_same_shape(pred.value(), ref, "relative_mae");
    auto p = pred.value().values();
    auto u = ref.values();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        num += std::abs(p[i] - u[i]);
        den += std::abs(u[i]);
    }
    if (den == 0.0) throw UndefinedMetric("relative_mae: reference sample is all zero");
    auto ref_values = std::make_shared<const Tensor>(ref);
    return Tape::record("relative_mae", Tensor::scalar(num / den), {pred},
                        [ref_values, den, pred](const Tensor& g, GradSink& s) {
                            if (!s.wanted(0)) return;
                            auto d = s[0].values();
                            auto pv = pred.value().values();
                            auto uv = ref_values->values();
                            const double k = g.item() / den;
                            for (std::size_t i = 0; i < d.size(); ++i) {
                                const double diff = pv[i] - uv[i];
                                if (diff > 0.0)
                                    d[i] += k;
                                else if (diff < 0.0)
                                    d[i] -= k;
                            }
                        });
}

double relative_mae_loss(const std::vector<Tensor>& pred, const std::vector<Tensor>& ref) {
    if (pred.size() != ref.size()) throw ContractError("relative_mae_loss: batch sizes differ");
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < ref.size(); ++b) {
        require_same_shape(pred[b], ref[b], "relative_mae_loss");
        if (max_abs(ref[b]) == 0.0) {
            std::fprintf(stderr, "warning: relative_mae_loss: sample %zu has an all-zero reference, skipped\n", b);
            continue;
        }
        total += relative_mae(constant(pred[b]), ref[b]).value().item();
        ++used;
    }
    if (used == 0) throw UndefinedMetric("relative_mae_loss: every reference sample is zero");
    return total / double(used);
}

// Optimizer -----------------------------------------------------------------

void adam_step(WeightMap& params, const WeightMap& grads, AdamState& state, double lr, const AdamParams& hp) {
    if (grads.size() != params.size()) throw ContractError("adam_step: gradient set does not match parameters");
    ++state.step;
    const double c1 = 1.0 - std::pow(hp.beta1, double(state.step));
    const double c2 = 1.0 - std::pow(hp.beta2, double(state.step));
    for (auto& [name, w] : params) {
        auto git = grads.find(name);
        if (git == grads.end()) throw ContractError("adam_step: no gradient for '" + name + "'");
        const Tensor& g = git->second;
        require_same_shape(w, g, "adam_step");
        if (w.dtype() != g.dtype()) throw ContractError("adam_step: dtype mismatch for '" + name + "'");
        auto [mit, fresh_m] = state.m.try_emplace(name, Tensor::zeros(w.shape(), w.dtype()));
        auto [vit, fresh_v] = state.v.try_emplace(name, Tensor::zeros(w.shape(), w.dtype()));
        require_same_shape(mit->second, w, "adam_step state");
        require_same_shape(vit->second, w, "adam_step state");
        auto wr = w.raw();
        auto gr = g.raw();
        auto m = mit->second.raw();
        auto v = vit->second.raw();
        for (std::size_t i = 0; i < wr.size(); ++i) {
            m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * gr[i];
            v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * gr[i] * gr[i];
            wr[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + hp.eps);
        }
    }
}

double clip_global_norm(WeightMap& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& [name, g] : grads)
        for (double x : g.raw()) sq += x * x;
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double f = max_norm / norm;
        for (auto& [name, g] : grads)
            for (double& x : g.raw()) x *= f;
    }
    return norm;
}

PlateauScheduler::PlateauScheduler(double lr, std::size_t patience, double factor, double threshold)
    : lr_(lr), patience_(patience), factor_(factor), threshold_(threshold), best_(std::numeric_limits<double>::infinity()) {
    if (patience < 1) throw ContractError("plateau: patience must be at least 1");
    if (!(factor > 0.0 && factor < 1.0)) throw ContractError("plateau: factor must be in (0, 1)");
}

double PlateauScheduler::step(double val_loss) {
    if (val_loss < best_ * (1.0 - threshold_)) {
        best_ = val_loss;
        bad_epochs_ = 0;
    } else if (++bad_epochs_ >= patience_) {
        lr_ *= factor_;
        bad_epochs_ = 0;
    }
    return lr_;
}

double lr_on_plateau(const std::vector<double>& val_history, double lr, std::size_t patience, double factor,
                     double threshold) {
    PlateauScheduler s(lr, patience, factor, threshold);
    for (double v : val_history) s.step(v);
    return s.learning_rate();
}

// Data ----------------------------------------------------------------------

Dataset augment_rotations(const Dataset& d) {
    if (d.augmented) throw ContractError("augment_rotations: dataset is already augmented");
    Dataset out;
    out.augmented = true;
    out.provenance = d.provenance + "+rotations4";
    out.samples.reserve(4 * d.samples.size());
    out.samples = d.samples;
    for (int k = 1; k <= 3; ++k)
        for (const auto& s : d.samples) out.samples.push_back(rotate_sample_90(s, k));
    return out;
}

namespace {

double physical_norm_factor(const GeologyModel& g, const SourceSpec& s, double domain_length) {
    return output_norm_factor(vs_at(g.vs, g.dx, s.position), s.position[2], domain_length);
}

}  // namespace

NormalizationSpec compute_normalization(const Dataset& d, double domain_length) {
    if (d.samples.empty()) throw ContractError("compute_normalization: empty dataset");
    NormalizationSpec spec;
    spec.domain_length = domain_length;
    const Shape shape = d.samples.front().geology.vs.shape();
    Tensor mean(shape);
    for (const auto& s : d.samples) {
        if (s.geology.vs.shape() != shape) throw ContractError("compute_normalization: geologies differ in shape");
        mean += s.geology.vs;
    }
    for (auto& v : mean.values()) v /= double(d.samples.size());
    double sq = 0.0;
    for (const auto& s : d.samples) {
        auto x = s.geology.vs.values();
        auto m = mean.values();
        for (std::size_t i = 0; i < x.size(); ++i) sq += (x[i] - m[i]) * (x[i] - m[i]);
    }
    spec.std_geology = std::sqrt(sq / double(d.samples.size() * mean.size()));
    // A dataset of identical geologies has no spread; fall back to 1 m/s.
    if (!(spec.std_geology > 0.0)) spec.std_geology = 1.0;
    spec.mean_geology = std::move(mean);

    double tsq = 0.0;
    std::size_t count = 0;
    for (const auto& s : d.samples) {
        if (!s.wavefield) continue;
        const double c = physical_norm_factor(s.geology, s.source, domain_length);
        for (double v : s.wavefield->data.values()) tsq += (v * c) * (v * c);
        count += s.wavefield->data.size();
    }
    const double rms = count ? std::sqrt(tsq / double(count)) : 0.0;
    spec.output_scale = rms > 0.0 ? 1.0 / rms : 1.0;
    return spec;
}

PreparedSample prepare_sample(const Sample& s, const NormalizationSpec& norm, const ModelConfig& cfg) {
    PreparedSample p;
    p.geology = normalize_geology(s.geology.vs, norm);
    p.source = normalize_source(s.source, norm.domain_length, cfg.source_mode);
    p.scale = wavefield_scale(norm, s.geology, s.source);
    if (s.wavefield) {
        p.target = s.wavefield->data;
        for (auto& v : p.target.values()) v *= p.scale;
    }
    return p;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Training loop -------------------------------------------------------------

namespace {

struct SampleGrad {
    double loss = 0.0;
    WeightMap grads;
};

SampleGrad sample_gradient(const WeightMap& weights, const ModelConfig& cfg, const PreparedSample& s) {
    Tape tape;
    ParamBinding p(weights, &tape);
    Var y = model_forward(s.geology, s.source, p, cfg);
    Var loss = relative_mae(y, s.target);
    Gradients g = tape.backward(loss);
    SampleGrad out;
    out.loss = loss.value().item();
    for (const auto& [name, var] : p.vars()) {
        auto it = g.find(var.id());
        out.grads.emplace(name, it != g.end() ? std::move(it->second) : Tensor::zeros(var.shape(), var.value().dtype()));
    }
    return out;
}

std::vector<PreparedSample> prepare_all(const Dataset& d, const NormalizationSpec& norm, const ModelConfig& cfg,
                                        const char* what) {
    std::vector<PreparedSample> out;
    out.reserve(d.samples.size());
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        const Sample& s = d.samples[i];
        if (!s.wavefield) throw DataError(std::string(what) + " sample " + std::to_string(i) + " has no wavefield");
        PreparedSample p = prepare_sample(s, norm, cfg);
        if (max_abs(p.target) == 0.0) {
            std::fprintf(stderr, "warning: %s sample %zu has an all-zero wavefield, excluded from the loss\n", what, i);
            continue;
        }
        out.push_back(std::move(p));
    }
    return out;
}

double mean_loss(const WeightMap& weights, const ModelConfig& cfg, const std::vector<PreparedSample>& set,
                 std::size_t workers) {
    std::vector<double> losses(set.size());
    parallel_for(set.size(), workers, [&](std::size_t i) {
        ParamBinding p(weights, nullptr);
        Var y = model_forward(set[i].geology, set[i].source, p, cfg);
        losses[i] = relative_mae(y, set[i].target).value().item();
    });
    double s = 0.0;
    for (double l : losses) s += l;
    return set.empty() ? std::numeric_limits<double>::quiet_NaN() : s / double(set.size());
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Philox rng = make_stream(seed, epoch, StreamPurpose::shuffle);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
    return order;
}

double dataset_dt_out(const Dataset& d) {
    for (const auto& s : d.samples)
        if (s.wavefield) return s.wavefield->dt_out;
    return 0.0;
}

TrainResult run_loop(const ModelConfig& model, WeightMap weights, const NormalizationSpec& norm,
                     const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg,
                     const ProgressFn& progress) {
    cfg.validate();
    model.validate();
    const Dataset augmented = cfg.augmentation == Augmentation::rotations4 && !train_set.augmented
                                  ? augment_rotations(train_set)
                                  : Dataset{};
    const Dataset& tr = augmented.samples.empty() ? train_set : augmented;
    const auto train_data = prepare_all(tr, norm, model, "train");
    const auto val_data = prepare_all(val_set, norm, model, "validation");
    if (train_data.empty() && cfg.epochs > 0) throw DataError("train: no usable training samples");

    TrainResult result;
    result.best.config = model;
    result.best.norm = norm;
    result.best.weights = weights;
    result.history.best_val = std::numeric_limits<double>::infinity();

    AdamState adam;
    PlateauScheduler sched(cfg.learning_rate, cfg.patience, cfg.factor, cfg.plateau_threshold);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = sched.learning_rate();
        const auto order = epoch_order(train_data.size(), cfg.seed, epoch);
        double loss_sum = 0.0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
            const std::size_t nb = std::min(cfg.batch_size, order.size() - b0);
            std::vector<SampleGrad> parts(nb);
            parallel_for(nb, cfg.workers,
                         [&](std::size_t i) { parts[i] = sample_gradient(weights, model, train_data[order[b0 + i]]); });
            // Fixed-order reduction keeps the result independent of the worker count.
            WeightMap grads = std::move(parts[0].grads);
            double batch_loss = parts[0].loss;
            for (std::size_t i = 1; i < nb; ++i) {
                batch_loss += parts[i].loss;
                for (auto& [name, g] : grads) g += parts[i].grads.at(name);
            }
            for (auto& [name, g] : grads)
                for (double& x : g.raw()) x /= double(nb);
            if (!std::isfinite(batch_loss)) {
                std::ostringstream ids;
                for (std::size_t i = 0; i < nb; ++i) ids << (i ? "," : "") << order[b0 + i];
                throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch samples [" +
                                     ids.str() + "], lr " + std::to_string(lr));
            }
            loss_sum += batch_loss;
            clip_global_norm(grads, cfg.clip_norm);
            adam_step(weights, grads, adam, lr);
        }
        const double train_loss = loss_sum / double(train_data.size());
        const double val_loss = val_data.empty() ? train_loss : mean_loss(weights, model, val_data, cfg.workers);
        if (!std::isfinite(val_loss))
            throw NumericalError("train: non-finite validation loss at epoch " + std::to_string(epoch) + ", lr " +
                                 std::to_string(lr));
        if (val_loss < result.history.best_val) {
            result.history.best_val = val_loss;
            result.history.best_epoch = epoch;
            result.best.weights = weights;
        }
        sched.step(val_loss);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.train_loss.push_back(train_loss);
        result.history.val_loss.push_back(val_loss);
        result.history.learning_rate.push_back(lr);
        result.history.wall_time.push_back(wall);
        if (progress) progress({epoch, train_loss, val_loss, lr, wall});
    }
    if (result.history.best_epoch == 0) result.history.best_val = 0.0;
    store_history(result.best.extra, result.history);
    const double dt = dataset_dt_out(train_set);
    if (dt > 0.0) result.best.extra.put(Entry::scalar("train/dt_out", dt));
    return result;
}

}  // namespace

TrainResult train(const ModelConfig& model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg,
                  const ProgressFn& progress) {
    model.validate();
    if (train_set.samples.empty()) throw ContractError("train: empty training split");
    const Dataset augmented = cfg.augmentation == Augmentation::rotations4 && !train_set.augmented
                                  ? augment_rotations(train_set)
                                  : train_set;
    const NormalizationSpec norm = compute_normalization(augmented, model.domain_length);
    TrainConfig c = cfg;
    c.augmentation = Augmentation::none;
    return run_loop(model, init_weights(model, cfg.seed), norm, augmented, val_set, c, progress);
}

TrainResult fine_tune(const Checkpoint& pretrained, const Dataset& train_set, const Dataset& val_set,
                      const TrainConfig& cfg, const ProgressFn& progress) {
    if (!pretrained.norm.ready()) throw DataError("fine_tune: checkpoint has no normalization statistics");
    const WeightMap expected = init_weights(pretrained.config, 0);
    for (const auto& [name, w] : expected) {
        auto it = pretrained.weights.find(name);
        if (it == pretrained.weights.end() || it->second.shape() != w.shape())
            throw DataError("fine_tune: checkpoint weights do not match its configuration at '" + name + "'");
    }
    TrainResult r = run_loop(pretrained.config, pretrained.weights, pretrained.norm, train_set, val_set, cfg, progress);
    if (cfg.epochs == 0) {
        r.best.extra = pretrained.extra;
        store_history(r.best.extra, r.history);
    }
    return r;
}

double validation_loss(const Checkpoint& ck, const Dataset& d, std::size_t workers) {
    const auto data = prepare_all(d, ck.norm, ck.config, "validation");
    if (data.empty()) throw UndefinedMetric("validation_loss: no usable samples");
    return mean_loss(ck.weights, ck.config, data, workers);
}

// Inference and evaluation --------------------------------------------------

double checkpoint_dt_out(const Checkpoint& ck) {
    return ck.extra.has("train/dt_out") ? ck.extra.at("train/dt_out").to_scalar() : 0.0;
}

WaveformRecord predict(const Checkpoint& ck, const GeologyModel& g, const SourceSpec& s, double dt_out) {
    Sample sample{g, s, std::nullopt};
    const PreparedSample p = prepare_sample(sample, ck.norm, ck.config);
    ParamBinding binding(ck.weights, nullptr);
    Var y = model_forward(p.geology, p.source, binding, ck.config);
    WaveformRecord rec;
    rec.data = y.value();
    for (auto& v : rec.data.values()) v /= p.scale;
    rec.data.check_finite("predict");
    rec.dt_out = dt_out;
    rec.provenance = "predicted";
    const std::size_t nx = rec.data.dim(0), ny = rec.data.dim(1);
    const double len = g.domain_length();
    for (std::size_t i = 0; i < nx; ++i) rec.sensor_x.push_back((double(i) + 0.5) * len / double(nx));
    for (std::size_t j = 0; j < ny; ++j) rec.sensor_y.push_back((double(j) + 0.5) * len / double(ny));
    return rec;
}

double metric_scale(const GeologyModel& g, const SourceSpec& s) {
    return physical_norm_factor(g, s, g.domain_length());
}

namespace {

WaveformRecord scaled(const WaveformRecord& r, double f) {
    WaveformRecord out = r;
    for (auto& v : out.data.values()) v *= f;
    return out;
}

}  // namespace

WaveformRecord scale_record(const WaveformRecord& r, double f) { return scaled(r, f); }

double normalize_for_metrics(std::vector<WaveformRecord>& pred, std::vector<WaveformRecord>& ref,
                             const std::vector<double>& factors) {
    if (pred.size() != ref.size() || factors.size() != ref.size())
        throw ContractError("normalize_for_metrics: prediction, reference and factor counts differ");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        pred[i] = scaled(pred[i], factors[i]);
        ref[i] = scaled(ref[i], factors[i]);
        for (double v : std::as_const(ref[i].data).values()) sum += v * v;
        count += ref[i].data.size();
    }
    const double rms = count ? std::sqrt(sum / double(count)) : 0.0;
    if (!(rms > 0.0) || !std::isfinite(rms)) return 1.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        pred[i] = scaled(pred[i], 1.0 / rms);
        ref[i] = scaled(ref[i], 1.0 / rms);
    }
    return 1.0 / rms;
}

Evaluation evaluate_records(const std::vector<WaveformRecord>& pred, const std::vector<WaveformRecord>& ref,
                            const MetricOptions& opt) {
    if (pred.size() != ref.size()) throw ContractError("evaluate: prediction and reference counts differ");
    Evaluation e;
    e.samples = ref.size();
    for (std::size_t i = 0; i < ref.size(); ++i) {
        require_same_shape(pred[i].data, ref[i].data, "evaluate");
        e.sensors = ref[i].data.dim(0) * ref[i].data.dim(1);
        e.report.add(compare_records(pred[i], ref[i], opt));
    }
    return e;
}

Evaluation evaluate(const Checkpoint& ck, const Dataset& d, const MetricOptions& opt, std::size_t workers) {
    const std::size_t n = d.samples.size();
    std::vector<WaveformRecord> pred(n), ref(n);
    std::vector<double> factors(n);
    parallel_for(n, workers, [&](std::size_t i) {
        const Sample& s = d.samples[i];
        if (!s.wavefield) throw DataError("evaluate: sample " + std::to_string(i) + " has no reference wavefield");
        factors[i] = metric_scale(s.geology, s.source);
        pred[i] = predict(ck, s.geology, s.source, s.wavefield->dt_out);
        ref[i] = *s.wavefield;
    });
    normalize_for_metrics(pred, ref, factors);
    return evaluate_records(pred, ref, opt);
}

std::string Evaluation::table() const {
    const auto& names = metric_names();
    std::ostringstream os;
    os.precision(6);
    os << "sample\tsensor";
    for (const auto& n : names) os << '\t' << n;
    os << '\n';
    const auto& vals = report.values();
    for (std::size_t s = 0; s < samples; ++s)
        for (std::size_t k = 0; k < sensors; ++k) {
            os << s << '\t' << k;
            for (const auto& n : names) os << '\t' << vals.at(n)[s * sensors + k];
            os << '\n';
        }
    const auto sum = report.summary();
    os << "mean\t-";
    for (const auto& n : names) os << '\t' << sum.at(n).mean;
    os << "\nstd\t-";
    for (const auto& n : names) os << '\t' << sum.at(n).stddev;
    os << '\n';
    return os.str();
}

// History -------------------------------------------------------------------

void store_history(Container& extra, const TrainHistory& h) {
    const std::size_t n = h.train_loss.size();
    extra.put(Entry::from_tensor("history/train_loss", Tensor({n}, h.train_loss)));
    extra.put(Entry::from_tensor("history/val_loss", Tensor({n}, h.val_loss)));
    extra.put(Entry::from_tensor("history/learning_rate", Tensor({n}, h.learning_rate)));
    extra.put(Entry::from_i64("history/best_epoch", {}, {std::int64_t(h.best_epoch)}));
    extra.put(Entry::scalar("history/best_val", h.best_val));
}

TrainHistory load_history(const Container& extra) {
    TrainHistory h;
    if (!extra.has("history/train_loss")) return h;
    auto vec = [&](const char* name) {
        const Tensor t = extra.at(name).to_tensor();
        return std::vector<double>(t.values().begin(), t.values().end());
    };
    h.train_loss = vec("history/train_loss");
    h.val_loss = vec("history/val_loss");
    h.learning_rate = vec("history/learning_rate");
    h.best_epoch = std::size_t(extra.at("history/best_epoch").to_i64().at(0));
    h.best_val = extra.at("history/best_val").to_scalar();
    return h;
}

}  // namespace mifno
