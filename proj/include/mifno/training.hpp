#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mifno/autodiff.hpp"
#include "mifno/checkpoint.hpp"
#include "mifno/metrics.hpp"
#include "mifno/scenario.hpp"

namespace mifno {

enum class Augmentation { none, rotations4 };
std::string to_string(Augmentation a);
Augmentation parse_augmentation(const std::string& s);

struct TrainConfig {
    double learning_rate = 4e-4;
    std::size_t patience = 10;       // epochs
    double factor = 0.5;
    double plateau_threshold = 1e-4; // relative improvement
    std::size_t epochs = 200;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    Augmentation augmentation = Augmentation::none;
    std::size_t n_train = 0;
    std::size_t n_val = 0;
    std::size_t n_test = 0;
    double clip_norm = 1.0;          // global gradient norm; 0 disables
    std::size_t workers = 1;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> learning_rate;
    std::vector<double> wall_time;  // s, per epoch; never written to checkpoints
    std::size_t best_epoch = 0;     // 1-based, 0 before any epoch
    double best_val = 0.0;
};

struct Dataset {
    std::vector<Sample> samples;
    /// Set once rotations have been appended; guards against augmenting twice.
    bool augmented = false;
    std::string provenance = "generated";
};

struct Splits {
    Dataset train, val, test;
};
/// Contiguous train/val/test split in sample order.
Splits split_dataset(const Dataset& d, std::size_t n_train, std::size_t n_val, std::size_t n_test);

/// Sum |p - u| / sum |u| of one sample, differentiable in `pred` (subgradient 0 at ties).
Var relative_mae(const Var& pred, const Tensor& ref);
/// Mean over samples of the per-sample relative MAE; all-zero references are
/// skipped with a warning on stderr. Throws UndefinedMetric if none remain.
double relative_mae_loss(const std::vector<Tensor>& pred, const std::vector<Tensor>& ref);

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};
struct AdamState {
    WeightMap m, v;
    std::uint64_t step = 0;
};
/// In-place bias-corrected Adam update. Complex arrays are treated as pairs of reals.
void adam_step(WeightMap& params, const WeightMap& grads, AdamState& state, double lr, const AdamParams& hp = {});

/// Scales all gradients so their global L2 norm is at most `max_norm`; returns the norm before clipping.
double clip_global_norm(WeightMap& grads, double max_norm);

/// Reduce-on-plateau rule: the rate is multiplied by `factor` once the
/// validation loss has gone `patience` epochs without improving on its best by
/// more than `threshold` (relative); the counter then restarts.
class PlateauScheduler {
public:
    PlateauScheduler(double lr, std::size_t patience, double factor, double threshold = 1e-4);
    /// Feeds one epoch's validation loss; returns the rate for the next epoch.
    double step(double val_loss);
    double learning_rate() const { return lr_; }

private:
    double lr_;
    std::size_t patience_;
    double factor_;
    double threshold_;
    double best_;
    std::size_t bad_epochs_ = 0;
};

/// Replays the plateau rule over a validation-loss history starting from `lr`.
double lr_on_plateau(const std::vector<double>& val_history, double lr, std::size_t patience, double factor,
                     double threshold = 1e-4);

/// Appends the three quarter-turn rotations of every sample (count x4).
Dataset augment_rotations(const Dataset& d);

/// Geology mean/std over the dataset and the output scale that makes
/// c-scaled targets unit RMS.
NormalizationSpec compute_normalization(const Dataset& d, double domain_length);

/// One sample in model units.
struct PreparedSample {
    Tensor geology;              // normalized [Sx, Sy, Sz]
    std::vector<double> source;  // normalized source vector
    Tensor target;               // normalized [Sx, Sy, St, 3], empty without a wavefield
    double scale = 1.0;          // physical -> normalized wavefield factor
};
PreparedSample prepare_sample(const Sample& s, const NormalizationSpec& norm, const ModelConfig& cfg);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double learning_rate = 0.0;
    double wall_time = 0.0;
};
using ProgressFn = std::function<void(const EpochRecord&)>;

struct TrainResult {
    Checkpoint best;  // best-validation weights
    TrainHistory history;
};

/// Mini-batch training from fresh weights (seeded by cfg.seed). Normalization
/// statistics come from the training split.
TrainResult train(const ModelConfig& model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg,
                  const ProgressFn& progress = {});
/// Same loop initialized from a checkpoint; keeps its normalization, all weights trainable.
TrainResult fine_tune(const Checkpoint& pretrained, const Dataset& train_set, const Dataset& val_set,
                      const TrainConfig& cfg, const ProgressFn& progress = {});

/// Mean relative MAE of the model on a dataset in normalized units.
double validation_loss(const Checkpoint& ck, const Dataset& d, std::size_t workers = 1);

/// Physical-unit wavefield predicted for one sample.
WaveformRecord predict(const Checkpoint& ck, const GeologyModel& g, const SourceSpec& s, double dt_out);
/// Time step of the training wavefields stored in a checkpoint (0 if absent).
double checkpoint_dt_out(const Checkpoint& ck);

/// Per-sample factor c applied to both records before scoring.
double metric_scale(const GeologyModel& g, const SourceSpec& s);
WaveformRecord scale_record(const WaveformRecord& r, double f);
/// Scales each pair by its factor (usually metric_scale), then both sets by one
/// constant that gives the references unit RMS, so the metric eps is a fixed
/// fraction of typical amplitude. Returns that constant.
double normalize_for_metrics(std::vector<WaveformRecord>& pred, std::vector<WaveformRecord>& ref,
                             const std::vector<double>& factors);

struct Evaluation {
    MetricReport report;
    std::size_t samples = 0;
    std::size_t sensors = 0;  // per sample
    /// One row per (sample, sensor) followed by mean and std rows.
    std::string table() const;
};
/// Predicts every sample, maps back to physical units and scores against the references.
Evaluation evaluate(const Checkpoint& ck, const Dataset& d, const MetricOptions& opt = {}, std::size_t workers = 1);
/// Scores paired records directly.
Evaluation evaluate_records(const std::vector<WaveformRecord>& pred, const std::vector<WaveformRecord>& ref,
                            const MetricOptions& opt = {});

/// History serialized into checkpoint extra entries (wall time excluded).
void store_history(Container& extra, const TrainHistory& h);
TrainHistory load_history(const Container& extra);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be written to per-index slots.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace mifno
