#pragma once

#include <array>
#include <complex>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mifno/types.hpp"

namespace mifno {

/// sqrt(mean((p - r)^2 / (r^2 + eps^2))).
double rrmse(std::span<const double> pred, std::span<const double> ref, double eps = 0.01);
/// mean(|p - r| / |r + eps|).
double rmae(std::span<const double> pred, std::span<const double> ref, double eps = 0.01);

struct FrequencyBand {
    double lo = 0.0;  // Hz, inclusive
    double hi = 0.0;  // Hz, exclusive
};
inline constexpr FrequencyBand kLowBand{0.0, 1.0};
inline constexpr FrequencyBand kMidBand{1.0, 2.0};
inline constexpr FrequencyBand kHighBand{2.0, 5.0};

/// Relative error of the band-averaged Fourier amplitude.
double frequency_bias(std::span<const double> pred, std::span<const double> ref, FrequencyBand band, double dt);

struct GofOptions {
    double f_min = 0.1;
    double f_max = 5.0;
    std::size_t voices = 40;
    double omega0 = 6.0;
};

/// Complex Morlet transform, [voices][n] row-major. Each row is the analytic
/// band-pass of the trace around one frequency, scaled so a sinusoid at that
/// frequency has its own amplitude as modulus.
std::vector<std::complex<double>> morlet_cwt(std::span<const double> trace, double dt, const GofOptions& opt);
std::vector<double> gof_frequencies(const GofOptions& opt);

struct Gof {
    double envelope = 0.0;  // EG
    double phase = 0.0;     // PG
    double envelope_misfit = 0.0;
    double phase_misfit = 0.0;
};
Gof envelope_phase_gof(std::span<const double> pred, std::span<const double> ref, double dt,
                       const GofOptions& opt = {});

/// Per-sensor sum over time of the mean squared component, [ns, ns].
Tensor energy_integral(const WaveformRecord& rec);
/// Energy integral divided by its maximum over sensors.
Tensor normalized_energy_integral(const WaveformRecord& rec);

/// Smallest number of principal components explaining `threshold` of the
/// variance; rows are samples.
std::size_t intrinsic_dim_pca(const std::vector<std::vector<double>>& data, double threshold = 0.95);

struct MleResult {
    double dimension = 0.0;
    std::size_t excluded = 0;  // points dropped for zero neighbour distances
};
/// Levina-Bickel maximum-likelihood estimate with k neighbours, averaged over points.
MleResult intrinsic_dim_mle(const std::vector<std::vector<double>>& data, std::size_t k = 10);

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t count = 0;
};

/// Metric names in report order.
const std::vector<std::string>& metric_names();

struct MetricOptions {
    double eps = 0.01;
    GofOptions gof;
};

/// Per-sensor metrics of one predicted record against its reference. Each
/// value averages the three components over those where it is defined.
std::map<std::string, std::vector<double>> compare_records(const WaveformRecord& pred, const WaveformRecord& ref,
                                                           const MetricOptions& opt = {});

/// Accumulates per-sensor values over samples in insertion order.
class MetricReport {
public:
    void add(const std::map<std::string, std::vector<double>>& per_sensor);
    std::map<std::string, Summary> summary() const;
    const std::map<std::string, std::vector<double>>& values() const { return values_; }
    /// Tab-separated "metric mean stddev count" lines with a header.
    std::string table() const;

private:
    std::map<std::string, std::vector<double>> values_;
};

}  // namespace mifno
