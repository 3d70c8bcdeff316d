#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mifno/random.hpp"
#include "mifno/types.hpp"

namespace mifno {

enum class CorrelationKernel { gaussian, exponential };

std::string to_string(CorrelationKernel k);
CorrelationKernel parse_kernel(const std::string& s);

/// Parameters of the stochastic geology and source generators. Defaults describe
/// the 9.6 km domain sampled on 32^3 cells.
struct GeneratorParams {
    double domain_length = 9600.0;        // m, horizontal extent and depth
    std::size_t cells = 32;               // geology cells per axis
    double heterogeneous_thickness = 7800.0;
    double bottom_thickness = 1800.0;
    double bottom_vs = 4500.0;
    std::size_t max_layers = 6;
    std::array<double, 2> mean_vs_range{1785.0, 3214.0};
    double cv_mean = 0.2;
    double cv_sd = 0.1;
    std::vector<double> corr_lengths{1500.0, 3000.0, 4500.0, 6000.0};
    CorrelationKernel kernel = CorrelationKernel::gaussian;
    double vs_min = 1071.0;
    double vs_max = 4500.0;

    // Source design ranges (m, degrees).
    std::array<double, 2> source_x{1200.0, 8400.0};
    std::array<double, 2> source_y{1200.0, 8400.0};
    std::array<double, 2> source_z{-9000.0, -600.0};
    std::array<double, 2> strike{0.0, 360.0};
    std::array<double, 2> dip{0.0, 90.0};
    std::array<double, 2> rake{0.0, 360.0};
    double m0 = 2.47e16;     // N m
    double rise_time = 0.1;  // s

    double dx() const { return domain_length / static_cast<double>(cells); }
    void validate() const;
};

/// Heterogeneous layers (top down) followed by the fixed bottom layer.
std::vector<LayerSpec> sample_layered_model(Philox& rng, const GeneratorParams& p);

/// Zero-mean, unit-variance stationary field on `shape` cells of size `spacing`.
Tensor gaussian_random_field(const Shape& shape, double spacing, const std::array<double, 3>& corr_length,
                             Philox& rng, CorrelationKernel kernel = CorrelationKernel::gaussian);

/// Index of the layer containing depth `depth` (m, positive down); the last layer
/// absorbs anything deeper than the table.
std::size_t layer_at_depth(const std::vector<LayerSpec>& layers, double depth);

/// Log-normal fluctuations per layer (one field per layer, each of the full grid
/// shape), then the global clip. Vp and rho are derived.
GeologyModel apply_heterogeneity(const std::vector<LayerSpec>& layers, const std::vector<Tensor>& fields, double dx,
                                 double vs_min = 1071.0, double vs_max = 4500.0);

/// Piecewise-constant geology from a layer table (fluctuations ignored).
GeologyModel layered_geology(const std::vector<LayerSpec>& layers, std::size_t cells, double dx);

double vp_from_vs(double vs);
/// Piecewise-linear through the Le Teil (Vs, rho) pairs, clamped outside.
double density_from_vs(double vs);
void derive_vp_rho(GeologyModel& g);

/// Complete generated geology for sample `index`; depends only on (seed, index, p).
GeologyModel generate_geology(std::uint64_t seed, std::uint64_t index, const GeneratorParams& p);
/// Same random fields for a fixed layer table (presets).
GeologyModel generate_geology_from_layers(std::uint64_t seed, std::uint64_t index, const std::vector<LayerSpec>& layers,
                                          const GeneratorParams& p);

/// n points, one per stratum in every dimension, strata permuted independently.
std::vector<std::vector<double>> lhs_sample(std::size_t n, const std::vector<std::array<double, 2>>& ranges,
                                            Philox& rng);

/// Double-couple moment (Mnn, Mee, Mdd, Mne, Mnd, Med) for angles in degrees.
std::array<double, 6> angles_to_moment(double strike, double dip, double rake, double m0);

/// Latin-hypercube design over position and angles; moments derived.
std::vector<SourceSpec> generate_sources(std::uint64_t seed, std::size_t n, const GeneratorParams& p);

struct Sample {
    GeologyModel geology;
    SourceSpec source;
    std::optional<WaveformRecord> wavefield;
};

/// Rotation by k clockwise quarter turns about the vertical axis through the
/// domain centre, seen from above: (x, y) -> (y, L - x) per turn. Horizontal
/// velocity components follow (E, N) -> (N, -E); strike increases by 90 degrees.
Sample rotate_sample_90(const Sample& s, int k);

/// Grid rotation used by rotate_sample_90 on the two leading axes.
Tensor rotate_grid_90(const Tensor& t, int k);
std::array<double, 6> rotate_moment_90(const std::array<double, 6>& m, int k);

/// "le_teil_1d", "paper_domain" or "homogeneous" (Vs 2000 m/s throughout).
std::vector<LayerSpec> load_preset(const std::string& name);

}  // namespace mifno
