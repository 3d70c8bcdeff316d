#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "mifno/layers.hpp"
#include "mifno/types.hpp"

namespace mifno {

enum class SourceMode { angles, moment, position_only, none };
enum class Baseline { mifno, ffno_cubes, ffno_binary, ffno_plain };

std::string to_string(SourceMode m);
std::string to_string(Baseline b);
SourceMode parse_source_mode(const std::string& s);
Baseline parse_baseline(const std::string& s);
std::size_t source_vector_length(SourceMode m);

struct ModelConfig {
    std::size_t layers = 16;         // L
    std::size_t branch_layers = 4;   // K
    std::size_t d_v = 16;
    std::array<std::size_t, 3> modes{16, 16, 32};
    std::size_t modes3_first = 16;   // third-axis modes of layer 1
    /// Mode counts that size the source branch; 0 picks (M1, M2, Sz/2).
    std::array<std::size_t, 3> source_modes{0, 0, 0};
    std::size_t mlp_hidden = 0;      // 0: the layer's channel count
    std::size_t q_hidden = 128;
    std::size_t source_hidden = 128;
    std::size_t source_conv_channels = 8;
    SourceMode source_mode = SourceMode::angles;
    Baseline baseline = Baseline::mifno;
    double domain_length = 9600.0;   // m
    std::array<std::size_t, 3> resolution{32, 32, 32};
    std::size_t out_len = 320;
    Activation activation = Activation::gelu;

    static ModelConfig paper();
    void validate() const;
};

/// Per-layer configuration, index 0 is layer 1. out_len_axis3 == 0 keeps the input length.
std::vector<LayerConfig> layer_schedule(const ModelConfig& cfg);
std::array<std::size_t, 3> effective_source_modes(const ModelConfig& cfg);

struct NormalizationSpec {
    Tensor mean_geology;      // [Sx, Sy, Sz], m/s
    double std_geology = 0.0; // m/s
    double domain_length = 9600.0;
    /// Dataset-level factor applied on top of the physical normalization c so
    /// that normalized targets are O(1).
    double output_scale = 1.0;

    bool ready() const { return std_geology > 0.0 && mean_geology.rank() == 3; }
};

Tensor normalize_geology(const Tensor& a, const NormalizationSpec& spec);
Tensor denormalize_geology(const Tensor& a, const NormalizationSpec& spec);

/// Position over the domain length (depth as |z|), then angles over (360, 90, 360)
/// or moment components over M0, depending on the mode.
std::vector<double> normalize_source(const SourceSpec& s, double domain_length, SourceMode mode);

/// c = Vs(x_s) * sqrt(z_s^2 + (L/4)^2).
double output_norm_factor(double vs_at_source, double z_s, double domain_length);

/// S-wave velocity of the cell containing the source (nearest cell, clamped).
double vs_at(const Tensor& vs, double dx, const std::array<double, 3>& position);

/// Full normalization factor for one sample's wavefield: output_scale * c.
/// Amplitudes fall with source stiffness and depth, so multiplying by c evens
/// them out across samples.
double wavefield_scale(const NormalizationSpec& spec, const GeologyModel& g, const SourceSpec& s);

/// Trilinear resampling of a cell-centred grid onto a new shape.
Tensor resample_grid(const Tensor& grid, const Shape& shape);

WeightMap init_weights(const ModelConfig& cfg, std::uint64_t seed);

/// Source branch lifted to [Sx, Sy, Sz, d_v].
Var source_branch(const std::vector<double>& s_norm, const ParamBinding& p, const ModelConfig& cfg,
                  const std::array<std::size_t, 3>& target);

Var combine_branches(const Var& vk, const Var& vs);

/// Normalized geology [Sx, Sy, Sz] and normalized source vector -> [Sx, Sy, St, 3].
Var mifno_forward(const Tensor& geology, const std::vector<double>& s_norm, const ParamBinding& p,
                  const ModelConfig& cfg);
/// Input stack of a single-branch baseline: geology, grids and the variant's source channels.
Tensor baseline_input(const Tensor& geology, const std::vector<double>& s_norm, const ModelConfig& cfg);
Var ffno_baseline_forward(const Tensor& geology, const std::vector<double>& s_norm, const ParamBinding& p,
                          const ModelConfig& cfg);
/// Dispatches on cfg.baseline.
Var model_forward(const Tensor& geology, const std::vector<double>& s_norm, const ParamBinding& p,
                  const ModelConfig& cfg);

std::size_t count_parameters(const WeightMap& w);
/// Counts grouped by the first path component of each weight name.
std::map<std::string, std::size_t> count_parameters_by_group(const WeightMap& w);

}  // namespace mifno
