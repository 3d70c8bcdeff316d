#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mifno/tensor.hpp"

namespace mifno {

/// Coordinates: x points east, y north, z up (z < 0 below the free surface), m.
/// Grids index (x, y, depth) with depth index 0 at the surface.
struct SourceSpec {
    std::array<double, 3> position{};
    /// strike, dip, rake in degrees. When present the moment is derived from them.
    std::optional<std::array<double, 3>> angles;
    /// Moment tensor in (north, east, down): Mnn, Mee, Mdd, Mne, Mnd, Med, N m.
    std::array<double, 6> moment{};
    double m0 = 1.0;
    double rise_time = 0.1;
};

struct LayerSpec {
    double thickness = 0.0;  // m
    double mean_vs = 0.0;    // m/s
    double cv = 0.0;
    std::array<double, 3> corr_length{1500.0, 1500.0, 1500.0};  // m
};

struct GeologyModel {
    Tensor vs;   // [Nx, Ny, Nz], m/s
    Tensor vp;
    Tensor rho;  // kg/m^3
    double dx = 0.0;
    std::vector<LayerSpec> layers;

    double domain_length() const { return dx * static_cast<double>(vs.dim(0)); }
};

/// Surface velocity record, components (E, N, Z) with Z positive up.
struct WaveformRecord {
    Tensor data;  // [ns, ns, Nt, 3], m/s
    double dt_out = 0.0;
    std::vector<double> sensor_x;  // ns coordinates along x, m
    std::vector<double> sensor_y;
    std::string provenance = "simulated";
};

}  // namespace mifno
