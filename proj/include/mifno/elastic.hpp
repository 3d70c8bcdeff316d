#pragma once

#include <span>
#include <vector>

#include "mifno/types.hpp"

namespace mifno {

struct SimConfig {
    double dx = 200.0;        // m
    double dt = 0.005;        // s
    double duration = 3.2;    // s, Nt * dt_out
    double dt_out = 0.05;     // s, integer multiple of dt
    std::size_t sponge_width = 10;        // cells added outside the lateral and bottom faces
    double sponge_edge_factor = 0.95;     // per-step damping at the outer face
    std::size_t sensors_per_side = 16;

    std::size_t output_steps() const;
    std::size_t steps_per_output() const;
    void validate() const;
};

/// t -> 1 - (1 + t/tau) exp(-t/tau).
double source_time_function(double t, double tau);

struct StabilityReport {
    double dt_max = 0.0;
    bool stable = false;
    /// Minimum S-wave points per wavelength at the target frequency.
    double points_per_wavelength = 0.0;
    bool under_resolved = false;  // fewer than 4 points per S wavelength
    /// Round-trip amplitude factor of a wave at the fastest P speed crossing the sponge.
    double sponge_reflection = 0.0;
};

/// dt_max = 0.5 dx / (sqrt(3) Vp_max).
double max_stable_dt(double vp_max, double dx);
StabilityReport stability_check(const GeologyModel& g, const SimConfig& cfg, double target_frequency = 5.0);

struct SimDiagnostics {
    std::vector<double> kinetic_energy;  // per time step, physical region only, J
    std::size_t steps = 0;
};

/// Surface velocity record at a regular ns x ns sensor grid, sensor i at (i + 1/2) L / ns.
WaveformRecord simulate(const GeologyModel& g, std::span<const SourceSpec> sources, const SimConfig& cfg,
                        SimDiagnostics* diag = nullptr);
WaveformRecord simulate(const GeologyModel& g, const SourceSpec& source, const SimConfig& cfg,
                        SimDiagnostics* diag = nullptr);

/// Time of the first sample with |trace| >= fraction * max |trace| inside [t_begin, t_end),
/// linearly interpolated between samples. Negative when nothing qualifies.
double first_arrival(std::span<const double> trace, double dt, double t_begin, double t_end, double fraction = 0.5);

/// Component c (0 E, 1 N, 2 Z) of sensor (i, j) as a contiguous series.
std::vector<double> sensor_trace(const WaveformRecord& w, std::size_t i, std::size_t j, std::size_t c);

}  // namespace mifno
