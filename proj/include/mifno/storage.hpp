#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mifno/container.hpp"
#include "mifno/elastic.hpp"
#include "mifno/metrics.hpp"
#include "mifno/model.hpp"
#include "mifno/scenario.hpp"
#include "mifno/training.hpp"

namespace mifno {

// Dataset containers --------------------------------------------------------
//
// Arrays are stacked over samples along a leading axis:
//   geology/vs, geology/vp, geology/rho   [n, Nx, Ny, Nz]  m/s, m/s, kg/m^3
//   geology/dx                            scalar, m
//   source/position [n, 3] m; source/angles [n, 3] deg (NaN rows: moment-only)
//   source/moment [n, 6] N m (nn, ee, dd, ne, nd, ed); source/m0 [n]; source/rise_time [n] s
//   wavefield/data [n, ns, ns, Nt, 3] m/s; wavefield/dt scalar s; wavefield/sensor_x, sensor_y [ns] m
//   meta/seed i64; meta/provenance text; meta/augmented i64
// A container may hold any subset of the geology, source and wavefield groups.

struct DatasetFile {
    std::vector<GeologyModel> geologies;
    std::vector<SourceSpec> sources;
    std::vector<WaveformRecord> wavefields;
    std::int64_t seed = -1;
    std::string provenance = "generated";
    bool augmented = false;
};

/// f32 wavefield storage is lossy and is recorded in the provenance.
Container to_container(const DatasetFile& d, bool wavefield_f32 = false);
DatasetFile from_container(const Container& c);
void save_dataset(const std::filesystem::path& path, const DatasetFile& d, bool wavefield_f32 = false);
DatasetFile load_dataset(const std::filesystem::path& path);

/// Zips geology, source and (when present) wavefield groups into samples.
Dataset to_dataset(const DatasetFile& f);
DatasetFile to_file(const Dataset& d);

// Run configuration ---------------------------------------------------------

struct RunConfig {
    GeneratorParams generator;
    std::string preset;  // empty: sampled layers
    SimConfig sim;
    ModelConfig model;
    TrainConfig train;
    MetricOptions eval;
};

/// INI text with sections [domain] [geology] [source] [sim] [model] [train]
/// [eval]. Unknown sections or keys and malformed values are errors.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Fully populated, commented INI that parses back to `cfg`.
std::string run_config_text(const RunConfig& cfg);

// Pipeline stages -----------------------------------------------------------

/// Worker count after applying the MIFNO_THREADS cap (at least 1).
std::size_t effective_workers(std::size_t requested);

std::vector<GeologyModel> generate_geologies(std::uint64_t seed, std::size_t n, const GeneratorParams& p,
                                             const std::string& preset = {}, std::size_t workers = 1);

/// Simulates sample i = (geologies[i], sources[i]). Each worker simulates a
/// contiguous shard and writes it next to `out`; shards are merged in order, so
/// the published file does not depend on the worker count.
void simulate_to_file(const std::vector<GeologyModel>& geologies, const std::vector<SourceSpec>& sources,
                      const SimConfig& cfg, const std::filesystem::path& out, std::size_t workers,
                      std::int64_t seed = -1, bool wavefield_f32 = false);

}  // namespace mifno
