#pragma once

#include <filesystem>
#include <string>

#include "mifno/container.hpp"
#include "mifno/model.hpp"

namespace mifno {

std::string config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const std::string& text);

struct Checkpoint {
    ModelConfig config;
    WeightMap weights;
    NormalizationSpec norm;
    /// Entries outside the model namespaces (training history and the like).
    Container extra;
};

/// Entries: "meta/config" (JSON text), "weights/<name>" per array, "norm/*".
Container checkpoint_container(const Checkpoint& ck);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
/// Validates that every weight array named by the config is present with the expected shape.
Checkpoint checkpoint_from_container(const Container& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mifno
