#include "mifno/checkpoint.hpp"

#include <json.hpp>

#include "mifno/errors.hpp"

namespace mifno {

namespace {

const std::string kWeightPrefix = "weights/";

}  // namespace

std::string config_to_json(const ModelConfig& cfg) {
    nlohmann::json j;
    j["layers"] = cfg.layers;
    j["branch_layers"] = cfg.branch_layers;
    j["d_v"] = cfg.d_v;
    j["modes"] = cfg.modes;
    j["modes3_first"] = cfg.modes3_first;
    j["source_modes"] = cfg.source_modes;
    j["mlp_hidden"] = cfg.mlp_hidden;
    j["q_hidden"] = cfg.q_hidden;
    j["source_hidden"] = cfg.source_hidden;
    j["source_conv_channels"] = cfg.source_conv_channels;
    j["source_mode"] = to_string(cfg.source_mode);
    j["baseline"] = to_string(cfg.baseline);
    j["domain_length"] = cfg.domain_length;
    j["resolution"] = cfg.resolution;
    j["out_len"] = cfg.out_len;
    j["activation"] = cfg.activation == Activation::gelu ? "gelu" : "relu";
    return j.dump();
}

ModelConfig config_from_json(const std::string& text) {
    ModelConfig cfg;
    try {
        const auto j = nlohmann::json::parse(text);
        cfg.layers = j.at("layers");
        cfg.branch_layers = j.at("branch_layers");
        cfg.d_v = j.at("d_v");
        cfg.modes = j.at("modes");
        cfg.modes3_first = j.at("modes3_first");
        cfg.source_modes = j.at("source_modes");
        cfg.mlp_hidden = j.at("mlp_hidden");
        cfg.q_hidden = j.at("q_hidden");
        cfg.source_hidden = j.at("source_hidden");
        cfg.source_conv_channels = j.at("source_conv_channels");
        cfg.source_mode = parse_source_mode(j.at("source_mode"));
        cfg.baseline = parse_baseline(j.at("baseline"));
        cfg.domain_length = j.at("domain_length");
        cfg.resolution = j.at("resolution");
        cfg.out_len = j.at("out_len");
        const std::string act = j.at("activation");
        if (act != "gelu" && act != "relu") throw DataError("unknown activation '" + act + "'");
        cfg.activation = act == "gelu" ? Activation::gelu : Activation::relu;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model config: ") + e.what());
    }
    return cfg;
}

Container checkpoint_container(const Checkpoint& ck) {
    Container c;
    c.add(Entry::from_string("meta/config", config_to_json(ck.config)));
    for (const auto& [name, t] : ck.weights) c.add(Entry::from_tensor(kWeightPrefix + name, t));
    if (ck.norm.ready()) {
        c.add(Entry::from_tensor("norm/mean_geology", ck.norm.mean_geology));
        c.add(Entry::scalar("norm/std_geology", ck.norm.std_geology));
    }
    c.add(Entry::scalar("norm/domain_length", ck.norm.domain_length));
    c.add(Entry::scalar("norm/output_scale", ck.norm.output_scale));
    for (const auto& e : ck.extra.entries()) c.add(e);
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    write_container(path, checkpoint_container(ck));
}

Checkpoint checkpoint_from_container(const Container& c) {
    Checkpoint ck;
    ck.config = config_from_json(c.at("meta/config").to_string());
    try {
        ck.config.validate();
    } catch (const ContractError& e) {
        throw DataError(std::string("checkpoint config: ") + e.what());
    }
    const WeightMap expected = init_weights(ck.config, 0);
    for (const auto& [name, t] : expected) {
        const std::string key = kWeightPrefix + name;
        if (!c.has(key)) throw DataError("checkpoint is missing weight array '" + name + "'");
        Tensor w = c.at(key).to_tensor();
        if (w.shape() != t.shape() || w.dtype() != t.dtype())
            throw DataError("checkpoint weight '" + name + "' has shape " + shape_string(w.shape()) + ", expected " +
                            shape_string(t.shape()));
        ck.weights.emplace(name, std::move(w));
    }
    for (const auto& e : c.entries()) {
        if (e.name.rfind(kWeightPrefix, 0) == 0) {
            if (!expected.count(e.name.substr(kWeightPrefix.size())))
                throw DataError("checkpoint has unexpected weight array '" + e.name + "'");
        } else if (e.name.rfind("norm/", 0) != 0 && e.name != "meta/config") {
            ck.extra.add(e);
        }
    }
    if (c.has("norm/mean_geology")) {
        ck.norm.mean_geology = c.at("norm/mean_geology").to_tensor();
        ck.norm.std_geology = c.at("norm/std_geology").to_scalar();
    }
    ck.norm.domain_length = c.at("norm/domain_length").to_scalar();
    ck.norm.output_scale = c.at("norm/output_scale").to_scalar();
    return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_container(read_container(path)); }

}  // namespace mifno
