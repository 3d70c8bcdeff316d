#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "mifno/model.hpp"

namespace mifno::testing {

inline ModelConfig tiny_config(Baseline b = Baseline::mifno) {
    ModelConfig cfg;
    cfg.layers = 3;
    cfg.branch_layers = 1;
    cfg.d_v = 4;
    cfg.modes = {3, 3, 3};
    cfg.modes3_first = 3;
    cfg.q_hidden = 6;
    cfg.source_hidden = 8;
    cfg.source_conv_channels = 2;
    cfg.resolution = {8, 8, 8};
    cfg.out_len = 12;
    cfg.domain_length = 9600.0;
    cfg.baseline = b;
    cfg.source_mode = SourceMode::angles;
    return cfg;
}

/// Desk-scale model: 16^3 geology, 16x16x64 output, d_v = 8, L = 8, K = 2.
inline ModelConfig desk_config() {
    ModelConfig cfg;
    cfg.layers = 8;
    cfg.branch_layers = 2;
    cfg.d_v = 8;
    cfg.modes = {8, 8, 16};
    cfg.modes3_first = 8;
    cfg.q_hidden = 32;
    cfg.source_hidden = 32;
    cfg.resolution = {16, 16, 16};
    cfg.out_len = 64;
    return cfg;
}

/// Central differences on `count` randomly chosen scalar weights of a model
/// whose loss is a fixed random weighting of the squared outputs.
inline double model_gradcheck(const ModelConfig& cfg, const WeightMap& weights, const Tensor& geology,
                              const std::vector<double>& s_norm, std::size_t count, std::uint64_t seed,
                              double step = 1e-5) {
    std::mt19937_64 rng(seed);
    Tensor mask;
    auto loss_of = [&](const ParamBinding& p) {
        Var y = model_forward(geology, s_norm, p, cfg);
        if (mask.size() != y.value().size() || mask.shape() != y.shape()) {
            mask = Tensor(y.shape());
            std::uniform_real_distribution<double> u(0.5, 1.5);
            for (auto& m : mask.values()) m = u(rng);
        }
        return mean(mul(mul(y, y), constant(mask)));
    };
    Tape tape;
    ParamBinding bound(weights, &tape);
    const Var loss = loss_of(bound);
    const Gradients grads = tape.backward(loss);

    std::vector<std::string> names;
    for (const auto& [name, t] : weights) names.push_back(name);
    double worst = 0.0;
    for (std::size_t c = 0; c < count; ++c) {
        const std::string& name = names[rng() % names.size()];
        const std::size_t i = rng() % weights.at(name).raw().size();
        WeightMap plus = weights, minus = weights;
        plus[name].raw()[i] += step;
        minus[name].raw()[i] -= step;
        const double fd = (loss_of(ParamBinding(plus, nullptr)).value().item() -
                           loss_of(ParamBinding(minus, nullptr)).value().item()) /
                          (2.0 * step);
        const double an = grads.at(bound(name).id()).raw()[i];
        const double scale = std::max({std::abs(fd), std::abs(an), 1e-4 * std::abs(loss.value().item())});
        worst = std::max(worst, std::abs(fd - an) / scale);
    }
    return worst;
}

}  // namespace mifno::testing
