#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mifno/autodiff.hpp"

namespace mifno::testing {

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, DType dtype = DType::real, double scale = 1.0) {
    Tensor t(shape, dtype);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (auto& v : t.raw()) v = u(rng);
    return t;
}

/// Scalar loss with a fixed random weight per entry; complex outputs are first
/// contracted with random complex weights and reduced to their real part.
inline Var weighted_sum(const Var& y, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Var yr = y.value().is_complex() ? real_part(mul(y, constant(random_tensor(y.shape(), rng, DType::complex))))
                                    : y;
    return sum(mul(yr, constant(random_tensor(yr.shape(), rng))));
}

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
};

using LossBuilder = std::function<Var(std::span<const Var> params)>;

/// Compares tape gradients against central differences on (a subset of) the raw
/// doubles of each parameter. Complex entries are perturbed in re and im separately.
inline GradCheckResult gradcheck(const LossBuilder& build, std::vector<Tensor> params, double step = 1e-6,
                                 std::size_t max_per_param = 40, std::uint64_t seed = 1) {
    auto eval = [&](const std::vector<Tensor>& ps) {
        std::vector<Var> vars;
        for (const auto& p : ps) vars.push_back(constant(p));
        return build(vars).value().item();
    };

    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : params) vars.push_back(tape.parameter(p));
    const Var loss = build(vars);
    const Gradients grads = tape.backward(loss);

    GradCheckResult res;
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k < params.size(); ++k) {
        const Tensor& g = grads.at(vars[k].id());
        const std::size_t n = params[k].raw().size();
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        if (n > max_per_param) {
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(max_per_param);
        }
        for (std::size_t i : idx) {
            std::vector<Tensor> plus = params, minus = params;
            plus[k].raw()[i] += step;
            minus[k].raw()[i] -= step;
            const double fd = (eval(plus) - eval(minus)) / (2.0 * step);
            const double an = g.raw()[i];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-3});
            res.max_rel_error = std::max(res.max_rel_error, std::abs(fd - an) / denom);
            ++res.checked;
        }
    }
    return res;
}

}  // namespace mifno::testing
