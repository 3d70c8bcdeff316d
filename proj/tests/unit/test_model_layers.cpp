#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mifno/errors.hpp"
#include "mifno/fft.hpp"
#include "mifno/layers.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace mifno;
using mifno::testing::axis_term_oracle;
using mifno::testing::gradcheck;
using mifno::testing::identity_weights;
using mifno::testing::random_tensor;
using mifno::testing::weighted_sum;

namespace {

LayerConfig small_layer(std::size_t d, std::size_t n3_out) {
    LayerConfig cfg;
    cfg.d_v = d;
    cfg.modes = {3, 3, 3};
    cfg.mlp_hidden = 5;
    cfg.out_len_axis3 = n3_out;
    return cfg;
}

}  // namespace

TEST_CASE("spectral_conv matches the dense-spectrum oracle (n=8, c=2, M=3)") {
    std::mt19937_64 rng(1);
    Tensor v = random_tensor({8, 8, 8, 2}, rng);
    std::vector<Tensor> r;
    for (int a = 0; a < 3; ++a) r.push_back(random_tensor({3, 2, 2}, rng, DType::complex));
    Tensor y = spectral_conv(constant(v), constant(r[0]), constant(r[1]), constant(r[2]), 8).value();
    Tensor ref = axis_term_oracle(v, r[0], 0, 8);
    ref += axis_term_oracle(v, r[1], 1, 8);
    ref += axis_term_oracle(v, r[2], 2, 8);
    CHECK(max_abs_diff(y, ref) < 1e-10);
}

TEST_CASE("axis terms match the oracle across length changes and Nyquist bins") {
    std::mt19937_64 rng(2);
    struct Case {
        Shape shape;
        std::size_t axis, modes, out_len, cout;
    };
    const std::vector<Case> cases{{{8, 3, 2}, 0, 5, 8, 3},  {{4, 6, 2}, 1, 4, 6, 1},  {{3, 8, 2}, 1, 5, 16, 2},
                                  {{2, 3, 9, 2}, 2, 5, 20, 2}, {{2, 3, 12, 1}, 2, 7, 8, 2}, {{5, 7, 1}, 0, 3, 4, 1}};
    for (const auto& c : cases) {
        Tensor v = random_tensor(c.shape, rng);
        Tensor r = random_tensor({c.modes, c.shape.back(), c.cout}, rng, DType::complex);
        Tensor y = spectral_axis(constant(v), constant(r), c.axis, c.out_len).value();
        INFO("shape " << shape_string(c.shape) << " axis " << c.axis << " out " << c.out_len);
        CHECK(max_abs_diff(y, axis_term_oracle(v, r, c.axis, c.out_len)) < 1e-10);
    }
}

TEST_CASE("full modes with identity weights give three times the input") {
    std::mt19937_64 rng(3);
    Tensor v = random_tensor({6, 8, 5, 3}, rng);
    Tensor y = spectral_conv(constant(v), constant(identity_weights(4, 3)), constant(identity_weights(5, 3)),
                             constant(identity_weights(3, 3)), 5)
                   .value();
    Tensor three = v;
    for (auto& x : three.values()) x *= 3.0;
    CHECK(max_abs_diff(y, three) < 1e-10);
    CHECK_THROWS_AS(spectral_axis(constant(v), constant(identity_weights(5, 3)), 0, 6), ContractError);
    CHECK_THROWS_AS(spectral_axis(constant(v), constant(identity_weights(2, 2)), 0, 6), ContractError);
}

TEST_CASE("axis terms are band-limited") {
    std::mt19937_64 rng(4);
    Tensor v = random_tensor({16, 4, 10, 2}, rng);
    for (std::size_t axis = 0; axis < 3; ++axis) {
        const std::size_t m = 3;
        Tensor y = spectral_axis(constant(v), constant(random_tensor({m, 2, 2}, rng, DType::complex)), axis,
                                 v.shape()[axis])
                       .value();
        Tensor f = fft_axis_kernel(y, axis, FftDirection::forward);
        const std::size_t n = v.shape()[axis];
        double above = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            // Recover the index along `axis` from the flat position.
            std::size_t stride = 1;
            for (std::size_t a = axis + 1; a < 4; ++a) stride *= f.shape()[a];
            const std::size_t k = (i / stride) % n;
            if (k >= m && k <= n - m) above = std::max(above, std::abs(f.cvalues()[i]));
        }
        CHECK(above < 1e-12);
    }
}

TEST_CASE("spectral_conv commutes with circular shifts along the first axis") {
    std::mt19937_64 rng(5);
    Tensor v = random_tensor({8, 6, 6, 2}, rng);
    std::vector<Tensor> r;
    for (int a = 0; a < 3; ++a) r.push_back(random_tensor({3, 2, 2}, rng, DType::complex));
    auto apply = [&](const Tensor& x) {
        return spectral_conv(constant(x), constant(r[0]), constant(r[1]), constant(r[2]), 6).value();
    };
    auto shift = [](const Tensor& x, std::size_t k) {
        Tensor out(x.shape());
        const std::size_t n = x.dim(0), block = x.size() / n;
        for (std::size_t i = 0; i < n; ++i)
            std::copy_n(x.values().data() + i * block, block, out.values().data() + ((i + k) % n) * block);
        return out;
    };
    CHECK(max_abs_diff(apply(shift(v, 3)), shift(apply(v), 3)) < 1e-9);
}

TEST_CASE("modify_dimensions identities and band-limited interpolation") {
    std::mt19937_64 rng(6);
    Tensor v = random_tensor({3, 4, 7, 2}, rng);
    CHECK(modify_dimensions(constant(v), 2, 7).value() == v);

    Tensor five = Tensor::full({1, 1, 4, 1}, 5.0);
    Tensor up = modify_dimensions(constant(five), 2, 8).value();
    CHECK(up.shape() == Shape{1, 1, 8, 1});
    for (double x : up.values()) CHECK(std::abs(x - 5.0) < 1e-12);

    Tensor sine({2, 16, 1});
    const double phase = 0.3;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 16; ++j)
            sine.at({i, j, 0}) = 1.5 * std::cos(2.0 * std::numbers::pi * 2.0 * j / 16.0 + phase);
    Tensor fine = modify_dimensions(constant(sine), 1, 64).value();
    double err = 0.0;
    for (std::size_t j = 0; j < 64; ++j)
        err = std::max(err, std::abs(fine.at({1, j, 0}) - 1.5 * std::cos(2.0 * std::numbers::pi * 2.0 * j / 64.0 + phase)));
    CHECK(err < 1e-10);

    // Down-sampling keeps a signal that is already band-limited to the coarse grid.
    Tensor back = modify_dimensions(constant(fine), 1, 16).value();
    CHECK(max_abs_diff(back, sine) < 1e-10);
    CHECK_THROWS_AS(modify_dimensions(constant(v), 3, 4), ContractError);
    CHECK_THROWS_AS(modify_dimensions(constant(v), 1, 0), ContractError);
}

TEST_CASE("gradients of spectral_axis and modify_dimensions on random shapes") {
    std::mt19937_64 rng(7);
    struct Case {
        Shape shape;
        std::size_t axis, modes, out_len;
    };
    const std::vector<Case> cases{{{6, 3, 2}, 0, 4, 6}, {{2, 5, 4, 3}, 2, 3, 10}, {{3, 8, 2, 1}, 1, 5, 4}};
    std::uint64_t seed = 40;
    for (const auto& c : cases) {
        Tensor v = random_tensor(c.shape, rng);
        Tensor r = random_tensor({c.modes, c.shape.back(), 2}, rng, DType::complex);
        const auto sd = ++seed;
        const std::size_t axis = c.axis, out_len = c.out_len;
        auto res = gradcheck([=](auto p) { return weighted_sum(spectral_axis(p[0], p[1], axis, out_len), sd); },
                             {v, r});
        INFO("spectral_axis " << shape_string(c.shape) << " err " << res.max_rel_error);
        CHECK(res.max_rel_error < 1e-5);
        auto res2 =
            gradcheck([=](auto p) { return weighted_sum(modify_dimensions(p[0], axis, out_len + 1), sd); }, {v});
        INFO("modify_dimensions err " << res2.max_rel_error);
        CHECK(res2.max_rel_error < 1e-5);
    }
}

TEST_CASE("uplift shape, zero weights and pointwise behaviour") {
    Philox rng(1, 1);
    WeightMap w;
    init_uplift(w, "uplift", 16, rng);
    Tensor geo({32, 32, 32});
    ParamBinding p(w, nullptr);
    CHECK(uplift(geo, p, "uplift").shape() == Shape{32, 32, 32, 16});

    WeightMap zero = w;
    for (auto& [k, t] : zero) t.fill(0.0);
    std::mt19937_64 g(9);
    Tensor small = random_tensor({3, 4, 5}, g);
    CHECK(max_abs(uplift(small, ParamBinding(zero, nullptr), "uplift").value()) == 0.0);

    // Permuting the assembled input along a spatial axis permutes the output.
    Tensor in = uplift_input(small);
    Tensor perm = in;
    const std::size_t block = in.size() / 3;
    std::copy_n(in.values().data(), block, perm.values().data() + 2 * block);
    std::copy_n(in.values().data() + 2 * block, block, perm.values().data());
    Tensor y = pointwise_linear(constant(in), p("uplift/w"), p("uplift/b")).value();
    Tensor yp = pointwise_linear(constant(perm), p("uplift/w"), p("uplift/b")).value();
    const std::size_t oblock = y.size() / 3;
    for (std::size_t i = 0; i < oblock; ++i) {
        CHECK(yp.values()[i] == y.values()[2 * oblock + i]);
        CHECK(yp.values()[oblock + i] == y.values()[oblock + i]);
    }
    CHECK_THROWS_AS(uplift_input(Tensor({3, 3})), ContractError);
}

TEST_CASE("fourier layer residual identity, constant preservation and weight gradient") {
    Philox rng(2, 1);
    const LayerConfig cfg = small_layer(3, 12);
    WeightMap w;
    init_fourier_layer(w, "layer", cfg, rng);

    std::mt19937_64 g(10);
    Tensor v = random_tensor({6, 6, 6, 3}, g);
    {
        WeightMap z = w;
        for (const char* name : {"layer/spectral/r1", "layer/spectral/r2", "layer/spectral/r3"}) z[name].fill(0.0);
        z["layer/mlp/w2"].fill(0.0);
        z["layer/mlp/b2"].fill(0.0);
        LayerConfig same = cfg;
        same.out_len_axis3 = 6;
        CHECK(max_abs_diff(fourier_layer(constant(v), ParamBinding(z, nullptr), "layer", same, Activation::gelu).value(),
                           v) == 0.0);
    }
    {
        LayerConfig grow = cfg;
        grow.out_len_axis3 = 12;
        Tensor c({4, 5, 6, 3});
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 5; ++j)
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    const double val = g() % 1000 / 500.0 - 1.0;
                    for (std::size_t k = 0; k < 6; ++k) c.at({i, j, k, ch}) = val;
                }
        Tensor out = fourier_layer(constant(c), ParamBinding(w, nullptr), "layer", grow, Activation::gelu).value();
        CHECK(out.shape() == Shape{4, 5, 12, 3});
        double spread = 0.0;
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 5; ++j)
                for (std::size_t ch = 0; ch < 3; ++ch)
                    for (std::size_t k = 1; k < 12; ++k)
                        spread = std::max(spread, std::abs(out.at({i, j, k, ch}) - out.at({i, j, 0, ch})));
        CHECK(spread < 1e-12);
    }
    {
        const Tensor r3 = w.at("layer/spectral/r3");
        auto res = gradcheck(
            [&](auto p) {
                WeightMap fixed = w;
                fixed.erase("layer/spectral/r3");
                ParamBinding pb(fixed, nullptr);
                Var k = spectral_conv(constant(v), pb("layer/spectral/r1"), pb("layer/spectral/r2"), p[0], 12);
                Var h = activate(pointwise_linear(k, pb("layer/mlp/w1"), pb("layer/mlp/b1")), Activation::gelu);
                Var m = pointwise_linear(h, pb("layer/mlp/w2"), pb("layer/mlp/b2"));
                return sum(add(modify_dimensions(constant(v), 2, 12), m));
            },
            {r3}, 1e-5, 30);
        CHECK(res.max_rel_error < 1e-5);
    }
}

TEST_CASE("projection heads") {
    Philox rng(3, 1);
    WeightMap w;
    init_project(w, "proj", 4, 8, rng);
    Tensor v({32, 32, 320, 4});
    Var out = project(constant(v), ParamBinding(w, nullptr), "proj", Activation::gelu);
    CHECK(out.shape() == Shape{32, 32, 320, 3});

    WeightMap z = w;
    for (auto& [k, t] : z) t.fill(0.0);
    std::mt19937_64 g(4);
    Tensor small = random_tensor({3, 2, 5, 4}, g);
    CHECK(max_abs(project(constant(small), ParamBinding(z, nullptr), "proj", Activation::gelu).value()) == 0.0);

    Tensor y = project(constant(small), ParamBinding(w, nullptr), "proj", Activation::relu).value();
    Tensor swapped = small;
    const std::size_t block = small.size() / 3;
    std::swap_ranges(swapped.values().begin(), swapped.values().begin() + block, swapped.values().begin() + block);
    Tensor ys = project(constant(swapped), ParamBinding(w, nullptr), "proj", Activation::relu).value();
    const std::size_t ob = y.size() / 3;
    for (std::size_t i = 0; i < ob; ++i) CHECK(ys.values()[i] == y.values()[ob + i]);
    CHECK_THROWS_AS(project(constant(Tensor({2, 2, 2, 5})), ParamBinding(w, nullptr), "proj", Activation::gelu),
                    ContractError);
}
