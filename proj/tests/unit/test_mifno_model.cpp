#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "mifno/checkpoint.hpp"
#include "mifno/errors.hpp"
#include "mifno/model.hpp"
#include "support/gradcheck.hpp"
#include "support/model_check.hpp"

using namespace mifno;
using mifno::testing::model_gradcheck;
using mifno::testing::random_tensor;
using mifno::testing::tiny_config;

namespace {

SourceSpec angle_source(double x, double y, double z, double strike = 30.0, double dip = 45.0, double rake = 90.0) {
    SourceSpec s;
    s.position = {x, y, z};
    s.angles = std::array<double, 3>{strike, dip, rake};
    return s;
}

Tensor random_geology(const Shape& s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return random_tensor(s, rng, DType::real, 0.5);
}

}  // namespace

TEST_CASE("geology normalization") {
    NormalizationSpec spec;
    spec.mean_geology = Tensor::full({4, 4, 4}, 2500.0);
    spec.std_geology = 300.0;
    CHECK(max_abs(normalize_geology(spec.mean_geology, spec)) == 0.0);
    Tensor shifted = Tensor::full({4, 4, 4}, 2500.0 + 600.0);
    const Tensor half = normalize_geology(shifted, spec);
    for (double v : half.values()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
    Tensor a = random_geology({4, 4, 4}, 1);
    for (auto& v : a.values()) v = 2500.0 + 1000.0 * v;
    CHECK(max_abs_diff(denormalize_geology(normalize_geology(a, spec), spec), a) < 1e-12);
    CHECK_THROWS_AS(normalize_geology(a, NormalizationSpec{}), ContractError);
}

TEST_CASE("source normalization") {
    auto v = normalize_source(angle_source(4800, 4800, -4800), 9600.0, SourceMode::angles);
    REQUIRE(v.size() == 6);
    CHECK(v[0] == 0.5);
    CHECK(v[1] == 0.5);
    CHECK(v[2] == 0.5);
    auto far = normalize_source(angle_source(12900, 5100, -2500, 298.7), 9600.0, SourceMode::angles);
    CHECK(far[0] == doctest::Approx(1.34375).epsilon(1e-15));
    CHECK(far[3] == doctest::Approx(298.7 / 360.0).epsilon(1e-15));
    CHECK(far[3] == doctest::Approx(0.829722).epsilon(1e-6));
    CHECK(normalize_source(angle_source(0, 0, -1), 9600.0, SourceMode::position_only).size() == 3);
    SourceSpec m;
    m.position = {1000, 2000, -3000};
    m.moment = {1, -1, 0, 0.5, 0, 0};
    m.m0 = 2.0;
    auto mv = normalize_source(m, 9600.0, SourceMode::moment);
    REQUIRE(mv.size() == 9);
    CHECK(mv[3] == 0.5);
    CHECK(mv[6] == 0.25);
    CHECK_THROWS_AS(normalize_source(m, 9600.0, SourceMode::angles), ContractError);
}

TEST_CASE("output normalization factor") {
    CHECK(output_norm_factor(2000.0, -2400.0, 9600.0) == doctest::Approx(2000.0 * 2400.0 * std::sqrt(2.0)));
    CHECK(output_norm_factor(2000.0, -2400.0, 9600.0) == doctest::Approx(6.78823e6).epsilon(1e-6));
    CHECK(output_norm_factor(1500.0, 0.0, 9600.0) == 1500.0 * 2400.0);
    double prev = 0.0;
    for (double z = 0.0; z <= 9000.0; z += 500.0) {
        const double c = output_norm_factor(2000.0, -z, 9600.0);
        CHECK(c > prev);
        prev = c;
    }
    CHECK_THROWS_AS(output_norm_factor(0.0, -100.0, 9600.0), ContractError);

    GeologyModel g;
    g.dx = 600.0;
    g.vs = Tensor::full({16, 16, 16}, 2000.0);
    SourceSpec s;
    s.position = {3000.0, 3000.0, -2400.0};
    NormalizationSpec spec;
    spec.output_scale = 0.25;
    CHECK(wavefield_scale(spec, g, s) == doctest::Approx(0.25 * output_norm_factor(2000.0, -2400.0, 9600.0)));
}

TEST_CASE("layer schedule") {
    ModelConfig paper = ModelConfig::paper();
    auto s = layer_schedule(paper);
    REQUIRE(s.size() == 16);
    CHECK(s[0].modes[2] == 16);
    CHECK(s[1].modes[2] == 17);  // clamped by the 32-long third axis
    CHECK(s[3].d_v == 16);
    CHECK(s[4].d_v == 48);
    CHECK(s[4].out_len_axis3 == 56);
    CHECK(s[15].out_len_axis3 == 320);
    CHECK(s[15].modes[2] == 32);
    for (std::size_t l = 5; l < 16; ++l) CHECK(s[l].out_len_axis3 >= s[l - 1].out_len_axis3);

    ModelConfig desk;
    desk.layers = 8;
    desk.branch_layers = 2;
    desk.resolution = {16, 16, 16};
    desk.out_len = 64;
    desk.modes = {8, 8, 16};
    desk.modes3_first = 8;
    auto d = layer_schedule(desk);
    const std::size_t expected[] = {24, 32, 40, 48, 56, 64};
    for (std::size_t l = 2; l < 8; ++l) CHECK(d[l].out_len_axis3 == expected[l - 2]);

    ModelConfig bad = desk;
    bad.branch_layers = 8;
    CHECK_THROWS_AS(bad.validate(), ContractError);
}

TEST_CASE("source branch shapes, zero weights and resolution independence") {
    ModelConfig cfg = ModelConfig::paper();
    auto m = effective_source_modes(cfg);
    CHECK(m == std::array<std::size_t, 3>{16, 16, 16});
    WeightMap w = init_weights(cfg, 3);
    CHECK(w.at("source/dense2/w").shape() == Shape{128, 4 * 16 * 16});
    CHECK(w.at("source/conv2d_2/k").shape() == Shape{3, 3, 8, 32});
    CHECK(w.at("source/conv3d_2/k").shape() == Shape{3, 3, 3, 8, 16});

    ModelConfig small = tiny_config();
    WeightMap ws = init_weights(small, 4);
    auto s = normalize_source(angle_source(3000, 4000, -2000), small.domain_length, small.source_mode);
    Var out = source_branch(s, ParamBinding(ws, nullptr), small, {8, 8, 8});
    CHECK(out.shape() == Shape{8, 8, 8, 4});
    Var out12 = source_branch(s, ParamBinding(ws, nullptr), small, {12, 12, 8});
    CHECK(out12.shape() == Shape{12, 12, 8, 4});

    WeightMap zero = ws;
    for (auto& [k, t] : zero) t.fill(0.0);
    CHECK(max_abs(source_branch(s, ParamBinding(zero, nullptr), small, {8, 8, 8}).value()) == 0.0);

    ModelConfig wide = small;
    wide.resolution = {12, 12, 8};
    CHECK(count_parameters(init_weights(wide, 4)) == count_parameters(ws));
    CHECK_THROWS_AS(source_branch({0.1, 0.2}, ParamBinding(ws, nullptr), small, {8, 8, 8}), ContractError);
}

TEST_CASE("branch combination") {
    std::mt19937_64 rng(5);
    Tensor vk = random_tensor({2, 3, 4, 5}, rng);
    Var c = combine_branches(constant(vk), constant(Tensor({2, 3, 4, 5})));
    CHECK(c.shape() == Shape{2, 3, 4, 15});
    for (std::size_t i = 0; i < vk.size() / 5; ++i)
        for (std::size_t ch = 0; ch < 5; ++ch) {
            CHECK(c.value().values()[i * 15 + ch] == vk.values()[i * 5 + ch]);
            CHECK(c.value().values()[i * 15 + 5 + ch] == vk.values()[i * 5 + ch]);
            CHECK(c.value().values()[i * 15 + 10 + ch] == 0.0);
        }
    Tensor ones = Tensor::full({2, 2, 2, 3}, 1.0);
    Var d = combine_branches(constant(ones), constant(ones));
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t ch = 0; ch < 3; ++ch) {
            CHECK(d.value().values()[i * 9 + ch] == 2.0);
            CHECK(d.value().values()[i * 9 + 3 + ch] == 0.0);
            CHECK(d.value().values()[i * 9 + 6 + ch] == 1.0);
        }
    CHECK(combine_branches(constant(Tensor({1, 1, 1, 16})), constant(Tensor({1, 1, 1, 16}))).shape().back() == 48);
    CHECK_THROWS_AS(combine_branches(constant(ones), constant(Tensor({2, 2, 2, 4}))), ContractError);
}

TEST_CASE("forward shapes, resolution change and determinism") {
    ModelConfig cfg = tiny_config();
    WeightMap w = init_weights(cfg, 11);
    Tensor g = random_geology({8, 8, 8}, 2);
    auto s = normalize_source(angle_source(3000, 4000, -2000), cfg.domain_length, cfg.source_mode);
    Var y1 = mifno_forward(g, s, ParamBinding(w, nullptr), cfg);
    CHECK(y1.shape() == Shape{8, 8, 12, 3});
    Var y2 = mifno_forward(g, s, ParamBinding(w, nullptr), cfg);
    CHECK(y1.value() == y2.value());

    Tensor g12 = random_geology({12, 12, 8}, 3);
    CHECK(mifno_forward(g12, s, ParamBinding(w, nullptr), cfg).shape() == Shape{12, 12, 12, 3});

    // Out-of-domain source coordinates are accepted.
    auto far = normalize_source(angle_source(12900, -4800, -2500), cfg.domain_length, cfg.source_mode);
    CHECK(far[0] > 1.0);
    CHECK(far[1] < 0.0);
    CHECK(mifno_forward(g, far, ParamBinding(w, nullptr), cfg).value().all_finite());
}

TEST_CASE("source sensitivity and baselines") {
    Tensor g = random_geology({8, 8, 8}, 4);
    auto s1 = normalize_source(angle_source(3000, 4000, -2000), 9600.0, SourceMode::angles);
    auto s2 = normalize_source(angle_source(6000, 4000, -2000), 9600.0, SourceMode::angles);
    for (Baseline b : {Baseline::mifno, Baseline::ffno_cubes, Baseline::ffno_binary, Baseline::ffno_plain}) {
        ModelConfig cfg = tiny_config(b);
        WeightMap w = init_weights(cfg, 21);
        Tensor y1 = model_forward(g, s1, ParamBinding(w, nullptr), cfg).value();
        Tensor y2 = model_forward(g, s2, ParamBinding(w, nullptr), cfg).value();
        CHECK(y1.shape() == Shape{8, 8, 12, 3});
        INFO(to_string(b));
        if (b == Baseline::ffno_plain)
            CHECK(y1 == y2);
        else
            CHECK(max_abs_diff(y1, y2) > 1e-9);
    }
    ModelConfig cubes = tiny_config(Baseline::ffno_cubes);
    CHECK(baseline_input(g, s1, cubes).shape().back() == 10);
    CHECK(init_weights(cubes, 1).at("uplift/w").shape() == Shape{10, 4});

    ModelConfig binary = tiny_config(Baseline::ffno_binary);
    Tensor in = baseline_input(g, s1, binary);
    double total = 0.0;
    for (std::size_t i = 0; i < in.size() / 5; ++i) total += in.values()[5 * i + 4];
    CHECK(total == 1.0);
    // x = 0.5 of 8 cells puts the source on the boundary between cells 3 and 4; the lower wins.
    Tensor centre = baseline_input(g, {0.5, 0.5, 0.5, 0.1, 0.5, 0.25}, binary);
    CHECK(centre.at({3, 3, 3, 4}) == 1.0);

    ModelConfig inconsistent = tiny_config(Baseline::ffno_cubes);
    inconsistent.source_mode = SourceMode::moment;
    CHECK_THROWS_AS(inconsistent.validate(), ContractError);
}

TEST_CASE("parameter counting") {
    WeightMap w;
    Philox rng(1, 1);
    init_linear(w, "dense", 3, 128, rng);
    CHECK(count_parameters(w) == 512);
    CHECK(count_parameters(WeightMap{}) == 0);
    WeightMap c;
    c["r"] = Tensor({2, 3}, DType::complex);
    CHECK(count_parameters(c) == 12);

    ModelConfig paper = ModelConfig::paper();
    const WeightMap pw = init_weights(paper, 1);
    const std::size_t total = count_parameters(pw);
    ModelConfig wide = paper;
    wide.resolution = {48, 48, 32};
    CHECK(count_parameters(init_weights(wide, 1)) == total);
    auto groups = count_parameters_by_group(pw);
    std::size_t sum = 0;
    for (const auto& [g, n] : groups) sum += n;
    CHECK(sum == total);
    MESSAGE("paper configuration parameter count: " << total << " (published figure 3.40e6, informational)");
}

TEST_CASE("end-to-end gradient check on an 8x8x8 input") {
    for (Baseline b : {Baseline::mifno, Baseline::ffno_cubes}) {
        ModelConfig cfg = tiny_config(b);
        WeightMap w = init_weights(cfg, 31);
        Tensor g = random_geology({8, 8, 8}, 5);
        auto s = normalize_source(angle_source(3000, 4000, -2000), 9600.0, SourceMode::angles);
        const double err = model_gradcheck(cfg, w, g, s, 20, 99);
        INFO(to_string(b) << " relative error " << err);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("checkpoint round trip and validation") {
    ModelConfig cfg = tiny_config();
    Checkpoint ck;
    ck.config = cfg;
    ck.weights = init_weights(cfg, 8);
    ck.norm.mean_geology = Tensor::full({8, 8, 8}, 2000.0);
    ck.norm.std_geology = 250.0;
    ck.norm.output_scale = 3.5;
    ck.extra.add(Entry::scalar("history/epochs", 0.0));
    const auto path = std::filesystem::temp_directory_path() / "mifno_test_ckpt.mfno";
    save_checkpoint(path, ck);
    Checkpoint back = load_checkpoint(path);
    CHECK(config_to_json(back.config) == config_to_json(cfg));
    CHECK(back.weights == ck.weights);
    CHECK(back.norm.output_scale == 3.5);
    CHECK(back.extra.has("history/epochs"));

    Container c = checkpoint_container(ck);
    Container broken;
    for (const auto& e : c.entries())
        if (e.name != "weights/layer01/mlp/w1") broken.add(e);
    CHECK_THROWS_AS(checkpoint_from_container(broken), DataError);
    Container reshaped;
    for (const auto& e : c.entries())
        reshaped.add(e.name == "weights/uplift/b" ? Entry::from_tensor(e.name, Tensor({5})) : e);
    CHECK_THROWS_AS(checkpoint_from_container(reshaped), DataError);
    std::filesystem::remove(path);
}
