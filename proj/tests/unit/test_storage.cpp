#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "mifno/errors.hpp"
#include "mifno/storage.hpp"

using namespace mifno;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "mifno_test_storage";
    fs::create_directories(dir);
    return dir / name;
}

std::string bytes_of(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

GeneratorParams small_params() {
    GeneratorParams p;
    p.cells = 8;
    return p;
}

SimConfig small_sim() {
    SimConfig sim;
    sim.dx = 600.0;
    sim.dt = 0.02;
    sim.dt_out = 0.1;
    sim.duration = 0.8;
    sim.sponge_width = 4;
    sim.sensors_per_side = 4;
    return sim;
}

DatasetFile small_file() {
    const GeneratorParams p = small_params();
    DatasetFile f;
    f.geologies = generate_geologies(5, 2, p);
    f.sources = generate_sources(5, 2, p);
    f.sources[1].angles.reset();  // moment-only source
    f.seed = 5;
    WaveformRecord w;
    w.data = Tensor({4, 4, 6, 3});
    for (std::size_t i = 0; i < w.data.size(); ++i) w.data[i] = std::sin(0.37 * double(i)) * 1e-3;
    w.dt_out = 0.1;
    w.sensor_x = w.sensor_y = {0.0, 1200.0, 2400.0, 3600.0};
    f.wavefields = {w, w};
    f.wavefields[1].data[5] = 7.0;
    return f;
}

}  // namespace

TEST_CASE("dataset container round trip") {
    const DatasetFile f = small_file();
    const fs::path path = scratch("round_trip.mif");
    save_dataset(path, f);
    const DatasetFile g = load_dataset(path);

    REQUIRE(g.geologies.size() == 2);
    REQUIRE(g.sources.size() == 2);
    REQUIRE(g.wavefields.size() == 2);
    CHECK(g.seed == 5);
    CHECK(g.provenance == f.provenance);
    CHECK_FALSE(g.augmented);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(g.geologies[i].vs == f.geologies[i].vs);
        CHECK(g.geologies[i].vp == f.geologies[i].vp);
        CHECK(g.geologies[i].rho == f.geologies[i].rho);
        CHECK(g.geologies[i].dx == f.geologies[i].dx);
        CHECK(g.sources[i].position == f.sources[i].position);
        CHECK(g.sources[i].moment == f.sources[i].moment);
        CHECK(g.sources[i].m0 == f.sources[i].m0);
        CHECK(g.sources[i].rise_time == f.sources[i].rise_time);
        CHECK(g.wavefields[i].data == f.wavefields[i].data);
        CHECK(g.wavefields[i].dt_out == f.wavefields[i].dt_out);
        CHECK(g.wavefields[i].sensor_x == f.wavefields[i].sensor_x);
    }
    REQUIRE(g.sources[0].angles.has_value());
    CHECK(*g.sources[0].angles == *f.sources[0].angles);
    CHECK_FALSE(g.sources[1].angles.has_value());

    // Saving the loaded file again reproduces the bytes.
    const fs::path again = scratch("round_trip_again.mif");
    save_dataset(again, g);
    CHECK(bytes_of(path) == bytes_of(again));
}

TEST_CASE("single-precision wavefields are flagged in the provenance") {
    const DatasetFile f = small_file();
    const fs::path path = scratch("f32.mif");
    save_dataset(path, f, true);
    const DatasetFile g = load_dataset(path);
    CHECK(g.provenance.find("f32") != std::string::npos);
    const auto a = f.wavefields[1].data.values();
    const Tensor& gt = g.wavefields[1].data;
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(gt[i] == doctest::Approx(a[i]).epsilon(1e-6));
}

TEST_CASE("dataset samples zip geology, source and wavefield") {
    const DatasetFile f = small_file();
    const Dataset d = to_dataset(f);
    REQUIRE(d.samples.size() == 2);
    CHECK(d.samples[1].wavefield.has_value());
    const DatasetFile back = to_file(d);
    CHECK(back.wavefields[1].data == f.wavefields[1].data);

    DatasetFile bad = f;
    bad.sources.pop_back();
    CHECK_THROWS_AS(to_dataset(bad), DataError);
}

TEST_CASE("corrupt dataset files are rejected") {
    const fs::path path = scratch("corrupt.mif");
    save_dataset(path, small_file());
    std::string b = bytes_of(path);
    b[b.size() / 2] ^= 0x5a;
    std::ofstream(path, std::ios::binary) << b;
    CHECK_THROWS_AS(load_dataset(path), ContainerError);
}

TEST_CASE("run configuration parsing") {
    const RunConfig defaults;
    const RunConfig round = parse_run_config(run_config_text(defaults));
    CHECK(run_config_text(round) == run_config_text(defaults));

    const RunConfig c = parse_run_config(R"(
; comment
[domain]
cells = 16
[sim]
dx = 300
dt_out = 0.05
[model]
modes = 8, 8, 16
activation = relu
[train]
augmentation = rotations4
batch_size = 4
[source]
strike_range = 30, 70
)");
    CHECK(c.generator.cells == 16);
    CHECK(c.sim.dx == 300.0);
    CHECK(c.sim.dt_out == 0.05);
    CHECK(c.model.modes == std::array<std::size_t, 3>{8, 8, 16});
    CHECK(c.train.augmentation == Augmentation::rotations4);
    CHECK(c.train.batch_size == 4);
    CHECK(c.generator.strike[0] == 30.0);
    CHECK(c.generator.strike[1] == 70.0);
    CHECK(c.sim.dt == defaults.sim.dt);
    CHECK(run_config_text(parse_run_config(run_config_text(c))) == run_config_text(c));

    CHECK_THROWS_AS(parse_run_config("[train]\nepoch = 3\n"), ContractError);
    CHECK_THROWS_AS(parse_run_config("[optimizer]\nlr = 3\n"), ContractError);
    CHECK_THROWS_AS(parse_run_config("[train]\nepochs = three\n"), ContractError);
    CHECK_THROWS_AS(parse_run_config("[model]\nmodes = 8, 8\n"), ContractError);
    CHECK_THROWS_AS(parse_run_config("[model]\nactivation = tanh\n"), ContractError);
}

TEST_CASE("worker cap from the environment") {
    ::unsetenv("MIFNO_THREADS");
    CHECK(effective_workers(0) == 1);
    CHECK(effective_workers(6) == 6);
    ::setenv("MIFNO_THREADS", "2", 1);
    CHECK(effective_workers(6) == 2);
    CHECK(effective_workers(1) == 1);
    ::setenv("MIFNO_THREADS", "junk", 1);
    CHECK(effective_workers(6) == 6);
    ::unsetenv("MIFNO_THREADS");
}

TEST_CASE("geology generation does not depend on the worker count") {
    const GeneratorParams p = small_params();
    const auto a = generate_geologies(9, 3, p, {}, 1);
    const auto b = generate_geologies(9, 3, p, {}, 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(a[i].vs == b[i].vs);
    const auto preset = generate_geologies(9, 2, p, "le_teil_1d", 2);
    CHECK(preset[0].vs == generate_geologies(9, 2, p, "le_teil_1d", 1)[0].vs);
    CHECK_THROWS(generate_geologies(9, 1, p, "no_such_preset"));
}

TEST_CASE("sharded simulation output is independent of the worker count") {
    const GeneratorParams p = small_params();
    const auto geo = generate_geologies(2, 3, p);
    const auto src = generate_sources(2, 3, p);
    const fs::path one = scratch("sim1.mif"), two = scratch("sim2.mif");
    simulate_to_file(geo, src, small_sim(), one, 1, 2);
    simulate_to_file(geo, src, small_sim(), two, 2, 2);
    CHECK(bytes_of(one) == bytes_of(two));
    CHECK_FALSE(fs::exists(fs::path(two.string() + ".shard0")));
    const DatasetFile d = load_dataset(one);
    CHECK(d.wavefields.size() == 3);
    CHECK(d.seed == 2);
    CHECK_THROWS_AS(simulate_to_file(geo, {src[0]}, small_sim(), one, 1), DataError);
}
