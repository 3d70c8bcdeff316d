#include <chrono>
#include <cmath>

#include "doctest.h"
#include "mifno/elastic.hpp"
#include "mifno/errors.hpp"
#include "mifno/scenario.hpp"

using namespace mifno;

namespace {

GeologyModel homogeneous(std::size_t nx, std::size_t nz, double dx, double vs) {
    GeologyModel g;
    g.dx = dx;
    g.vs = Tensor::full({nx, nx, nz}, vs);
    derive_vp_rho(g);
    return g;
}

SourceSpec point_source(double x, double y, double z, std::array<double, 6> m) {
    SourceSpec s;
    s.position = {x, y, z};
    s.moment = m;
    s.m0 = 1e15;
    for (auto& v : s.moment) v *= s.m0;
    s.rise_time = 0.1;
    return s;
}

double rel_diff(const Tensor& a, const Tensor& b) { return max_abs_diff(a, b) / std::max(max_abs(b), 1e-300); }

double rel_rms(const Tensor& a, const Tensor& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a.values()[i] - b.values()[i]) * (a.values()[i] - b.values()[i]);
        den += b.values()[i] * b.values()[i];
    }
    return std::sqrt(num / den);
}

// Homogeneous 4.8 x 4.8 x 3.2 km block at 100 m, sensor 7 of 16 at 2250 m.
struct ArrivalCase {
    GeologyModel geo = homogeneous(48, 32, 100.0, 2000.0);
    SimConfig cfg;
    ArrivalCase() {
        cfg.dx = 100.0;
        cfg.dt = 0.008;
        cfg.dt_out = 0.008;
        cfg.duration = 1.2;
        cfg.sensors_per_side = 16;
    }
};

GeologyModel small_random_geology(std::uint64_t seed) {
    GeneratorParams p;
    p.cells = 16;
    return generate_geology(seed, 0, p);
}

SimConfig coarse_config() {
    SimConfig c;
    c.dx = 600.0;
    c.dt = 0.02;
    c.dt_out = 0.1;
    c.duration = 3.2;
    c.sensors_per_side = 8;
    return c;
}

}  // namespace

TEST_CASE("source time function") {
    CHECK(source_time_function(0.0, 0.1) == 0.0);
    CHECK(source_time_function(10.0, 0.1) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(source_time_function(0.1, 0.1) == doctest::Approx(1.0 - 2.0 * std::exp(-1.0)).epsilon(1e-14));
    CHECK(source_time_function(0.1, 0.1) == doctest::Approx(0.264241).epsilon(1e-6));
    double prev = 0.0;
    for (double t = 0.0; t < 2.0; t += 0.01) {
        const double v = source_time_function(t, 0.1);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK_THROWS_AS(source_time_function(1.0, 0.0), ContractError);
}

TEST_CASE("stability check") {
    CHECK(max_stable_dt(7650.0, 300.0) == doctest::Approx(0.5 * 300.0 / (std::sqrt(3.0) * 7650.0)));
    CHECK(max_stable_dt(7650.0, 300.0) == doctest::Approx(0.01132).epsilon(1e-3));
    CHECK(max_stable_dt(7650.0, 600.0) == doctest::Approx(2.0 * max_stable_dt(7650.0, 300.0)));
    GeologyModel g = homogeneous(8, 8, 300.0, 4500.0);
    SimConfig c = coarse_config();
    c.dx = 300.0;
    c.dt = 0.01;
    auto r = stability_check(g, c, 5.0);
    CHECK(r.stable);
    CHECK(r.dt_max == doctest::Approx(0.01132).epsilon(1e-3));
    CHECK(r.points_per_wavelength == doctest::Approx(3.0));
    CHECK(r.under_resolved);
    CHECK(r.sponge_reflection > 0.0);
    CHECK(r.sponge_reflection < 1.0);
    CHECK_FALSE(stability_check(g, c, 0.5).under_resolved);
    c.dt = 0.02;
    CHECK_FALSE(stability_check(g, c, 5.0).stable);
    CHECK_THROWS_AS(simulate(g, point_source(1200, 1200, -1200, {1, 0, 0, 0, 0, 0}), c), NumericalError);
}

TEST_CASE("configuration and source contracts") {
    SimConfig c = coarse_config();
    c.dt_out = 0.03;
    CHECK_THROWS_AS(c.validate(), ContractError);
    GeologyModel g = homogeneous(16, 16, 600.0, 2000.0);
    CHECK_THROWS_AS(simulate(g, point_source(-10, 100, -1000, {1, 0, 0, 0, 0, 0}), coarse_config()), ContractError);
    CHECK_THROWS_AS(simulate(g, point_source(100, 100, -10000, {1, 0, 0, 0, 0, 0}), coarse_config()), ContractError);
}

TEST_CASE("zero moment gives an identically zero record") {
    GeologyModel g = small_random_geology(3);
    auto rec = simulate(g, point_source(4000, 5000, -3000, {0, 0, 0, 0, 0, 0}), coarse_config());
    CHECK(rec.data.shape() == Shape{8, 8, 32, 3});
    CHECK(max_abs(rec.data) == 0.0);
    CHECK(rec.sensor_x[0] == 600.0);
    CHECK(rec.sensor_x[7] == 9000.0);
}

TEST_CASE("homogeneous P and S arrival times") {
    ArrivalCase a;
    const double dist = 2000.0, vp = 3400.0, vs = 2000.0;
    const auto t0 = std::chrono::steady_clock::now();
    // Vertical dipole: P along the vertical, no S.
    auto p = simulate(a.geo, point_source(2250, 2250, -dist, {0, 0, 1, 0, 0, 0}), a.cfg);
    const auto pz = sensor_trace(p, 7, 7, 2);
    const double tp = first_arrival(pz, a.cfg.dt_out, 0.0, 0.9);
    // Shear source in the east-down plane: S along the vertical, no P.
    auto s = simulate(a.geo, point_source(2250, 2250, -dist, {0, 0, 0, 0, 0, 1}), a.cfg);
    const auto se = sensor_trace(s, 7, 7, 0);
    const double ts = first_arrival(se, a.cfg.dt_out, 0.0, 1.2);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    MESSAGE("P pick " << tp << " s (expected " << dist / vp << "), S pick " << ts << " s (expected " << dist / vs
                      << "), " << secs << " s");
    CHECK(std::abs(tp - dist / vp) <= 2 * a.cfg.dt);
    CHECK(std::abs(ts - dist / vs) <= 2 * a.cfg.dt);
}

TEST_CASE("linearity and superposition") {
    GeologyModel g = small_random_geology(5);
    SimConfig c = coarse_config();
    const SourceSpec s1 = point_source(3100, 4700, -2500, {0.3, -0.5, 0.2, 0.7, -0.1, 0.4});
    const SourceSpec s2 = point_source(6800, 2900, -6100, {-0.2, 0.1, 0.1, -0.6, 0.5, 0.3});
    SourceSpec s1x2 = s1;
    for (auto& v : s1x2.moment) v *= 2.0;
    const Tensor r1 = simulate(g, s1, c).data;
    Tensor doubled = r1;
    for (auto& v : doubled.values()) v *= 2.0;
    CHECK(rel_diff(simulate(g, s1x2, c).data, doubled) < 1e-10);

    const Tensor r2 = simulate(g, s2, c).data;
    const std::array<SourceSpec, 2> both{s1, s2};
    Tensor sum = r1;
    sum += r2;
    CHECK(rel_diff(simulate(g, std::span<const SourceSpec>(both), c).data, sum) < 1e-10);

    // Determinism.
    CHECK(simulate(g, s1, c).data == r1);
}

TEST_CASE("mirror symmetry in a homogeneous block") {
    GeologyModel g = homogeneous(16, 16, 600.0, 2400.0);
    SimConfig c = coarse_config();
    const std::array<double, 6> m{0.3, -0.5, 0.2, 0.7, -0.1, 0.4};
    // Reflection x -> L - x flips every component with exactly one east index.
    const std::array<double, 6> mm{m[0], m[1], m[2], -m[3], m[4], -m[5]};
    const Tensor a = simulate(g, point_source(3100, 4700, -2500, m), c).data;
    const Tensor b = simulate(g, point_source(9600 - 3100, 4700, -2500, mm), c).data;
    Tensor mirrored(a.shape());
    const std::size_t ns = a.dim(0), nt = a.dim(2);
    for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < ns; ++j)
            for (std::size_t t = 0; t < nt; ++t)
                for (std::size_t k = 0; k < 3; ++k)
                    mirrored.at({ns - 1 - i, j, t, k}) = (k == 0 ? -1.0 : 1.0) * a.at({i, j, t, k});
    CHECK(rel_diff(b, mirrored) < 1e-8);
}

TEST_CASE("rotating the inputs rotates the record") {
    Sample s;
    s.geology = small_random_geology(9);
    s.source = point_source(3100, 4700, -2500, {0.3, -0.5, 0.2, 0.7, -0.1, 0.4});
    SimConfig c = coarse_config();
    s.wavefield = simulate(s.geology, s.source, c);
    for (int k = 1; k < 4; ++k) {
        Sample r = rotate_sample_90(s, k);
        const Tensor direct = simulate(r.geology, r.source, c).data;
        const double err = rel_rms(direct, r.wavefield->data);
        INFO("quarter turns " << k << " relative RMS " << err);
        CHECK(err < 0.05);
        CHECK(err < 1e-8);
    }
}

TEST_CASE("radiation patterns") {
    GeologyModel g = homogeneous(32, 16, 300.0, 2000.0);
    SimConfig c;
    c.dx = 300.0;
    c.dt = 0.02;
    c.dt_out = 0.02;
    c.duration = 2.4;
    c.sensors_per_side = 32;
    // Sensor 15 sits at 4650 m.
    const double x0 = 4650.0;

    SUBCASE("isotropic source: equal P amplitude at equal distance") {
        auto rec = simulate(g, point_source(x0, x0, -2400, {1, 1, 1, 0, 0, 0}), c);
        const int offs[][2] = {{5, 0}, {0, 5}, {-5, 0}, {0, -5}, {3, 4}, {4, 3}, {-3, 4}, {-4, -3}};
        std::vector<double> amp;
        for (auto& o : offs) {
            const auto z = sensor_trace(rec, std::size_t(15 + o[0]), std::size_t(15 + o[1]), 2);
            double m = 0;
            for (double v : z) m = std::max(m, std::abs(v));
            amp.push_back(m);
        }
        const double lo = *std::min_element(amp.begin(), amp.end()), hi = *std::max_element(amp.begin(), amp.end());
        INFO("amplitude spread " << (hi - lo) / hi);
        CHECK((hi - lo) / hi < 0.05);
    }
    SUBCASE("horizontal shear couple: nodal vertical motion at the epicentre") {
        auto rec = simulate(g, point_source(x0, x0, -2400, {0, 0, 0, 1, 0, 0}), c);
        double z_epi = 0.0, h_max = 0.0;
        for (double v : sensor_trace(rec, 15, 15, 2)) z_epi = std::max(z_epi, std::abs(v));
        for (std::size_t i = 0; i < 32; ++i)
            for (std::size_t j = 0; j < 32; ++j)
                for (std::size_t k = 0; k < 2; ++k)
                    for (double v : sensor_trace(rec, i, j, k)) h_max = std::max(h_max, std::abs(v));
        INFO("epicentral Z over peak horizontal " << z_epi / h_max);
        CHECK(z_epi / h_max < 0.05);
    }
}

TEST_CASE("kinetic energy is bounded after the source stops") {
    GeologyModel g = small_random_geology(12);
    SimConfig c = coarse_config();
    c.duration = 6.4;
    SimDiagnostics d;
    simulate(g, point_source(4800, 4800, -4800, {0.3, -0.5, 0.2, 0.7, -0.1, 0.4}), c, &d);
    REQUIRE(d.kinetic_energy.size() == d.steps);
    const std::size_t cutoff = static_cast<std::size_t>(1.5 / c.dt);
    double running = 0.0;
    for (std::size_t n = 0; n < d.kinetic_energy.size(); ++n) {
        if (n >= cutoff) CHECK(d.kinetic_energy[n] <= 1.05 * running);
        running = std::max(running, d.kinetic_energy[n]);
    }
    CHECK(d.kinetic_energy.back() < 0.2 * running);
}
