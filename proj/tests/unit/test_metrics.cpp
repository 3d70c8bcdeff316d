#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mifno/errors.hpp"
#include "mifno/metrics.hpp"

using namespace mifno;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> wavelet(std::size_t n, double dt, double f, double t0) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = double(i) * dt - t0;
        v[i] = std::cos(2 * kPi * f * t) * std::exp(-t * t * f * f * 2.0);
    }
    return v;
}

std::vector<double> random_trace(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    std::vector<double> v(n);
    double prev = 0;
    for (auto& x : v) x = prev = 0.7 * prev + nd(rng);
    return v;
}

WaveformRecord random_record(std::size_t ns, std::size_t nt, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    WaveformRecord w;
    w.dt_out = 0.05;
    w.data = Tensor({ns, ns, nt, 3});
    for (auto& v : w.data.values()) v = nd(rng);
    return w;
}

}  // namespace

TEST_CASE("relative errors") {
    std::mt19937_64 rng(1);
    const auto r = random_trace(100, rng);
    CHECK(rrmse(r, r) == 0.0);
    CHECK(rmae(r, r) == 0.0);
    const std::vector<double> zero(50, 0.0), small(50, 0.01);
    CHECK(rrmse(small, zero) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rmae(small, zero) == doctest::Approx(1.0).epsilon(1e-14));
    // Pointwise sums do not depend on sample order.
    auto p = random_trace(100, rng);
    std::vector<double> pr(p.rbegin(), p.rend()), rr(r.rbegin(), r.rend());
    CHECK(rrmse(pr, rr) == doctest::Approx(rrmse(p, r)).epsilon(1e-14));
    CHECK(rrmse(p, r) >= 0.0);
    CHECK_THROWS_AS(rrmse(p, zero), ContractError);
    // Direct evaluation on a two-sample case.
    const std::vector<double> a{1.0, -0.5}, b{0.5, 0.0};
    const double e = 0.01;
    CHECK(rmae(a, b) == doctest::Approx(0.5 * (0.5 / 0.51 + 0.5 / 0.01)));
    CHECK(rrmse(a, b) == doctest::Approx(std::sqrt(0.5 * (0.25 / (0.25 + e * e) + 0.25 / (e * e)))));
}

TEST_CASE("frequency bias") {
    std::mt19937_64 rng(2);
    const auto r = random_trace(320, rng);
    const double dt = 0.02;
    std::vector<double> zero(320, 0.0), twice(r), scaled(r);
    for (auto& v : twice) v *= 2.0;
    for (auto& v : scaled) v *= 0.37;
    for (FrequencyBand b : {kLowBand, kMidBand, kHighBand}) {
        CHECK(frequency_bias(r, r, b, dt) == 0.0);
        CHECK(frequency_bias(zero, r, b, dt) == -1.0);
        CHECK(frequency_bias(twice, r, b, dt) == 1.0);
        CHECK(frequency_bias(scaled, r, b, dt) == doctest::Approx(0.37 - 1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(frequency_bias(r, zero, kLowBand, dt), UndefinedMetric);
    // A 5-sample trace at dt = 0.1 has bins at 0, 2 and 4 Hz only.
    std::vector<double> tiny{1, 2, 3, 4, 5};
    CHECK_THROWS_AS(frequency_bias(tiny, tiny, kMidBand, 0.1), ContractError);
    // A 3 Hz tone sits in the high band only.
    std::vector<double> tone(320);
    for (std::size_t i = 0; i < tone.size(); ++i) tone[i] = std::sin(2 * kPi * 3.0 * double(i) * dt);
    std::vector<double> tone2 = tone;
    for (auto& v : tone2) v *= 3.0;
    CHECK(frequency_bias(tone2, tone, kHighBand, dt) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("Morlet transform recovers a sinusoid amplitude") {
    const double dt = 0.02, f = 1.5;
    std::vector<double> s(1000);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = 2.5 * std::cos(2 * kPi * f * double(i) * dt);
    GofOptions o;
    o.f_min = f;
    o.f_max = f;
    o.voices = 1;
    const auto w = morlet_cwt(s, dt, o);
    // Away from the edges the modulus is the amplitude.
    CHECK(std::abs(w[500]) == doctest::Approx(2.5).epsilon(0.01));
    CHECK(std::arg(w[501] / w[500]) == doctest::Approx(2 * kPi * f * dt).epsilon(1e-3));
    const auto freqs = gof_frequencies(GofOptions{});
    REQUIRE(freqs.size() == 40);
    CHECK(freqs.front() == doctest::Approx(0.1));
    CHECK(freqs.back() == doctest::Approx(5.0));
    CHECK(freqs[1] / freqs[0] == doctest::Approx(freqs[39] / freqs[38]));
    CHECK_THROWS_AS(morlet_cwt(s, 0.2, GofOptions{}), ContractError);
}

TEST_CASE("envelope and phase goodness of fit") {
    const double dt = 0.02;
    const auto ref = wavelet(320, dt, 1.0, 2.0);
    Gof same = envelope_phase_gof(ref, ref, dt);
    CHECK(same.envelope == 10.0);
    CHECK(same.phase == 10.0);

    std::vector<double> twice = ref;
    for (auto& v : twice) v *= 2.0;
    Gof g2 = envelope_phase_gof(twice, ref, dt);
    CHECK(g2.phase == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(g2.envelope < 10.0);
    CHECK(g2.envelope == doctest::Approx(10.0 * std::exp(-1.0)).epsilon(1e-12));

    const auto delayed = wavelet(320, dt, 1.0, 2.25);
    Gof gd = envelope_phase_gof(delayed, ref, dt);
    MESSAGE("0.25 s delay: EG " << gd.envelope << " PG " << gd.phase);
    CHECK(gd.phase < 10.0);
    CHECK(gd.envelope < 10.0);
    // Regression values; a quarter-period shift puts PG near 10 exp(-1/2).
    CHECK(gd.envelope == doctest::Approx(8.46998).epsilon(1e-3));
    CHECK(gd.phase == doctest::Approx(5.9996).epsilon(1e-3));

    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const auto a = random_trace(128, rng), b = random_trace(128, rng);
        const Gof g = envelope_phase_gof(a, b, 0.05);
        CHECK(g.envelope >= 0.0);
        CHECK(g.envelope < 10.0);
        CHECK(g.phase >= 0.0);
        CHECK(g.phase < 10.0);
    }
    std::vector<double> zero(320, 0.0);
    CHECK_THROWS_AS(envelope_phase_gof(ref, zero, dt), UndefinedMetric);
    CHECK(envelope_phase_gof(zero, ref, dt).envelope == doctest::Approx(10.0 * std::exp(-1.0)));
}

TEST_CASE("energy integral") {
    WaveformRecord w;
    w.dt_out = 0.1;
    w.data = Tensor({3, 3, 4, 3});
    w.data.at({1, 2, 0, 1}) = 2.0;
    Tensor e = normalized_energy_integral(w);
    CHECK(e.at({1, 2}) == 1.0);
    CHECK(max_abs(e) == 1.0);
    CHECK(energy_integral(w).at({1, 2}) == doctest::Approx(4.0 / 3.0));
    for (auto& v : w.data.values()) v = 0.5;
    const Tensor flat = normalized_energy_integral(w);
    for (double v : flat.values()) CHECK(v == 1.0);
    Tensor r = normalized_energy_integral(random_record(4, 10, 7));
    double m = 0;
    for (double v : r.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        m = std::max(m, v);
    }
    CHECK(m == 1.0);
    for (auto& v : w.data.values()) v = 0.0;
    CHECK_THROWS_AS(normalized_energy_integral(w), UndefinedMetric);
}

TEST_CASE("intrinsic dimension by PCA") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    std::vector<std::vector<double>> plane;
    std::vector<double> u(10), v(10);
    for (auto& x : u) x = nd(rng);
    for (auto& x : v) x = nd(rng);
    for (int i = 0; i < 200; ++i) {
        const double a = nd(rng), b = nd(rng);
        std::vector<double> p(10);
        for (int j = 0; j < 10; ++j) p[j] = a * u[j] + b * v[j] + 3.0;
        plane.push_back(p);
    }
    CHECK(intrinsic_dim_pca(plane) == 2);
    auto dup = plane;
    for (auto& p : dup) {
        const auto copy = p;
        p.insert(p.end(), copy.begin(), copy.end());
    }
    CHECK(intrinsic_dim_pca(dup) == 2);

    std::vector<std::vector<double>> iso(10000, std::vector<double>(10));
    for (auto& p : iso)
        for (auto& x : p) x = nd(rng);
    const auto d = intrinsic_dim_pca(iso);
    CHECK((d == 9 || d == 10));

    // Wide data goes through the Gram matrix.
    std::vector<std::vector<double>> wide(20, std::vector<double>(500));
    for (auto& p : wide) {
        const double a = nd(rng);
        for (std::size_t j = 0; j < p.size(); ++j) p[j] = a * std::sin(double(j));
    }
    CHECK(intrinsic_dim_pca(wide) == 1);
    std::vector<std::vector<double>> flat(5, std::vector<double>(3, 1.0));
    CHECK(intrinsic_dim_pca(flat) == 0);
    CHECK_THROWS_AS(intrinsic_dim_pca({{1.0}}), ContractError);
}

TEST_CASE("intrinsic dimension by maximum likelihood") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::vector<std::vector<double>> line, disk;
    const double dir[5] = {0.1, -0.4, 0.7, 0.2, 0.5};
    for (int i = 0; i < 1000; ++i) {
        const double t = ud(rng);
        std::vector<double> p(5);
        for (int j = 0; j < 5; ++j) p[j] = t * dir[j];
        line.push_back(p);
        const double r = std::sqrt(ud(rng)), a = 2 * kPi * ud(rng);
        disk.push_back({r * std::cos(a), r * std::sin(a), 0.0});
    }
    const double dl = intrinsic_dim_mle(line).dimension, dd = intrinsic_dim_mle(disk).dimension;
    MESSAGE("line " << dl << ", disk " << dd);
    CHECK(std::abs(dl - 1.0) < 0.2);
    CHECK(std::abs(dd - 2.0) < 0.3);
    auto scaled = disk;
    for (auto& p : scaled)
        for (auto& x : p) x *= 17.0;
    CHECK(intrinsic_dim_mle(scaled).dimension == doctest::Approx(dd).epsilon(1e-12));
    auto with_dup = disk;
    with_dup.push_back(disk[0]);
    CHECK(intrinsic_dim_mle(with_dup).excluded == 2);
    CHECK_THROWS_AS(intrinsic_dim_mle(std::vector<std::vector<double>>(5, {1.0}), 10), ContractError);
}

TEST_CASE("record comparison and report") {
    const WaveformRecord ref = random_record(4, 64, 11);
    auto same = compare_records(ref, ref);
    for (double v : same["eg"]) CHECK(v == 10.0);
    for (double v : same["pg"]) CHECK(v == 10.0);
    for (double v : same["rmae"]) CHECK(v == 0.0);
    for (double v : same["rrmse"]) CHECK(v == 0.0);

    WaveformRecord pred = random_record(4, 64, 12);
    auto m = compare_records(pred, ref);
    for (const auto& name : metric_names()) REQUIRE(m[name].size() == 16);
    for (std::size_t s = 0; s < 16; ++s) {
        CHECK(m["eg"][s] >= 0.0);
        CHECK(m["eg"][s] <= 10.0);
        CHECK(m["pg"][s] <= 10.0);
        CHECK(m["rfft_low"][s] >= -1.0);
        CHECK(m["rmae"][s] >= 0.0);
        CHECK(m["ei_ref"][s] <= 1.0);
    }
    MetricReport rep;
    rep.add(same);
    rep.add(m);
    auto sum = rep.summary();
    CHECK(sum["eg"].count == 32);
    CHECK(sum["rmae"].mean == doctest::Approx(0.5 * sum["rmae"].mean * 2));
    CHECK(rep.table().find("rmae\t") != std::string::npos);
    // Order of accumulation does not change the summary beyond rounding.
    MetricReport rev;
    rev.add(m);
    rev.add(same);
    CHECK(rev.summary()["pg"].mean == doctest::Approx(sum["pg"].mean).epsilon(1e-14));
}
