#include "mifno/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "mifno/errors.hpp"
#include "mifno/fft.hpp"

namespace mifno {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size())
        throw ContractError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()) + ")");
    if (a.empty()) throw ContractError(std::string(what) + ": empty trace");
}

double band_mean_amplitude(std::span<const double> x, FrequencyBand band, double dt) {
    const auto spec = fft_real(x);
    const std::size_t n = x.size();
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const double f = double(k) / (double(n) * dt);
        if (f >= band.lo && f < band.hi) {
            sum += std::abs(spec[k]);
            ++count;
        }
    }
    if (count == 0) throw ContractError("frequency_bias: no frequency bin inside the band");
    return sum / double(count);
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

}  // namespace

double rrmse(std::span<const double> pred, std::span<const double> ref, double eps) {
    require_same_length(pred, ref, "rrmse");
    double s = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) {
        const double d = pred[k] - ref[k];
        s += d * d / (ref[k] * ref[k] + eps * eps);
    }
    return std::sqrt(s / double(ref.size()));
}

double rmae(std::span<const double> pred, std::span<const double> ref, double eps) {
    require_same_length(pred, ref, "rmae");
    double s = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) s += std::abs(pred[k] - ref[k]) / std::abs(ref[k] + eps);
    return s / double(ref.size());
}

double frequency_bias(std::span<const double> pred, std::span<const double> ref, FrequencyBand band, double dt) {
    require_same_length(pred, ref, "frequency_bias");
    if (!(dt > 0.0) || !(band.hi > band.lo)) throw ContractError("frequency_bias: bad band or dt");
    const double r = band_mean_amplitude(ref, band, dt);
    if (r == 0.0) throw UndefinedMetric("frequency_bias: reference has no energy in the band");
    return (band_mean_amplitude(pred, band, dt) - r) / r;
}

std::vector<double> gof_frequencies(const GofOptions& opt) {
    if (opt.voices == 0 || !(opt.f_min > 0.0) || !(opt.f_max >= opt.f_min))
        throw ContractError("gof: bad frequency range");
    std::vector<double> f(opt.voices);
    for (std::size_t i = 0; i < opt.voices; ++i) {
        const double a = opt.voices == 1 ? 0.0 : double(i) / double(opt.voices - 1);
        f[i] = opt.f_min * std::pow(opt.f_max / opt.f_min, a);
    }
    return f;
}

std::vector<std::complex<double>> morlet_cwt(std::span<const double> trace, double dt, const GofOptions& opt) {
    if (trace.empty() || !(dt > 0.0)) throw ContractError("morlet_cwt: empty trace or bad dt");
    if (opt.f_max >= 0.5 / dt) throw ContractError("morlet_cwt: f_max must be below the Nyquist frequency");
    const auto freqs = gof_frequencies(opt);
    const std::size_t n = trace.size(), p = 4 * n;
    std::vector<cdouble> u(p, 0.0);
    std::copy(trace.begin(), trace.end(), u.begin());
    fft_inplace(u, FftDirection::forward);
    std::vector<cdouble> out(freqs.size() * n), buf(p);
    for (std::size_t v = 0; v < freqs.size(); ++v) {
        const double scale = opt.omega0 / (2.0 * std::numbers::pi * freqs[v]);
        std::fill(buf.begin(), buf.end(), cdouble(0.0));
        for (std::size_t k = 1; k <= p / 2; ++k) {
            const double w = 2.0 * std::numbers::pi * double(k) / (double(p) * dt);
            const double g = scale * w - opt.omega0;
            buf[k] = u[k] * (2.0 * std::exp(-0.5 * g * g));
        }
        fft_inplace(buf, FftDirection::inverse);
        std::copy_n(buf.begin(), n, out.begin() + std::ptrdiff_t(v * n));
    }
    return out;
}

Gof envelope_phase_gof(std::span<const double> pred, std::span<const double> ref, double dt, const GofOptions& opt) {
    require_same_length(pred, ref, "envelope_phase_gof");
    const auto wp = morlet_cwt(pred, dt, opt);
    const auto wr = morlet_cwt(ref, dt, opt);
    double num_e = 0.0, num_p = 0.0, den = 0.0;
    for (std::size_t i = 0; i < wr.size(); ++i) {
        const double ar = std::abs(wr[i]);
        const double de = std::abs(wp[i]) - ar;
        const double dphi = std::arg(wp[i] * std::conj(wr[i])) / std::numbers::pi;
        num_e += de * de;
        num_p += (ar * dphi) * (ar * dphi);
        den += ar * ar;
    }
    if (den == 0.0) throw UndefinedMetric("envelope_phase_gof: reference is zero");
    Gof g;
    g.envelope_misfit = std::sqrt(num_e / den);
    g.phase_misfit = std::sqrt(num_p / den);
    g.envelope = std::clamp(10.0 * std::exp(-std::abs(g.envelope_misfit)), 0.0, 10.0);
    g.phase = std::clamp(10.0 * std::exp(-std::abs(g.phase_misfit)), 0.0, 10.0);
    return g;
}

Tensor energy_integral(const WaveformRecord& rec) {
    const Tensor& d = rec.data;
    if (d.rank() != 4 || d.dim(3) != 3 || d.size() == 0)
        throw ContractError("energy_integral: record must be [ns, ns, Nt, 3]");
    const std::size_t nx = d.dim(0), ny = d.dim(1), nt = d.dim(2);
    Tensor ei({nx, ny});
    auto v = d.values();
    for (std::size_t s = 0; s < nx * ny; ++s) {
        double e = 0.0;
        for (std::size_t t = 0; t < nt; ++t)
            for (std::size_t c = 0; c < 3; ++c) e += v[(s * nt + t) * 3 + c] * v[(s * nt + t) * 3 + c];
        ei.values()[s] = e / 3.0;
    }
    return ei;
}

Tensor normalized_energy_integral(const WaveformRecord& rec) {
    Tensor ei = energy_integral(rec);
    const double m = max_abs(ei);
    if (m == 0.0) throw UndefinedMetric("normalized_energy_integral: record is zero");
    for (auto& v : ei.values()) v /= m;
    return ei;
}

std::size_t intrinsic_dim_pca(const std::vector<std::vector<double>>& data, double threshold) {
    if (data.size() < 2) throw ContractError("intrinsic_dim_pca: need at least 2 samples");
    if (!(threshold > 0.0 && threshold <= 1.0)) throw ContractError("intrinsic_dim_pca: threshold must be in (0, 1]");
    const std::size_t n = data.size(), d = data.front().size();
    Eigen::MatrixXd x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        if (data[i].size() != d) throw ContractError("intrinsic_dim_pca: ragged data");
        for (std::size_t j = 0; j < d; ++j) x(Eigen::Index(i), Eigen::Index(j)) = data[i][j];
    }
    x.rowwise() -= x.colwise().mean();
    // Covariance and Gram matrices share their nonzero spectrum; use the smaller.
    const Eigen::MatrixXd c = n < d ? Eigen::MatrixXd(x * x.transpose()) : Eigen::MatrixXd(x.transpose() * x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
    Eigen::VectorXd ev = es.eigenvalues().reverse().cwiseMax(0.0);
    const double total = ev.sum();
    if (total <= 1e-300) return 0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        acc += ev(i);
        if (acc >= threshold * total * (1.0 - 1e-12)) return std::size_t(i + 1);
    }
    return std::size_t(ev.size());
}

MleResult intrinsic_dim_mle(const std::vector<std::vector<double>>& data, std::size_t k) {
    const std::size_t n = data.size();
    if (k < 2 || n <= k) throw ContractError("intrinsic_dim_mle: need more samples than neighbours and k >= 2");
    const std::size_t d = data.front().size();
    for (const auto& r : data)
        if (r.size() != d) throw ContractError("intrinsic_dim_mle: ragged data");
    MleResult res;
    std::vector<double> dist(n), estimates;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t q = 0; q < d; ++q) s += (data[i][q] - data[j][q]) * (data[i][q] - data[j][q]);
            dist[j] = i == j ? std::numeric_limits<double>::infinity() : std::sqrt(s);
        }
        std::partial_sort(dist.begin(), dist.begin() + std::ptrdiff_t(k), dist.end());
        if (dist[0] == 0.0) {
            ++res.excluded;
            continue;
        }
        double s = 0.0;
        for (std::size_t j = 0; j + 1 < k; ++j) s += std::log(dist[k - 1] / dist[j]);
        if (s <= 0.0) {
            ++res.excluded;
            continue;
        }
        estimates.push_back(double(k - 1) / s);
    }
    if (res.excluded > 0)
        std::fprintf(stderr, "intrinsic_dim_mle: excluded %zu points with zero neighbour distances\n", res.excluded);
    if (estimates.empty()) throw UndefinedMetric("intrinsic_dim_mle: no usable points");
    res.dimension = mean_of(estimates);
    return res;
}

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{"rmae",   "rrmse", "rfft_low", "rfft_mid", "rfft_high",
                                                "eg",     "pg",    "ei_pred",  "ei_ref"};
    return names;
}

std::map<std::string, std::vector<double>> compare_records(const WaveformRecord& pred, const WaveformRecord& ref,
                                                           const MetricOptions& opt) {
    if (pred.data.shape() != ref.data.shape()) throw ContractError("compare_records: shape mismatch");
    if (ref.data.rank() != 4 || ref.data.dim(3) != 3) throw ContractError("compare_records: record must be [ns, ns, Nt, 3]");
    const double dt = ref.dt_out;
    const std::size_t nsens = ref.data.dim(0) * ref.data.dim(1), nt = ref.data.dim(2);
    std::map<std::string, std::vector<double>> out;
    for (const auto& name : metric_names()) out[name].resize(nsens);
    const Tensor ei_p = normalized_energy_integral(pred), ei_r = normalized_energy_integral(ref);
    std::vector<double> p(nt), r(nt);
    const std::array<FrequencyBand, 3> bands{kLowBand, kMidBand, kHighBand};
    for (std::size_t s = 0; s < nsens; ++s) {
        std::map<std::string, std::pair<double, int>> acc;
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t t = 0; t < nt; ++t) {
                p[t] = pred.data.values()[(s * nt + t) * 3 + c];
                r[t] = ref.data.values()[(s * nt + t) * 3 + c];
            }
            auto add = [&](const char* name, double v) {
                auto& a = acc[name];
                a.first += v;
                a.second += 1;
            };
            add("rmae", rmae(p, r, opt.eps));
            add("rrmse", rrmse(p, r, opt.eps));
            const char* band_names[] = {"rfft_low", "rfft_mid", "rfft_high"};
            for (int b = 0; b < 3; ++b) {
                try {
                    add(band_names[b], frequency_bias(p, r, bands[std::size_t(b)], dt));
                } catch (const UndefinedMetric&) {
                }
            }
            try {
                const Gof g = envelope_phase_gof(p, r, dt, opt.gof);
                add("eg", g.envelope);
                add("pg", g.phase);
            } catch (const UndefinedMetric&) {
            }
        }
        for (const auto& name : metric_names()) {
            if (name == "ei_pred" || name == "ei_ref") continue;
            const auto it = acc.find(name);
            out[name][s] = it == acc.end() ? std::numeric_limits<double>::quiet_NaN()
                                           : it->second.first / double(it->second.second);
        }
        out["ei_pred"][s] = ei_p.values()[s];
        out["ei_ref"][s] = ei_r.values()[s];
    }
    return out;
}

void MetricReport::add(const std::map<std::string, std::vector<double>>& per_sensor) {
    for (const auto& [name, v] : per_sensor) {
        auto& dst = values_[name];
        dst.insert(dst.end(), v.begin(), v.end());
    }
}

std::map<std::string, Summary> MetricReport::summary() const {
    std::map<std::string, Summary> out;
    for (const auto& [name, v] : values_) {
        Summary s;
        double sum = 0.0;
        for (double x : v)
            if (std::isfinite(x)) {
                sum += x;
                ++s.count;
            }
        if (s.count == 0) {
            s.mean = s.stddev = std::numeric_limits<double>::quiet_NaN();
        } else {
            s.mean = sum / double(s.count);
            double ss = 0.0;
            for (double x : v)
                if (std::isfinite(x)) ss += (x - s.mean) * (x - s.mean);
            s.stddev = std::sqrt(ss / double(s.count));
        }
        out[name] = s;
    }
    return out;
}

std::string MetricReport::table() const {
    std::ostringstream os;
    os << "metric\tmean\tstddev\tcount\n";
    const auto sum = summary();
    for (const auto& name : metric_names()) {
        const auto it = sum.find(name);
        if (it == sum.end()) continue;
        char line[160];
        std::snprintf(line, sizeof line, "%s\t%.6g\t%.6g\t%zu\n", name.c_str(), it->second.mean, it->second.stddev,
                      it->second.count);
        os << line;
    }
    return os.str();
}

}  // namespace mifno
