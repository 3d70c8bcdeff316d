#include "mifno/elastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mifno/errors.hpp"

namespace mifno {

namespace {

constexpr double kC1 = 9.0 / 8.0;
constexpr double kC2 = -1.0 / 24.0;
constexpr std::ptrdiff_t kGhost = 2;

bool near_integer(double v, double tol = 1e-9) { return std::abs(v - std::round(v)) <= tol * std::max(1.0, std::abs(v)); }

// Staggered grid on the padded domain. Positions are in cells from the padded
// origin; storage index m of a half-offset field holds position m + 1/2.
//   normal stresses (I+1/2, J+1/2, K)     vx (I, J+1/2, K)     vy (I+1/2, J, K)
//   vz (I+1/2, J+1/2, K+1/2)              sxy (I, J, K)        sxz (I, J+1/2, K+1/2)
//   syz (I+1/2, J, K+1/2)
// K = 0 is the free surface.
struct Grid {
    std::ptrdiff_t nx = 0, ny = 0, nz = 0;  // padded cell counts
    std::ptrdiff_t sx = 0, sy = 0;
    std::size_t total = 0;

    Grid(std::ptrdiff_t nx_, std::ptrdiff_t ny_, std::ptrdiff_t nz_) : nx(nx_), ny(ny_), nz(nz_) {
        const std::ptrdiff_t ay = ny + 1 + 2 * kGhost, az = nz + 1 + 2 * kGhost;
        sy = az;
        sx = ay * az;
        total = static_cast<std::size_t>((nx + 1 + 2 * kGhost) * sx);
    }
    std::size_t at(std::ptrdiff_t i, std::ptrdiff_t j, std::ptrdiff_t k) const {
        return static_cast<std::size_t>((i + kGhost) * sx + (j + kGhost) * sy + (k + kGhost));
    }
};

// Derivative at an integer position of a field stored at half positions.
inline double dm(const double* f, std::ptrdiff_t s) { return kC1 * (f[0] - f[-s]) + kC2 * (f[s] - f[-2 * s]); }
// Derivative at a half position of a field stored at integer positions.
inline double dp(const double* f, std::ptrdiff_t s) { return kC1 * (f[s] - f[0]) + kC2 * (f[2 * s] - f[-s]); }

struct Weights {
    std::size_t index[4];
    double w[4];
};

// Bilinear weights on the surface for a field whose horizontal nodes sit at
// (I + ox, J + oy).
Weights bilinear(const Grid& g, double px, double py, double ox, double oy, std::ptrdiff_t k) {
    const double u = px - ox, v = py - oy;
    const auto i0 = static_cast<std::ptrdiff_t>(std::floor(u));
    const auto j0 = static_cast<std::ptrdiff_t>(std::floor(v));
    const double fu = u - double(i0), fv = v - double(j0);
    Weights r;
    r.index[0] = g.at(i0, j0, k);
    r.index[1] = g.at(i0 + 1, j0, k);
    r.index[2] = g.at(i0, j0 + 1, k);
    r.index[3] = g.at(i0 + 1, j0 + 1, k);
    r.w[0] = (1 - fu) * (1 - fv);
    r.w[1] = fu * (1 - fv);
    r.w[2] = (1 - fu) * fv;
    r.w[3] = fu * fv;
    return r;
}

struct Injection {
    std::vector<std::size_t> index;
    std::vector<double> weight;
};

void trilinear(const Grid& g, double px, double py, double pz, double ox, double oy, double oz, Injection& out,
               double scale) {
    const double u = px - ox, v = py - oy, w = pz - oz;
    const auto i0 = static_cast<std::ptrdiff_t>(std::floor(u));
    const auto j0 = static_cast<std::ptrdiff_t>(std::floor(v));
    const auto k0 = static_cast<std::ptrdiff_t>(std::floor(w));
    const double fu = u - double(i0), fv = v - double(j0), fw = w - double(k0);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) {
                const double wt = (a ? fu : 1 - fu) * (b ? fv : 1 - fv) * (c ? fw : 1 - fw);
                if (wt == 0.0) continue;
                out.index.push_back(g.at(i0 + a, j0 + b, k0 + c));
                out.weight.push_back(wt * scale);
            }
}

double max_value(const Tensor& t) {
    double m = 0.0;
    for (double v : t.values()) m = std::max(m, v);
    return m;
}

double min_value(const Tensor& t) {
    double m = std::numeric_limits<double>::infinity();
    for (double v : t.values()) m = std::min(m, v);
    return m;
}

}  // namespace

std::size_t SimConfig::output_steps() const { return static_cast<std::size_t>(std::llround(duration / dt_out)); }
std::size_t SimConfig::steps_per_output() const { return static_cast<std::size_t>(std::llround(dt_out / dt)); }

void SimConfig::validate() const {
    if (!(dx > 0.0) || !(dt > 0.0) || !(dt_out > 0.0) || !(duration > 0.0))
        throw ContractError("SimConfig: dx, dt, dt_out and duration must be positive");
    if (!near_integer(dt_out / dt)) throw ContractError("SimConfig: dt_out must be an integer multiple of dt");
    if (!near_integer(duration / dt_out)) throw ContractError("SimConfig: duration must be a multiple of dt_out");
    if (sensors_per_side == 0) throw ContractError("SimConfig: need at least one sensor");
    if (sponge_width > 0 && !(sponge_edge_factor > 0.0 && sponge_edge_factor <= 1.0))
        throw ContractError("SimConfig: sponge_edge_factor must be in (0, 1]");
}

double source_time_function(double t, double tau) {
    if (!(tau > 0.0)) throw ContractError("source_time_function: tau must be positive");
    if (t <= 0.0) return 0.0;
    const double r = t / tau;
    return -std::expm1(-r) - r * std::exp(-r);
}

double max_stable_dt(double vp_max, double dx) {
    if (!(vp_max > 0.0) || !(dx > 0.0)) throw ContractError("max_stable_dt: arguments must be positive");
    return 0.5 * dx / (std::sqrt(3.0) * vp_max);
}

StabilityReport stability_check(const GeologyModel& g, const SimConfig& cfg, double target_frequency) {
    StabilityReport r;
    const double vp_max = max_value(g.vp), vs_min = min_value(g.vs);
    r.dt_max = max_stable_dt(vp_max, cfg.dx);
    r.stable = cfg.dt <= r.dt_max;
    r.points_per_wavelength = vs_min / (target_frequency * cfg.dx);
    r.under_resolved = r.points_per_wavelength < 4.0;
    // A wave at speed v spends dx / (v dt) steps per sponge cell.
    double log_damp = 0.0;
    if (cfg.sponge_width > 0) {
        const double alpha = -std::log(cfg.sponge_edge_factor);
        const double w = double(cfg.sponge_width);
        for (std::size_t n = 1; n <= cfg.sponge_width; ++n) log_damp += alpha * (double(n) / w) * (double(n) / w);
        log_damp *= cfg.dx / (vp_max * cfg.dt);
    }
    r.sponge_reflection = std::exp(-2.0 * log_damp);
    return r;
}

WaveformRecord simulate(const GeologyModel& geo, const SourceSpec& source, const SimConfig& cfg,
                        SimDiagnostics* diag) {
    return simulate(geo, std::span<const SourceSpec>(&source, 1), cfg, diag);
}

WaveformRecord simulate(const GeologyModel& geo, std::span<const SourceSpec> sources, const SimConfig& cfg,
                        SimDiagnostics* diag) {
    cfg.validate();
    if (geo.vs.rank() != 3) throw ContractError("simulate: geology must be 3-D");
    require_same_shape(geo.vp, geo.vs, "simulate: vp");
    require_same_shape(geo.rho, geo.vs, "simulate: rho");
    if (!(geo.dx > 0.0)) throw ContractError("simulate: geology spacing must be positive");

    const double h = cfg.dx;
    const double len_x = geo.dx * double(geo.vs.dim(0));
    const double len_y = geo.dx * double(geo.vs.dim(1));
    const double depth = geo.dx * double(geo.vs.dim(2));
    if (!near_integer(len_x / h) || !near_integer(len_y / h) || !near_integer(depth / h))
        throw ContractError("simulate: domain is not a whole number of simulation cells");
    const auto px_cells = std::llround(len_x / h), py_cells = std::llround(len_y / h),
               pz_cells = std::llround(depth / h);
    const auto w = static_cast<std::ptrdiff_t>(cfg.sponge_width);
    const Grid g(px_cells + 2 * w, py_cells + 2 * w, pz_cells + w);

    const double vp_max = max_value(geo.vp);
    const double dt_max = max_stable_dt(vp_max, h);
    if (cfg.dt > dt_max)
        throw NumericalError("simulate: dt = " + std::to_string(cfg.dt) + " s exceeds the stability limit " +
                             std::to_string(dt_max) + " s");
    if (!geo.vs.all_finite() || !geo.vp.all_finite() || !geo.rho.all_finite())
        throw DataError("simulate: geology contains non-finite values");

    // Material at normal-stress nodes, clamped into the physical grid inside the sponge.
    const std::ptrdiff_t gnx = geo.vs.dim(0), gny = geo.vs.dim(1), gnz = geo.vs.dim(2);
    auto geo_index = [&](std::ptrdiff_t i, std::ptrdiff_t j, std::ptrdiff_t k) {
        const double x = (std::clamp<std::ptrdiff_t>(i - w, 0, px_cells - 1) + 0.5) * h;
        const double y = (std::clamp<std::ptrdiff_t>(j - w, 0, py_cells - 1) + 0.5) * h;
        const double z = double(std::clamp<std::ptrdiff_t>(k, 0, pz_cells - 1)) * h;
        const auto gi = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(std::floor(x / geo.dx + 1e-9)), 0, gnx - 1);
        const auto gj = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(std::floor(y / geo.dx + 1e-9)), 0, gny - 1);
        const auto gk = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(std::floor(z / geo.dx + 1e-9)), 0, gnz - 1);
        return static_cast<std::size_t>((gi * gny + gj) * gnz + gk);
    };
    const std::size_t ncell = static_cast<std::size_t>(g.nx * g.ny * g.nz);
    std::vector<double> c_rho(ncell), c_mu(ncell), c_lam(ncell);
    auto cell = [&](std::ptrdiff_t i, std::ptrdiff_t j, std::ptrdiff_t k) {
        i = std::clamp<std::ptrdiff_t>(i, 0, g.nx - 1);
        j = std::clamp<std::ptrdiff_t>(j, 0, g.ny - 1);
        k = std::clamp<std::ptrdiff_t>(k, 0, g.nz - 1);
        return static_cast<std::size_t>((i * g.ny + j) * g.nz + k);
    };
    for (std::ptrdiff_t i = 0; i < g.nx; ++i)
        for (std::ptrdiff_t j = 0; j < g.ny; ++j)
            for (std::ptrdiff_t k = 0; k < g.nz; ++k) {
                const std::size_t gi = geo_index(i, j, k), c = cell(i, j, k);
                const double rho = geo.rho.values()[gi], vs = geo.vs.values()[gi], vp = geo.vp.values()[gi];
                c_rho[c] = rho;
                c_mu[c] = rho * vs * vs;
                c_lam[c] = rho * (vp * vp - 2 * vs * vs);
            }

    std::vector<double> vx(g.total), vy(g.total), vz(g.total), sxx(g.total), syy(g.total), szz(g.total),
        sxy(g.total), sxz(g.total), syz(g.total);
    std::vector<double> bx(g.total), by(g.total), bz(g.total), lam(g.total), l2m(g.total), mxy(g.total),
        mxz(g.total), myz(g.total);
    auto harmonic4 = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
        return 4.0 / (1.0 / c_mu[a] + 1.0 / c_mu[b] + 1.0 / c_mu[c] + 1.0 / c_mu[d]);
    };
    for (std::ptrdiff_t i = 0; i <= g.nx; ++i)
        for (std::ptrdiff_t j = 0; j <= g.ny; ++j)
            for (std::ptrdiff_t k = 0; k < g.nz; ++k) {
                const std::size_t n = g.at(i, j, k);
                bx[n] = 2.0 / (c_rho[cell(i - 1, j, k)] + c_rho[cell(i, j, k)]);
                by[n] = 2.0 / (c_rho[cell(i, j - 1, k)] + c_rho[cell(i, j, k)]);
                bz[n] = 2.0 / (c_rho[cell(i, j, k)] + c_rho[cell(i, j, k + 1)]);
                lam[n] = c_lam[cell(i, j, k)];
                l2m[n] = c_lam[cell(i, j, k)] + 2 * c_mu[cell(i, j, k)];
                mxy[n] = harmonic4(cell(i - 1, j - 1, k), cell(i, j - 1, k), cell(i - 1, j, k), cell(i, j, k));
                mxz[n] = harmonic4(cell(i - 1, j, k), cell(i, j, k), cell(i - 1, j, k + 1), cell(i, j, k + 1));
                myz[n] = harmonic4(cell(i, j - 1, k), cell(i, j, k), cell(i, j - 1, k + 1), cell(i, j, k + 1));
            }

    // Sponge profiles for integer (0) and half (1) positions along each axis.
    const double alpha = cfg.sponge_width ? -std::log(cfg.sponge_edge_factor) : 0.0;
    auto profile = [&](std::ptrdiff_t n_cells, std::ptrdiff_t lo, std::ptrdiff_t hi, double off) {
        std::vector<double> p(static_cast<std::size_t>(n_cells + 1), 1.0);
        for (std::ptrdiff_t i = 0; i <= n_cells; ++i) {
            const double x = double(i) + off;
            const double d = std::max({0.0, double(lo) - x, x - double(hi)});
            if (d > 0.0) p[static_cast<std::size_t>(i)] = std::exp(-alpha * (d / double(w)) * (d / double(w)));
        }
        return p;
    };
    const std::array<std::vector<double>, 2> gx{profile(g.nx, w, w + px_cells, 0.0),
                                                profile(g.nx, w, w + px_cells, 0.5)};
    const std::array<std::vector<double>, 2> gy{profile(g.ny, w, w + py_cells, 0.0),
                                                profile(g.ny, w, w + py_cells, 0.5)};
    const std::array<std::vector<double>, 2> gz{profile(g.nz, -1, pz_cells, 0.0), profile(g.nz, -1, pz_cells, 0.5)};

    // Ranges of valid nodes per field: {ox, oy, oz} half offsets and upper bounds.
    struct FieldSpec {
        std::vector<double>* f;
        int ox, oy, oz;
        std::ptrdiff_t ni, nj;
    };
    const std::array<FieldSpec, 9> fields{{{&vx, 0, 1, 0, g.nx + 1, g.ny},
                                           {&vy, 1, 0, 0, g.nx, g.ny + 1},
                                           {&vz, 1, 1, 1, g.nx, g.ny},
                                           {&sxx, 1, 1, 0, g.nx, g.ny},
                                           {&syy, 1, 1, 0, g.nx, g.ny},
                                           {&szz, 1, 1, 0, g.nx, g.ny},
                                           {&sxy, 0, 0, 0, g.nx + 1, g.ny + 1},
                                           {&sxz, 0, 1, 1, g.nx + 1, g.ny},
                                           {&syz, 1, 0, 1, g.nx, g.ny + 1}}};
    auto sponge = [&](std::size_t first, std::size_t last) {
        if (w == 0) return;
        for (std::size_t f = first; f < last; ++f) {
            const FieldSpec& s = fields[f];
            double* d = s.f->data();
            const auto& pz = gz[s.oz];
            for (std::ptrdiff_t i = 0; i < s.ni; ++i) {
                const double fx = gx[s.ox][i];
                for (std::ptrdiff_t j = 0; j < s.nj; ++j) {
                    const double fxy = fx * gy[s.oy][j];
                    double* row = d + g.at(i, j, 0);
                    if (fxy == 1.0) {
                        for (std::ptrdiff_t k = pz_cells - 1; k < g.nz; ++k) row[k] *= pz[k];
                    } else {
                        for (std::ptrdiff_t k = 0; k < g.nz; ++k) row[k] *= fxy * pz[k];
                    }
                }
            }
        }
    };

    // Sources: stress-glut increments -M_ij * ds / h^3 on each stress grid.
    struct SourceInjection {
        Injection normal_xx, normal_yy, normal_zz, xy, xz, yz;
        double tau;
    };
    std::vector<SourceInjection> injections;
    for (const SourceSpec& s : sources) {
        const double x = s.position[0], y = s.position[1], d = -s.position[2];
        if (x < 0 || x > len_x || y < 0 || y > len_y || d < 0 || d > depth)
            throw ContractError("simulate: source outside the domain");
        if (!(s.rise_time > 0.0)) throw ContractError("simulate: rise_time must be positive");
        const double px = x / h + double(w), py = y / h + double(w), pz = d / h;
        const double vol = h * h * h;
        // (north, east, down) moment to the (east, north, down) solver frame.
        const auto& m = s.moment;
        SourceInjection inj;
        inj.tau = s.rise_time;
        trilinear(g, px, py, pz, 0.5, 0.5, 0.0, inj.normal_xx, -m[1] / vol);
        trilinear(g, px, py, pz, 0.5, 0.5, 0.0, inj.normal_yy, -m[0] / vol);
        trilinear(g, px, py, pz, 0.5, 0.5, 0.0, inj.normal_zz, -m[2] / vol);
        trilinear(g, px, py, pz, 0.0, 0.0, 0.0, inj.xy, -m[3] / vol);
        trilinear(g, px, py, pz, 0.0, 0.5, 0.5, inj.xz, -m[5] / vol);
        trilinear(g, px, py, pz, 0.5, 0.0, 0.5, inj.yz, -m[4] / vol);
        injections.push_back(std::move(inj));
    }

    // Sensors.
    const std::size_t ns = cfg.sensors_per_side;
    WaveformRecord rec;
    rec.dt_out = cfg.dt_out;
    rec.sensor_x.resize(ns);
    rec.sensor_y.resize(ns);
    for (std::size_t i = 0; i < ns; ++i) {
        rec.sensor_x[i] = (double(i) + 0.5) * len_x / double(ns);
        rec.sensor_y[i] = (double(i) + 0.5) * len_y / double(ns);
    }
    std::vector<std::array<Weights, 3>> sensors;
    for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < ns; ++j) {
            const double px = rec.sensor_x[i] / h + double(w), py = rec.sensor_y[j] / h + double(w);
            sensors.push_back({bilinear(g, px, py, 0.0, 0.5, 0), bilinear(g, px, py, 0.5, 0.0, 0),
                               bilinear(g, px, py, 0.5, 0.5, 0)});
        }
    const std::size_t nt = cfg.output_steps(), every = cfg.steps_per_output();
    rec.data = Tensor({ns, ns, nt, 3});
    auto out = rec.data.values();
    std::vector<double> prev(sensors.size() * 3, 0.0), cur(sensors.size() * 3);
    auto sample = [&](std::vector<double>& dst) {
        const std::array<const std::vector<double>*, 3> comp{&vx, &vy, &vz};
        for (std::size_t s = 0; s < sensors.size(); ++s)
            for (int c = 0; c < 3; ++c) {
                const Weights& wt = sensors[s][c];
                const double* f = comp[c]->data();
                double v = 0.0;
                for (int q = 0; q < 4; ++q) v += wt.w[q] * f[wt.index[q]];
                dst[s * 3 + c] = c == 2 ? -v : v;  // Z is positive up
            }
    };

    const double dt = cfg.dt, rh = 1.0 / h;
    const std::ptrdiff_t sx = g.sx, sy = g.sy;
    const std::size_t steps = nt == 0 ? 0 : (nt - 1) * every + 1;
    if (diag) {
        diag->kinetic_energy.clear();
        diag->steps = steps;
    }

    for (std::size_t n = 0; n < steps; ++n) {
        // Velocities to t_{n+1/2}.
        for (std::ptrdiff_t i = 0; i <= g.nx; ++i)
            for (std::ptrdiff_t j = 0; j <= g.ny; ++j) {
                const std::size_t base = g.at(i, j, 0);
                const bool in_x = i < g.nx, in_y = j < g.ny;
                for (std::ptrdiff_t k = 0; k < g.nz; ++k) {
                    const std::size_t q = base + std::size_t(k);
                    if (in_y)
                        vx[q] += dt * rh * bx[q] * (dm(&sxx[q], sx) + dp(&sxy[q], sy) + dm(&sxz[q], 1));
                    if (in_x)
                        vy[q] += dt * rh * by[q] * (dp(&sxy[q], sx) + dm(&syy[q], sy) + dm(&syz[q], 1));
                    if (in_x && in_y)
                        vz[q] += dt * rh * bz[q] * (dp(&sxz[q], sx) + dp(&syz[q], sy) + dp(&szz[q], 1));
                }
            }
        sponge(0, 3);

        sample(cur);
        if (n % every == 0) {
            const std::size_t m = n / every;
            for (std::size_t s = 0; s < sensors.size(); ++s)
                for (int c = 0; c < 3; ++c)
                    out[(s * nt + m) * 3 + c] = 0.5 * (prev[s * 3 + c] + cur[s * 3 + c]);
        }
        std::swap(prev, cur);

        if (diag) {
            double e = 0.0;
            for (std::ptrdiff_t i = w; i < w + px_cells; ++i)
                for (std::ptrdiff_t j = w; j < w + py_cells; ++j)
                    for (std::ptrdiff_t k = 0; k < pz_cells; ++k) {
                        const std::size_t q = g.at(i, j, k);
                        e += vx[q] * vx[q] / bx[q] + vy[q] * vy[q] / by[q] + vz[q] * vz[q] / bz[q];
                    }
            diag->kinetic_energy.push_back(0.5 * e * h * h * h);
        }

        // Stresses to t_{n+1}.
        for (std::ptrdiff_t i = 0; i <= g.nx; ++i)
            for (std::ptrdiff_t j = 0; j <= g.ny; ++j) {
                const std::size_t base = g.at(i, j, 0);
                const bool in_x = i < g.nx, in_y = j < g.ny;
                for (std::ptrdiff_t k = 0; k < g.nz; ++k) {
                    const std::size_t q = base + std::size_t(k);
                    if (in_x && in_y) {
                        const double exx = dp(&vx[q], sx), eyy = dp(&vy[q], sy);
                        if (k == 0) {
                            // Free surface: szz = 0 eliminates the vertical derivative.
                            const double r = lam[q] / l2m[q];
                            sxx[q] += dt * rh * ((l2m[q] - lam[q] * r) * exx + (lam[q] - lam[q] * r) * eyy);
                            syy[q] += dt * rh * ((lam[q] - lam[q] * r) * exx + (l2m[q] - lam[q] * r) * eyy);
                        } else {
                            const double ezz = k == 1 ? vz[q] - vz[q - 1] : dm(&vz[q], 1);
                            sxx[q] += dt * rh * (l2m[q] * exx + lam[q] * (eyy + ezz));
                            syy[q] += dt * rh * (l2m[q] * eyy + lam[q] * (exx + ezz));
                            szz[q] += dt * rh * (l2m[q] * ezz + lam[q] * (exx + eyy));
                        }
                    }
                    sxy[q] += dt * rh * mxy[q] * (dm(&vx[q], sy) + dm(&vy[q], sx));
                    if (in_y) {
                        const double dz = k == 0 ? vx[q + 1] - vx[q] : dp(&vx[q], 1);
                        sxz[q] += dt * rh * mxz[q] * (dz + dm(&vz[q], sx));
                    }
                    if (in_x) {
                        const double dz = k == 0 ? vy[q + 1] - vy[q] : dp(&vy[q], 1);
                        syz[q] += dt * rh * myz[q] * (dz + dm(&vz[q], sy));
                    }
                }
            }
        for (const SourceInjection& inj : injections) {
            const double ds = source_time_function((double(n) + 1) * dt, inj.tau) -
                              source_time_function(double(n) * dt, inj.tau);
            auto add = [&](std::vector<double>& f, const Injection& in) {
                for (std::size_t a = 0; a < in.index.size(); ++a) f[in.index[a]] += in.weight[a] * ds;
            };
            add(sxx, inj.normal_xx);
            add(syy, inj.normal_yy);
            add(szz, inj.normal_zz);
            add(sxy, inj.xy);
            add(sxz, inj.xz);
            add(syz, inj.yz);
        }
        sponge(3, 9);
        // Stress imaging above the free surface.
        for (std::ptrdiff_t i = 0; i <= g.nx; ++i)
            for (std::ptrdiff_t j = 0; j <= g.ny; ++j) {
                const std::size_t q = g.at(i, j, 0);
                szz[q] = 0.0;
                szz[q - 1] = -szz[q + 1];
                szz[q - 2] = -szz[q + 2];
                sxz[q - 1] = -sxz[q];
                sxz[q - 2] = -sxz[q + 1];
                syz[q - 1] = -syz[q];
                syz[q - 2] = -syz[q + 1];
            }

        if (n % 64 == 63 || n + 1 == steps) {
            for (const double* f : {vx.data(), vy.data(), vz.data()})
                for (std::size_t q = 0; q < g.total; q += 7)
                    if (!std::isfinite(f[q]))
                        throw NumericalError("simulate: non-finite wavefield at step " + std::to_string(n + 1));
        }
    }
    rec.data.check_finite("simulate: output");
    return rec;
}

double first_arrival(std::span<const double> trace, double dt, double t_begin, double t_end, double fraction) {
    if (!(dt > 0.0)) throw ContractError("first_arrival: dt must be positive");
    std::size_t lo = static_cast<std::size_t>(std::max(0.0, std::ceil(t_begin / dt)));
    std::size_t hi = std::min(trace.size(), static_cast<std::size_t>(std::max(0.0, std::ceil(t_end / dt))));
    double peak = 0.0;
    for (std::size_t i = lo; i < hi; ++i) peak = std::max(peak, std::abs(trace[i]));
    if (peak == 0.0) return -1.0;
    const double level = fraction * peak;
    for (std::size_t i = lo; i < hi; ++i)
        if (std::abs(trace[i]) >= level) {
            if (i == lo) return double(i) * dt;
            const double a = std::abs(trace[i - 1]), b = std::abs(trace[i]);
            return (double(i - 1) + (level - a) / (b - a)) * dt;
        }
    return -1.0;
}

std::vector<double> sensor_trace(const WaveformRecord& w, std::size_t i, std::size_t j, std::size_t c) {
    const std::size_t nt = w.data.dim(2);
    std::vector<double> out(nt);
    for (std::size_t t = 0; t < nt; ++t) out[t] = w.data.at({i, j, t, c});
    return out;
}

}  // namespace mifno
