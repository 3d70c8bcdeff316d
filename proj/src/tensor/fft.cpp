#include "mifno/fft.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "mifno/errors.hpp"

namespace mifno {

namespace {

constexpr std::size_t kMaxDirectRadix = 13;

std::vector<std::size_t> factorize(std::size_t n) {
    std::vector<std::size_t> f;
    while (n % 4 == 0) {
        f.push_back(4);
        n /= 4;
    }
    for (std::size_t p = 2; p * p <= n; ++p) {
        while (n % p == 0) {
            f.push_back(p);
            n /= p;
        }
    }
    if (n > 1) f.push_back(n);
    return f;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

}  // namespace

struct FftPlan::Bluestein {
    std::size_t m;
    std::vector<cdouble> chirp;      // exp(-i pi k^2 / n)
    std::vector<cdouble> kernel_hat; // FFT of the conjugate chirp, wrapped to length m
    const FftPlan* inner;
};

FftPlan::FftPlan(std::size_t n) : n_(n) {
    if (n == 0) throw ContractError("FftPlan: length must be >= 1");
    factors_ = factorize(n);
    bool direct = true;
    for (auto p : factors_) direct = direct && p <= kMaxDirectRadix;

    twiddles_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        twiddles_[k] = {std::cos(angle), std::sin(angle)};
    }
    if (direct) return;

    auto b = std::make_unique<Bluestein>();
    b->m = next_pow2(2 * n - 1);
    b->inner = &fft_plan(b->m);
    b->chirp.resize(n);
    const std::size_t two_n = 2 * n;
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the phase argument small for large k.
        const std::size_t k2 = static_cast<std::size_t>((static_cast<unsigned long long>(k) * k) % two_n);
        const double angle = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
        b->chirp[k] = {std::cos(angle), std::sin(angle)};
    }
    b->kernel_hat.assign(b->m, cdouble{});
    b->kernel_hat[0] = std::conj(b->chirp[0]);
    for (std::size_t k = 1; k < n; ++k) {
        b->kernel_hat[k] = std::conj(b->chirp[k]);
        b->kernel_hat[b->m - k] = std::conj(b->chirp[k]);
    }
    b->inner->execute(b->kernel_hat, FftDirection::forward);
    bluestein_ = std::move(b);
}

FftPlan::~FftPlan() = default;

void FftPlan::execute(std::span<cdouble> data, FftDirection dir) const {
    if (data.size() != n_)
        throw ContractError("FftPlan: buffer of length " + std::to_string(data.size()) + " for plan of length " +
                            std::to_string(n_));
    if (dir == FftDirection::forward) {
        forward(data);
        return;
    }
    for (auto& z : data) z = std::conj(z);
    forward(data);
    const double scale = 1.0 / static_cast<double>(n_);
    for (auto& z : data) z = std::conj(z) * scale;
}

void FftPlan::forward(std::span<cdouble> data) const {
    if (n_ == 1) return;
    if (bluestein_) {
        const auto& b = *bluestein_;
        std::vector<cdouble> a(b.m, cdouble{});
        for (std::size_t k = 0; k < n_; ++k) a[k] = data[k] * b.chirp[k];
        b.inner->execute(a, FftDirection::forward);
        for (std::size_t k = 0; k < b.m; ++k) a[k] *= b.kernel_hat[k];
        b.inner->execute(a, FftDirection::inverse);
        for (std::size_t k = 0; k < n_; ++k) data[k] = a[k] * b.chirp[k];
        return;
    }
    std::vector<cdouble> in(data.begin(), data.end());
    recurse(in.data(), 1, data.data(), n_, 0);
}

// Decimation in time: the length-n DFT of in[0], in[stride], ... is built from
// p interleaved sub-DFTs of length n/p, then combined with twiddled radix-p butterflies.
void FftPlan::recurse(const cdouble* in, std::size_t stride, cdouble* out, std::size_t n, std::size_t level) const {
    if (n == 1) {
        out[0] = in[0];
        return;
    }
    const std::size_t p = factors_[level];
    const std::size_t m = n / p;
    for (std::size_t q = 0; q < p; ++q) recurse(in + q * stride, stride * p, out + q * m, m, level + 1);

    const std::size_t tw_step = n_ / n;  // exp(-2 pi i / n) = twiddles_[tw_step]
    cdouble buf[kMaxDirectRadix];
    cdouble res[kMaxDirectRadix];
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t q = 0; q < p; ++q) {
            const std::size_t idx = (q * k * tw_step) % n_;
            buf[q] = out[k + q * m] * twiddles_[idx];
        }
        switch (p) {
            case 2:
                res[0] = buf[0] + buf[1];
                res[1] = buf[0] - buf[1];
                break;
            case 4: {
                const cdouble a0 = buf[0] + buf[2];
                const cdouble a1 = buf[0] - buf[2];
                const cdouble a2 = buf[1] + buf[3];
                const cdouble d = buf[1] - buf[3];
                const cdouble a3{d.imag(), -d.real()};  // -i * d
                res[0] = a0 + a2;
                res[1] = a1 + a3;
                res[2] = a0 - a2;
                res[3] = a1 - a3;
                break;
            }
            default: {
                const std::size_t root = n_ / p;  // exp(-2 pi i / p)
                for (std::size_t s = 0; s < p; ++s) {
                    cdouble acc = buf[0];
                    for (std::size_t q = 1; q < p; ++q) acc += buf[q] * twiddles_[((q * s) % p) * root];
                    res[s] = acc;
                }
            }
        }
        for (std::size_t s = 0; s < p; ++s) out[k + s * m] = res[s];
    }
}

const FftPlan& fft_plan(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<FftPlan>> cache;
    {
        std::lock_guard lock(mutex);
        auto it = cache.find(n);
        if (it != cache.end()) return *it->second;
    }
    // Built outside the lock: Bluestein plans request their inner plan recursively.
    auto plan = std::make_unique<FftPlan>(n);
    std::lock_guard lock(mutex);
    auto [it, inserted] = cache.emplace(n, std::move(plan));
    return *it->second;
}

void fft_inplace(std::span<cdouble> data, FftDirection dir) {
    if (data.empty()) throw ContractError("fft: empty input");
    fft_plan(data.size()).execute(data, dir);
}

Tensor fft_axis_kernel(const Tensor& t, std::size_t axis, FftDirection dir) {
    if (axis >= t.rank())
        throw ContractError("fft_axis: axis " + std::to_string(axis) + " out of range for shape " +
                            shape_string(t.shape()));
    if (dir == FftDirection::inverse && !t.is_complex())
        throw ContractError("fft_axis: inverse transform requires complex input");
    const std::size_t n = t.shape()[axis];
    if (n == 0) throw ContractError("fft_axis: zero-length axis");

    Tensor out = t.to_complex();
    std::size_t outer = 1, inner = 1;
    for (std::size_t a = 0; a < axis; ++a) outer *= t.shape()[a];
    for (std::size_t a = axis + 1; a < t.rank(); ++a) inner *= t.shape()[a];

    const FftPlan& plan = fft_plan(n);
    auto data = out.cvalues();
    std::vector<cdouble> line(n);
    for (std::size_t o = 0; o < outer; ++o) {
        cdouble* base = data.data() + o * n * inner;
        for (std::size_t i = 0; i < inner; ++i) {
            for (std::size_t k = 0; k < n; ++k) line[k] = base[k * inner + i];
            plan.execute(line, dir);
            for (std::size_t k = 0; k < n; ++k) base[k * inner + i] = line[k];
        }
    }
    return out;
}

std::vector<cdouble> fft_real(std::span<const double> signal) {
    std::vector<cdouble> out(signal.begin(), signal.end());
    fft_inplace(out, FftDirection::forward);
    return out;
}

}  // namespace mifno
