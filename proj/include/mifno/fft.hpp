#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "mifno/tensor.hpp"

namespace mifno {

enum class FftDirection { forward, inverse };

/// Precomputed plan for a complex DFT of one length.
///
/// Convention: forward X_k = sum_j x_j exp(-2 pi i jk/n) (unnormalized),
/// inverse x_j = (1/n) sum_k X_k exp(+2 pi i jk/n).
/// Lengths whose prime factors are all <= 13 use a mixed-radix Cooley-Tukey
/// recursion; anything else goes through Bluestein's chirp-z with a
/// power-of-two inner transform.
class FftPlan {
public:
    explicit FftPlan(std::size_t n);
    ~FftPlan();
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    std::size_t size() const { return n_; }
    bool uses_bluestein() const { return bluestein_ != nullptr; }

    void execute(std::span<cdouble> data, FftDirection dir) const;

private:
    struct Bluestein;

    void forward(std::span<cdouble> data) const;
    void recurse(const cdouble* in, std::size_t stride, cdouble* out, std::size_t n, std::size_t level) const;

    std::size_t n_;
    std::vector<std::size_t> factors_;
    std::vector<cdouble> twiddles_;
    std::unique_ptr<Bluestein> bluestein_;
};

/// Process-wide plan cache; safe to call from several threads.
const FftPlan& fft_plan(std::size_t n);

void fft_inplace(std::span<cdouble> data, FftDirection dir);

/// Transform along one axis of a real or complex tensor. Inverse requires complex input.
Tensor fft_axis_kernel(const Tensor& t, std::size_t axis, FftDirection dir);

/// Real-to-complex helper for 1D signals.
std::vector<cdouble> fft_real(std::span<const double> signal);

}  // namespace mifno
