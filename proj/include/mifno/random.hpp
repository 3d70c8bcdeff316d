#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace mifno {

/// Philox4x32-10 counter-based generator. A (key, stream) pair fully determines
/// the sequence, so per-sample streams can be derived without shared state.
class Philox {
public:
    Philox(std::uint64_t key, std::uint64_t stream);

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer on [0, n).
    std::uint64_t uniform_int(std::uint64_t n);
    /// Standard normal via Box-Muller (the second variate is cached).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    std::size_t pos_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Stream identifiers: one independent stream per (sample index, purpose).
enum class StreamPurpose : std::uint8_t { geology = 1, source = 2, init = 3, shuffle = 4, lhs = 5, misc = 6 };

inline Philox make_stream(std::uint64_t seed, std::uint64_t index, StreamPurpose purpose) {
    return Philox(seed, (index << 8) | static_cast<std::uint64_t>(purpose));
}

}  // namespace mifno
