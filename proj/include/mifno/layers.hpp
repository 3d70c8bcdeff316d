#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>

#include "mifno/autodiff.hpp"
#include "mifno/random.hpp"

namespace mifno {

/// Named trainable arrays. Names are stable and ordered, which fixes both the
/// checkpoint layout and the order in which parameters enter a tape.
using WeightMap = std::map<std::string, Tensor>;

/// Binds every array of a WeightMap to a Var for one forward pass: trainable
/// leaves when a tape is given, constants otherwise.
class ParamBinding {
public:
    ParamBinding(const WeightMap& weights, Tape* tape);
    const Var& operator()(const std::string& name) const;
    bool has(const std::string& name) const { return vars_.count(name) != 0; }
    const std::map<std::string, Var>& vars() const { return vars_; }

private:
    std::map<std::string, Var> vars_;
};

struct LayerConfig {
    std::size_t d_v = 16;
    std::array<std::size_t, 3> modes{16, 16, 32};
    std::size_t mlp_hidden = 16;
    std::size_t out_len_axis3 = 32;
};

/// Largest mode count an axis of length n can carry (real-input spectrum).
inline std::size_t max_modes(std::size_t n) { return n / 2 + 1; }

/// One axis term of the factorized kernel. v is real, channels last; the
/// spectrum along `axis` is truncated to the M modes held in r (complex
/// [M, c_in, c_out]), contracted over channels mode by mode, and brought back
/// to length out_len with real-signal (Hermitian) semantics. Amplitudes are
/// normalized by the input length, so a unit DC weight maps a constant to itself.
Var spectral_axis(const Var& v, const Var& r, std::size_t axis, std::size_t out_len);

/// Fourier resampling along one axis: keeps the common low modes, zero-pads or
/// truncates the rest, amplitude preserving. new_len == n returns v unchanged.
Var modify_dimensions(const Var& v, std::size_t axis, std::size_t new_len);

/// Sum of the three axis terms of a [n1, n2, n3, c] field. The first two terms
/// are resampled along the third axis so all summands reach out_len3.
Var spectral_conv(const Var& v, const Var& r1, const Var& r2, const Var& r3, std::size_t out_len3);

/// Builds the 4-channel [S1, S2, S3, 4] uplift input: geology followed by the
/// normalized cell-center coordinates (i + 0.5)/S along each axis.
Tensor uplift_input(const Tensor& geology);

Var uplift(const Tensor& geology, const ParamBinding& p, const std::string& prefix);

/// v + MLP(K(v)), with the residual resampled when the third axis changes length.
Var fourier_layer(const Var& v, const ParamBinding& p, const std::string& prefix, const LayerConfig& cfg,
                  Activation act);

/// Two-stage pointwise head per velocity component; result [.., 3].
Var project(const Var& v, const ParamBinding& p, const std::string& prefix, Activation act);

/// Dense map on a rank-1 vector.
Var dense(const Var& x, const ParamBinding& p, const std::string& prefix);

// Initialisers ----------------------------------------------------------------
void init_linear(WeightMap& w, const std::string& prefix, std::size_t c_in, std::size_t c_out, Philox& rng);
void init_conv(WeightMap& w, const std::string& prefix, std::size_t dims, std::size_t c_in, std::size_t c_out,
               Philox& rng);
void init_fourier_layer(WeightMap& w, const std::string& prefix, const LayerConfig& cfg, Philox& rng);
void init_uplift(WeightMap& w, const std::string& prefix, std::size_t d_v, Philox& rng);
void init_project(WeightMap& w, const std::string& prefix, std::size_t d, std::size_t q_hidden, Philox& rng);

}  // namespace mifno
