#include <cmath>

#include "mifno/errors.hpp"
#include "mifno/layers.hpp"

namespace mifno {

ParamBinding::ParamBinding(const WeightMap& weights, Tape* tape) {
    for (const auto& [name, value] : weights) vars_.emplace(name, tape ? tape->parameter(value, name) : constant(value));
}

const Var& ParamBinding::operator()(const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw ContractError("missing weight array '" + name + "'");
    return it->second;
}

Tensor uplift_input(const Tensor& geology) {
    if (geology.rank() != 3 || geology.is_complex())
        throw ContractError("uplift: geology must be a real [S1, S2, S3] grid, got " + shape_string(geology.shape()));
    const std::size_t s1 = geology.dim(0), s2 = geology.dim(1), s3 = geology.dim(2);
    Tensor out({s1, s2, s3, 4});
    auto g = geology.values();
    auto o = out.values();
    std::size_t idx = 0;
    for (std::size_t i = 0; i < s1; ++i)
        for (std::size_t j = 0; j < s2; ++j)
            for (std::size_t k = 0; k < s3; ++k, ++idx) {
                double* cell = o.data() + 4 * idx;
                cell[0] = g[idx];
                cell[1] = (static_cast<double>(i) + 0.5) / static_cast<double>(s1);
                cell[2] = (static_cast<double>(j) + 0.5) / static_cast<double>(s2);
                cell[3] = (static_cast<double>(k) + 0.5) / static_cast<double>(s3);
            }
    return out;
}

Var uplift(const Tensor& geology, const ParamBinding& p, const std::string& prefix) {
    return pointwise_linear(constant(uplift_input(geology)), p(prefix + "/w"), p(prefix + "/b"));
}

Var fourier_layer(const Var& v, const ParamBinding& p, const std::string& prefix, const LayerConfig& cfg,
                  Activation act) {
    if (v.value().rank() != 4 || v.shape()[3] != cfg.d_v)
        throw ContractError("fourier_layer " + prefix + ": expected [n1, n2, n3, " + std::to_string(cfg.d_v) +
                            "] input, got " + shape_string(v.shape()));
    Var k = spectral_conv(v, p(prefix + "/spectral/r1"), p(prefix + "/spectral/r2"), p(prefix + "/spectral/r3"),
                          cfg.out_len_axis3);
    Var h = activate(pointwise_linear(k, p(prefix + "/mlp/w1"), p(prefix + "/mlp/b1")), act);
    Var m = pointwise_linear(h, p(prefix + "/mlp/w2"), p(prefix + "/mlp/b2"));
    return add(modify_dimensions(v, 2, cfg.out_len_axis3), m);
}

Var project(const Var& v, const ParamBinding& p, const std::string& prefix, Activation act) {
    static const char* kComponents[3] = {"e", "n", "z"};
    std::vector<Var> heads;
    for (const char* c : kComponents) {
        const std::string q = prefix + "/" + c;
        Var h = activate(pointwise_linear(v, p(q + "/w1"), p(q + "/b1")), act);
        heads.push_back(pointwise_linear(h, p(q + "/w2"), p(q + "/b2")));
    }
    return concat_last(heads);
}

Var dense(const Var& x, const ParamBinding& p, const std::string& prefix) {
    if (x.value().rank() != 1) throw ContractError("dense: expected a vector input");
    Var y = pointwise_linear(reshape(x, {1, x.shape()[0]}), p(prefix + "/w"), p(prefix + "/b"));
    return reshape(y, {y.shape()[1]});
}

namespace {

Tensor uniform_tensor(const Shape& shape, double bound, Philox& rng) {
    Tensor t(shape);
    for (auto& v : t.values()) v = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

void init_linear(WeightMap& w, const std::string& prefix, std::size_t c_in, std::size_t c_out, Philox& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(c_in));
    w[prefix + "/w"] = uniform_tensor({c_in, c_out}, bound, rng);
    w[prefix + "/b"] = uniform_tensor({c_out}, bound, rng);
}

void init_conv(WeightMap& w, const std::string& prefix, std::size_t dims, std::size_t c_in, std::size_t c_out,
               Philox& rng) {
    if (dims != 2 && dims != 3) throw ContractError("init_conv: dims must be 2 or 3");
    const std::size_t taps = dims == 2 ? 9 : 27;
    const double bound = 1.0 / std::sqrt(static_cast<double>(c_in * taps));
    Shape k(dims, 3);
    k.push_back(c_in);
    k.push_back(c_out);
    w[prefix + "/k"] = uniform_tensor(k, bound, rng);
    w[prefix + "/b"] = uniform_tensor({c_out}, bound, rng);
}

void init_fourier_layer(WeightMap& w, const std::string& prefix, const LayerConfig& cfg, Philox& rng) {
    const std::size_t d = cfg.d_v;
    for (std::size_t a = 0; a < 3; ++a) {
        const std::size_t m = cfg.modes[a];
        const double std_dev = 1.0 / std::sqrt(static_cast<double>(m * 2 * d));
        Tensor r({m, d, d}, DType::complex);
        for (auto& x : r.raw()) x = std_dev * rng.normal();
        w[prefix + "/spectral/r" + std::to_string(a + 1)] = std::move(r);
    }
    const double b1 = 1.0 / std::sqrt(static_cast<double>(d));
    const double b2 = 1.0 / std::sqrt(static_cast<double>(cfg.mlp_hidden));
    w[prefix + "/mlp/w1"] = uniform_tensor({d, cfg.mlp_hidden}, b1, rng);
    w[prefix + "/mlp/b1"] = uniform_tensor({cfg.mlp_hidden}, b1, rng);
    w[prefix + "/mlp/w2"] = uniform_tensor({cfg.mlp_hidden, d}, b2, rng);
    w[prefix + "/mlp/b2"] = uniform_tensor({d}, b2, rng);
}

void init_uplift(WeightMap& w, const std::string& prefix, std::size_t d_v, Philox& rng) {
    init_linear(w, prefix, 4, d_v, rng);
}

void init_project(WeightMap& w, const std::string& prefix, std::size_t d, std::size_t q_hidden, Philox& rng) {
    for (const char* c : {"e", "n", "z"}) {
        const std::string q = prefix + "/" + c;
        const double b1 = 1.0 / std::sqrt(static_cast<double>(d));
        const double b2 = 1.0 / std::sqrt(static_cast<double>(q_hidden));
        w[q + "/w1"] = uniform_tensor({d, q_hidden}, b1, rng);
        w[q + "/b1"] = uniform_tensor({q_hidden}, b1, rng);
        w[q + "/w2"] = uniform_tensor({q_hidden, 1}, b2, rng);
        w[q + "/b2"] = uniform_tensor({1}, b2, rng);
    }
}

}  // namespace mifno
