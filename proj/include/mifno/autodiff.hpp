#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mifno/fft.hpp"
#include "mifno/tensor.hpp"

namespace mifno {

class Tape;

/// Handle to a value in a computation. Values not attached to a tape (constants,
/// or results computed only from constants) carry no graph and free their memory
/// as soon as the last handle goes away, which is how inference runs.
class Var {
public:
    Var() = default;
    Var(std::shared_ptr<const Tensor> value, Tape* tape, std::size_t id)
        : value_(std::move(value)), tape_(tape), id_(id) {}

    const Tensor& value() const { return *value_; }
    const std::shared_ptr<const Tensor>& shared_value() const { return value_; }
    const Shape& shape() const { return value_->shape(); }
    bool on_tape() const { return tape_ != nullptr; }
    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return static_cast<bool>(value_); }

private:
    std::shared_ptr<const Tensor> value_;
    Tape* tape_ = nullptr;
    std::size_t id_ = static_cast<std::size_t>(-1);
};

Var constant(Tensor value);

/// Write access to the gradient buffers of an op's inputs during backward.
class GradSink {
public:
    /// Zero-initialised (on first use) gradient buffer for input `i`; accumulate into it.
    Tensor& operator[](std::size_t i);
    bool wanted(std::size_t i) const;

private:
    friend class Tape;
    GradSink(const Tape& tape, std::span<const std::size_t> inputs, std::vector<std::optional<Tensor>>& grads)
        : tape_(tape), inputs_(inputs), grads_(grads) {}
    const Tape& tape_;
    std::span<const std::size_t> inputs_;
    std::vector<std::optional<Tensor>>& grads_;
};

using BackwardFn = std::function<void(const Tensor& grad_out, GradSink& grads)>;

/// Gradients of trainable leaves, keyed by node id (ordered, for deterministic reductions).
using Gradients = std::map<std::size_t, Tensor>;

/// Define-by-run reverse-mode tape. Node ids are assigned in creation order, so
/// every input id precedes its consumer and a reverse sweep is a topological order.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Trainable leaf.
    Var parameter(Tensor value, std::string name = {});

    /// Records an op. When no input needs a gradient the result is returned off-tape.
    static Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
    static Var record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward);

    Gradients backward(const Var& loss) const;

    std::size_t node_count() const { return nodes_.size(); }
    const std::string& op_name(std::size_t id) const { return nodes_.at(id).op; }
    const std::vector<std::size_t>& inputs_of(std::size_t id) const { return nodes_.at(id).inputs; }
    const std::string& parameter_name(std::size_t id) const { return nodes_.at(id).name; }
    std::vector<std::size_t> parameter_ids() const;
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

private:
    friend class GradSink;
    struct Node {
        std::string op;
        std::string name;
        std::vector<std::size_t> inputs;
        std::shared_ptr<const Tensor> value;
        BackwardFn backward;
        bool trainable = false;
        bool requires_grad = false;
    };
    std::vector<Node> nodes_;
};

enum class Activation { gelu, relu };

// Elementwise ---------------------------------------------------------------
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var gelu(const Var& a);
Var relu(const Var& a);
Var activate(const Var& a, Activation act);

// Reductions ----------------------------------------------------------------
Var sum(const Var& a);
Var mean(const Var& a);

// Shape ---------------------------------------------------------------------
Var reshape(const Var& a, Shape shape);
/// Concatenation along the last axis; all leading dimensions must agree.
Var concat_last(std::span<const Var> parts);
Var slice_last(const Var& a, std::size_t begin, std::size_t count);

// Complex -------------------------------------------------------------------
Var to_complex(const Var& a);
Var real_part(const Var& a);
Var fft_axis(const Var& a, std::size_t axis, FftDirection dir);

// Linear maps ---------------------------------------------------------------
/// v[..., c_in] x W[c_in, c_out] + b[c_out], applied independently at every position.
Var pointwise_linear(const Var& v, const Var& w, const Var& b);
Var pointwise_linear(const Var& v, const Var& w);
/// 3x3 cross-correlation, zero padding 1. v[h, w, c_in], k[3, 3, c_in, c_out], optional b[c_out].
Var conv2d(const Var& v, const Var& k, const Var& b = {});
/// 3x3x3 cross-correlation, zero padding 1. v[d, h, w, c_in], k[3, 3, 3, c_in, c_out].
Var conv3d(const Var& v, const Var& k, const Var& b = {});

double gelu_value(double x);
double gelu_derivative(double x);

}  // namespace mifno
