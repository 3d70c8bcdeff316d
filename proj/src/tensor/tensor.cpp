#include "mifno/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mifno/errors.hpp"

namespace mifno {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ')';
    return os.str();
}

Tensor::Tensor(Shape shape, DType dtype)
    : shape_(std::move(shape)), dtype_(dtype), size_(shape_size(shape_)),
      data_(size_ * (dtype == DType::complex ? 2 : 1), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), dtype_(DType::real), size_(shape_size(shape_)), data_(values.begin(), values.end()) {
    if (data_.size() != size_)
        throw ContractError("Tensor: " + std::to_string(data_.size()) + " values for shape " + shape_string(shape_));
}

Tensor::Tensor(Shape shape, const std::vector<cdouble>& values)
    : shape_(std::move(shape)), dtype_(DType::complex), size_(shape_size(shape_)) {
    if (values.size() != size_)
        throw ContractError("Tensor: " + std::to_string(values.size()) + " values for shape " + shape_string(shape_));
    data_.resize(2 * size_);
    std::copy(values.begin(), values.end(), cvalues().begin());
}

Tensor Tensor::full(Shape shape, double value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size())
        throw ContractError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(shape_));
    return shape_[axis];
}

std::span<double> Tensor::values() {
    if (is_complex()) throw ContractError("real view requested on a complex tensor");
    return data_;
}

std::span<const double> Tensor::values() const {
    if (is_complex()) throw ContractError("real view requested on a complex tensor");
    return data_;
}

std::span<cdouble> Tensor::cvalues() {
    if (!is_complex()) throw ContractError("complex view requested on a real tensor");
    return {reinterpret_cast<cdouble*>(data_.data()), size_};
}

std::span<const cdouble> Tensor::cvalues() const {
    if (!is_complex()) throw ContractError("complex view requested on a real tensor");
    return {reinterpret_cast<const cdouble*>(data_.data()), size_};
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
    if (index.size() != shape_.size())
        throw ContractError("index rank " + std::to_string(index.size()) + " for shape " + shape_string(shape_));
    std::size_t off = 0;
    std::size_t axis = 0;
    for (auto i : index) {
        if (i >= shape_[axis]) throw ContractError("index out of range for shape " + shape_string(shape_));
        off = off * shape_[axis] + i;
        ++axis;
    }
    return off;
}

double Tensor::item() const {
    if (size_ != 1 || is_complex()) throw ContractError("item() requires a real single-element tensor");
    return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const& {
    Tensor copy = *this;
    return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
    if (shape_size(shape) != size_)
        throw ContractError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    shape_ = std::move(shape);
    return std::move(*this);
}

Tensor Tensor::to_complex() const {
    if (is_complex()) return *this;
    Tensor out(shape_, DType::complex);
    auto dst = out.cvalues();
    for (std::size_t i = 0; i < size_; ++i) dst[i] = {data_[i], 0.0};
    return out;
}

Tensor Tensor::real_part() const {
    if (!is_complex()) return *this;
    Tensor out(shape_);
    auto src = cvalues();
    for (std::size_t i = 0; i < size_; ++i) out.data_[i] = src[i].real();
    return out;
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::check_finite(std::string_view where) const {
    if (all_finite()) return;
    const auto it = std::find_if(data_.begin(), data_.end(), [](double v) { return !std::isfinite(v); });
    const auto pos = static_cast<std::size_t>(it - data_.begin()) / (is_complex() ? 2 : 1);
    throw NumericalError(std::string(where) + ": non-finite value at flat index " + std::to_string(pos) +
                         " of tensor " + shape_string(shape_));
}

void Tensor::fill(double value) {
    if (is_complex()) {
        for (auto& z : cvalues()) z = {value, 0.0};
    } else {
        std::fill(data_.begin(), data_.end(), value);
    }
}

Tensor& Tensor::operator+=(const Tensor& other) {
    require_same_shape(*this, other, "operator+=");
    if (dtype_ != other.dtype_) throw ContractError("operator+=: dtype mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view op) {
    if (a.shape() != b.shape())
        throw ContractError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                            shape_string(b.shape()));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    if (a.dtype() != b.dtype()) throw ContractError("max_abs_diff: dtype mismatch");
    double m = 0.0;
    if (a.is_complex()) {
        auto x = a.cvalues();
        auto y = b.cvalues();
        for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    } else {
        auto x = a.values();
        auto y = b.values();
        for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    }
    return m;
}

double max_abs(const Tensor& a) {
    double m = 0.0;
    if (a.is_complex()) {
        for (auto z : a.cvalues()) m = std::max(m, std::abs(z));
    } else {
        for (auto v : a.values()) m = std::max(m, std::abs(v));
    }
    return m;
}

}  // namespace mifno
