#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mifno {

using Shape = std::vector<std::size_t>;
using cdouble = std::complex<double>;

/// 64-byte aligned storage. Vectorized reductions peel differently depending on
/// the address, so a fixed alignment keeps results identical across threads.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};
    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) {}
    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }
    template <class U>
    bool operator==(const AlignedAllocator<U>&) const { return true; }
};

enum class DType : std::uint8_t { real, complex };

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles or complex doubles.
///
/// Complex values are stored as interleaved (re, im) pairs so a complex tensor
/// can be viewed either as `std::complex<double>` elements or as raw doubles.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, DType dtype = DType::real);
    Tensor(Shape shape, std::vector<double> values);
    Tensor(Shape shape, const std::vector<cdouble>& values);

    static Tensor zeros(Shape shape, DType dtype = DType::real) { return Tensor(std::move(shape), dtype); }
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value) { return full({}, value); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    /// Number of logical elements (complex pairs count once).
    std::size_t size() const { return size_; }
    DType dtype() const { return dtype_; }
    bool is_complex() const { return dtype_ == DType::complex; }

    std::span<double> values();
    std::span<const double> values() const;
    std::span<cdouble> cvalues();
    std::span<const cdouble> cvalues() const;
    /// Raw storage: size() doubles for real, 2*size() for complex.
    std::span<double> raw() { return data_; }
    std::span<const double> raw() const { return data_; }

    double& operator[](std::size_t i) { return values()[i]; }
    double operator[](std::size_t i) const { return values()[i]; }

    std::size_t offset(std::initializer_list<std::size_t> index) const;
    double& at(std::initializer_list<std::size_t> index) { return values()[offset(index)]; }
    double at(std::initializer_list<std::size_t> index) const { return values()[offset(index)]; }

    double item() const;
    Tensor reshaped(Shape shape) const&;
    Tensor reshaped(Shape shape) &&;
    Tensor to_complex() const;
    Tensor real_part() const;

    bool all_finite() const;
    /// Checked mode: throws NumericalError naming `where` if any value is NaN/Inf.
    void check_finite(std::string_view where) const;

    void fill(double value);
    Tensor& operator+=(const Tensor& other);

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    Shape shape_;
    DType dtype_ = DType::real;
    std::size_t size_ = 1;
    std::vector<double, AlignedAllocator<double>> data_ = std::vector<double, AlignedAllocator<double>>(1, 0.0);
};

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view op);
double max_abs_diff(const Tensor& a, const Tensor& b);
double max_abs(const Tensor& a);

}  // namespace mifno
