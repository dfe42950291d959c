#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace nw {

class Rng;

namespace detail {
// std::vector that skips value-initialization on resize; activation buffers
// are fully overwritten by the kernels, zeroing them first is pure waste.
template <class T, class A = std::allocator<T>>
struct uninit_allocator : public A {
  template <class U>
  struct rebind {
    using other = uninit_allocator<U, typename std::allocator_traits<A>::template rebind_alloc<U>>;
  };
  using A::A;
  template <class U>
  void construct(U* ptr) noexcept(std::is_nothrow_default_constructible_v<U>) {
    ::new (static_cast<void*>(ptr)) U;
  }
  template <class U, class... Args>
  void construct(U* ptr, Args&&... args) {
    std::allocator_traits<A>::construct(static_cast<A&>(*this), ptr,
                                        std::forward<Args>(args)...);
  }
};
using buffer = std::vector<double, uninit_allocator<double>>;
}  // namespace detail

// Dense row-major 64-bit float array with shape metadata. All model state,
// images and activations in this library are Tensors.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape);  // zero-filled
  Tensor(std::vector<int64_t> shape, std::vector<double> values);

  static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }
  // Allocated but not cleared; caller must write every element.
  static Tensor uninit(std::vector<int64_t> shape);
  static Tensor full(std::vector<int64_t> shape, double v);
  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor randn(std::vector<int64_t> shape, Rng& rng, double stddev = 1.0);

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  int64_t dim(int64_t i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return numel_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;
  void fill(double v);

  // Reinterpret with a new shape of identical element count.
  Tensor reshaped(std::vector<int64_t> shape) const;

  std::string shape_str() const;
  static std::string shape_str(const std::vector<int64_t>& shape);
  static int64_t numel_of(const std::vector<int64_t>& shape);

  bool requires_grad = false;

 private:
  struct uninit_tag {};
  Tensor(uninit_tag, std::vector<int64_t> shape);

  std::vector<int64_t> shape_;
  detail::buffer data_;
  int64_t numel_ = 0;
};

}  // namespace nw
