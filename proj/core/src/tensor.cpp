#include "nw/tensor.hpp"
#include <algorithm>

#include <cmath>

#include "nw/common.hpp"
#include "nw/rng.hpp"

namespace nw {

int64_t Tensor::numel_of(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    check(d > 0, cat("tensor dimension must be positive, got ", shape_str(shape)));
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
  numel_ = numel_of(shape_);
  data_.assign(static_cast<size_t>(numel_), 0.0);
}

Tensor::Tensor(uninit_tag, std::vector<int64_t> shape) : shape_(std::move(shape)) {
  numel_ = numel_of(shape_);
  data_.resize(static_cast<size_t>(numel_));
}

Tensor Tensor::uninit(std::vector<int64_t> shape) {
  return Tensor(uninit_tag{}, std::move(shape));
}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<double> values)
    : shape_(std::move(shape)) {
  numel_ = numel_of(shape_);
  check(static_cast<int64_t>(values.size()) == numel_,
        cat("tensor data length ", values.size(), " does not match shape ",
            shape_str(shape_)));
  data_.assign(values.begin(), values.end());
}

Tensor Tensor::full(std::vector<int64_t> shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

Tensor Tensor::randn(std::vector<int64_t> shape, Rng& rng, double stddev) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = stddev * rng.normal();
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::fill(double v) { data_.assign(data_.size(), v); }

Tensor Tensor::reshaped(std::vector<int64_t> shape) const {
  check(numel_of(shape) == numel_,
        cat("reshape from ", shape_str(), " to ", shape_str(shape),
            " changes element count"));
  Tensor t = uninit(std::move(shape));
  std::copy(data_.begin(), data_.end(), t.data());
  return t;
}

std::string Tensor::shape_str(const std::vector<int64_t>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::string Tensor::shape_str() const { return shape_str(shape_); }

}  // namespace nw
