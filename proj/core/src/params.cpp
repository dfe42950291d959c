#include "nw/params.hpp"

#include <cstring>

#include "nw/common.hpp"

namespace nw {

Tensor& ParamStore::create(const std::string& name, Tensor init, bool trainable) {
  check(!name.empty(), "parameter name must not be empty");
  check(items_.count(name) == 0, cat("parameter '", name, "' already exists"));
  Param p;
  p.value = std::move(init);
  p.value.requires_grad = trainable;
  p.trainable = trainable;
  if (trainable) p.grad = Tensor::zeros(p.value.shape());
  auto [it, ok] = items_.emplace(name, std::move(p));
  (void)ok;
  return it->second.value;
}

Param& ParamStore::at(const std::string& name) {
  auto it = items_.find(name);
  check(it != items_.end(), cat("unknown parameter '", name, "'"));
  return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = items_.find(name);
  check(it != items_.end(), cat("unknown parameter '", name, "'"));
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [name, p] : items_)
    if (p.trainable) p.grad.fill(0.0);
}

void ParamStore::load_values_from(const ParamStore& other) {
  check(items_.size() == other.items_.size(),
        cat("store size mismatch: ", items_.size(), " vs ", other.items_.size()));
  for (auto& [name, p] : items_) {
    const Param& src = other.at(name);
    check(src.value.same_shape(p.value),
          cat("shape mismatch for '", name, "': ", p.value.shape_str(), " vs ",
              src.value.shape_str()));
    p.value = src.value;
    p.value.requires_grad = p.trainable;
  }
}

int64_t ParamStore::total_parameters(bool trainable_only) const {
  int64_t n = 0;
  for (const auto& [name, p] : items_)
    if (!trainable_only || p.trainable) n += p.value.numel();
  return n;
}

void ParamStore::for_each(const std::function<void(const std::string&, Param&)>& fn) {
  for (auto& [name, p] : items_) fn(name, p);
}

bool ParamStore::values_equal(const ParamStore& other) const {
  if (items_.size() != other.items_.size()) return false;
  auto it = items_.begin();
  auto jt = other.items_.begin();
  for (; it != items_.end(); ++it, ++jt) {
    if (it->first != jt->first) return false;
    const Tensor& a = it->second.value;
    const Tensor& b = jt->second.value;
    if (!a.same_shape(b)) return false;
    for (int64_t i = 0; i < a.numel(); ++i) {
      // bitwise comparison: distinguishes -0.0 and catches NaN drift
      if (std::memcmp(&a.data()[i], &b.data()[i], sizeof(double)) != 0) return false;
    }
  }
  return true;
}

}  // namespace nw
