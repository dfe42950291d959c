#pragma once

#include <functional>
#include <map>
#include <string>

#include "nw/tensor.hpp"

namespace nw {

// One named model quantity: a trainable weight, or a running statistic
// (requires_grad = false). Trainable entries carry a same-shape gradient
// accumulator and a lazily sized optimizer slot (momentum buffer for SGD,
// squared-gradient average for RMSprop).
struct Param {
  Tensor value;
  Tensor grad;
  Tensor opt_state;
  bool trainable = true;
};

// Ordered by name so that every iteration (optimizer steps, serialization)
// is deterministic.
class ParamStore {
 public:
  Tensor& create(const std::string& name, Tensor init, bool trainable = true);
  bool has(const std::string& name) const { return items_.count(name) != 0; }
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;

  void zero_grads();
  // Copies values (not grads / optimizer state) from another store; shapes
  // and the name sets must match exactly.
  void load_values_from(const ParamStore& other);

  size_t size() const { return items_.size(); }
  int64_t total_parameters(bool trainable_only = true) const;

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  void for_each(const std::function<void(const std::string&, Param&)>& fn);

  // Bitwise equality of values, used by the determinism tests.
  bool values_equal(const ParamStore& other) const;

 private:
  std::map<std::string, Param> items_;
};

}  // namespace nw
