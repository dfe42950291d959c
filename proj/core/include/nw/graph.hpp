#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nw/params.hpp"
#include "nw/tensor.hpp"

namespace nw {

class Rng;

enum class Mode { kTrain, kEval };

// Define-by-run reverse-mode tape. Ops (see ops.hpp) execute their forward
// kernel immediately and append a node holding the output value, the input
// node ids and a backward closure. Node ids increase in creation order, so
// the creation order is already a topological order and backward() is a
// single reverse sweep that visits each node exactly once.
//
// Eval-mode graphs run the same kernels with inference semantics (dropout is
// the identity, batch-norm reads running statistics) and refuse backward().
class Graph {
 public:
  explicit Graph(Mode mode, Rng* dropout_rng = nullptr)
      : mode_(mode), dropout_rng_(dropout_rng) {}

  Mode mode() const { return mode_; }
  bool training() const { return mode_ == Mode::kTrain; }
  Rng* dropout_rng() const { return dropout_rng_; }

  // Leaf that never receives gradient.
  int input(Tensor v);
  // Leaf bound to a ParamStore entry; backward() adds into its grad buffer.
  int param(ParamStore& store, const std::string& name);

  const Tensor& val(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  double scalar(int id) const;

  // Accumulates dLoss/dParam into every bound ParamStore entry. May be
  // called repeatedly; contributions add.
  void backward(int loss_id);

  // --- below: machinery for op implementations ---
  struct Node {
    Tensor value;
    Tensor grad;  // allocated during backward only
    std::vector<int> inputs;
    std::function<void(Graph&, int)> backward_fn;  // null for leaves
    ParamStore* store = nullptr;                   // param leaves only
    std::string param_name;
    bool needs_grad = false;
  };

  int emit(Tensor value, std::vector<int> inputs,
           std::function<void(Graph&, int)> backward_fn);
  Node& node(int id) { return nodes_[static_cast<size_t>(id)]; }
  Tensor& grad_of(int id);
  bool needs_grad(int id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }
  size_t node_count() const { return nodes_.size(); }

 private:
  Mode mode_;
  Rng* dropout_rng_;
  std::vector<Node> nodes_;
};

}  // namespace nw
