#include "nw/graph.hpp"

#include "nw/common.hpp"

namespace nw {

int Graph::input(Tensor v) {
  Node n;
  n.value = std::move(v);
  n.needs_grad = false;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Graph::param(ParamStore& store, const std::string& name) {
  Param& p = store.at(name);
  Node n;
  n.value = p.value;
  n.store = &store;
  n.param_name = name;
  n.needs_grad = training() && p.trainable;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

double Graph::scalar(int id) const {
  const Tensor& t = val(id);
  check(t.numel() == 1, cat("expected scalar node, got shape ", t.shape_str()));
  return t[0];
}

int Graph::emit(Tensor value, std::vector<int> inputs,
                std::function<void(Graph&, int)> backward_fn) {
  Node n;
  n.value = std::move(value);
  n.inputs = std::move(inputs);
  for (int i : n.inputs)
    if (nodes_[static_cast<size_t>(i)].needs_grad) n.needs_grad = true;
  if (n.needs_grad) n.backward_fn = std::move(backward_fn);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor& Graph::grad_of(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.numel() == 0) n.grad = Tensor::zeros(n.value.shape());
  return n.grad;
}

void Graph::backward(int loss_id) {
  check(training(), "backward on an eval-mode graph is not allowed");
  check(loss_id >= 0 && static_cast<size_t>(loss_id) < nodes_.size(),
        "backward: invalid node id");
  const Tensor& loss = val(loss_id);
  check(loss.numel() == 1,
        cat("backward requires a scalar loss, got shape ", loss.shape_str()));

  // Reset per-node grads from any previous sweep; ParamStore accumulators
  // are deliberately left alone so repeated calls add up.
  for (auto& n : nodes_) n.grad = Tensor();
  grad_of(loss_id)[0] = 1.0;

  for (int id = loss_id; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.needs_grad || n.grad.numel() == 0) continue;
    if (n.backward_fn) n.backward_fn(*this, id);
    if (n.store != nullptr) {
      Tensor& acc = n.store->at(n.param_name).grad;
      for (int64_t i = 0; i < acc.numel(); ++i) acc[i] += n.grad[i];
    }
  }
}

}  // namespace nw
