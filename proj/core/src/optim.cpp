#include "nw/optim.hpp"

#include <algorithm>
#include <cmath>

#include "nw/common.hpp"

namespace nw {

namespace {

void reject_nonfinite(const ParamStore& params, const char* step) {
  for (const auto& [name, p] : params) {
    if (!p.trainable) continue;
    for (int64_t i = 0; i < p.grad.numel(); ++i)
      if (!std::isfinite(p.grad[i]))
        throw Error(cat(step, ": non-finite gradient in '", name,
                        "' at index ", i, ", step rejected"));
  }
}

}  // namespace

void sgd_step(ParamStore& params, double lr, double momentum, double weight_decay) {
  check(lr > 0.0, cat("sgd_step: learning rate must be positive, got ", lr));
  reject_nonfinite(params, "sgd_step");
  for (auto& [name, p] : params) {
    if (!p.trainable) continue;
    if (p.opt_state.numel() == 0) p.opt_state = Tensor::zeros(p.value.shape());
    for (int64_t i = 0; i < p.value.numel(); ++i) {
      const double g = p.grad[i] + weight_decay * p.value[i];
      p.opt_state[i] = momentum * p.opt_state[i] + g;
      p.value[i] -= lr * p.opt_state[i];
    }
    p.grad.fill(0.0);
  }
}

void rmsprop_step(ParamStore& params, double lr, double rho, double eps) {
  check(lr > 0.0, cat("rmsprop_step: learning rate must be positive, got ", lr));
  reject_nonfinite(params, "rmsprop_step");
  for (auto& [name, p] : params) {
    if (!p.trainable) continue;
    if (p.opt_state.numel() == 0) p.opt_state = Tensor::zeros(p.value.shape());
    for (int64_t i = 0; i < p.value.numel(); ++i) {
      const double g = p.grad[i];
      p.opt_state[i] = rho * p.opt_state[i] + (1.0 - rho) * g * g;
      p.value[i] -= lr * g / std::sqrt(p.opt_state[i] + eps);
    }
    p.grad.fill(0.0);
  }
}

void clip_parameters(ParamStore& params, double c) {
  check(c > 0.0, cat("clip_parameters: bound must be positive, got ", c));
  for (auto& [name, p] : params) {
    if (!p.trainable) continue;
    for (int64_t i = 0; i < p.value.numel(); ++i)
      p.value[i] = std::clamp(p.value[i], -c, c);
  }
}

}  // namespace nw
