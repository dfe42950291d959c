#pragma once

#include "nw/params.hpp"

namespace nw {

// Momentum SGD: v <- momentum*v + (grad + weight_decay*w); w <- w - lr*v.
// Gradient buffers are cleared afterwards. Throws if any gradient is
// non-finite (the step is rejected, parameters untouched).
void sgd_step(ParamStore& params, double lr, double momentum = 0.0,
              double weight_decay = 0.0);

// RMSprop with zero momentum and zero weight decay:
// avg <- rho*avg + (1-rho)*grad^2; w <- w - lr * grad / sqrt(avg + eps).
void rmsprop_step(ParamStore& params, double lr, double rho = 0.99,
                  double eps = 1e-8);

// Clamps every trainable value into [-c, c]. Idempotent.
void clip_parameters(ParamStore& params, double c);

}  // namespace nw
