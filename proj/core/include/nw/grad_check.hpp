#pragma once

#include <functional>
#include <map>
#include <string>

#include "nw/graph.hpp"

namespace nw {

// Finite-difference oracle for the reverse-mode engine.
//
// build_loss must construct the same deterministic forward pass on every
// call (dropout disabled, or driven by an Rng the closure reseeds itself)
// and return the scalar loss node. Non-deterministic builders are rejected:
// the loss is evaluated twice up front and must agree bit for bit.
struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  std::map<std::string, double> per_param;  // max relative error per parameter
};

GradCheckReport grad_check(ParamStore& params,
                           const std::function<int(Graph&)>& build_loss,
                           double h = 1e-3, int coords_per_param = 4,
                           uint64_t coord_seed = 0x5eed);

}  // namespace nw
