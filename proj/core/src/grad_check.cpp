#include "nw/grad_check.hpp"

#include <cmath>
#include <cstring>
#include <vector>

#include "nw/common.hpp"
#include "nw/rng.hpp"

namespace nw {

namespace {

// Every evaluation gets a freshly seeded dropout stream, so any dropout in
// the network draws the same mask on every call.
constexpr uint64_t kDropoutSeed = 0xd809;

double eval_loss(const std::function<int(Graph&)>& build) {
  Rng drop(kDropoutSeed);
  Graph g(Mode::kTrain, &drop);
  int loss = build(g);
  return g.scalar(loss);
}

}  // namespace

GradCheckReport grad_check(ParamStore& params,
                           const std::function<int(Graph&)>& build_loss,
                           double h, int coords_per_param, uint64_t coord_seed) {
  check(h > 0.0, "grad_check: step size must be positive");

  const double l0 = eval_loss(build_loss);
  const double l1 = eval_loss(build_loss);
  if (std::memcmp(&l0, &l1, sizeof(double)) != 0)
    throw Error(cat("grad_check: forward is not deterministic (", l0, " vs ",
                    l1, "); seed the dropout masks or disable them"));

  // analytic gradients
  params.zero_grads();
  {
    Rng drop(kDropoutSeed);
    Graph g(Mode::kTrain, &drop);
    int loss = build_loss(g);
    g.backward(loss);
  }
  std::map<std::string, Tensor> analytic;
  for (auto& [name, p] : params)
    if (p.trainable) analytic.emplace(name, p.grad);
  params.zero_grads();

  GradCheckReport report;
  Rng rng(coord_seed);
  for (auto& [name, p] : params) {
    if (!p.trainable) continue;
    const int64_t n = p.value.numel();
    double param_max = 0.0;
    const int samples = static_cast<int>(
        std::min<int64_t>(n, coords_per_param));
    for (int s = 0; s < samples; ++s) {
      const int64_t i = (samples == static_cast<int>(n))
                            ? s
                            : rng.uniform_int(n);
      const double orig = p.value[i];
      p.value[i] = orig + h;
      const double lp = eval_loss(build_loss);
      p.value[i] = orig - h;
      const double lm = eval_loss(build_loss);
      p.value[i] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = analytic.at(name)[i];
      const double rel = std::abs(an - fd) / std::max(1.0, std::abs(fd));
      param_max = std::max(param_max, rel);
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = name;
        report.worst_index = i;
      }
    }
    report.per_param[name] = param_max;
  }
  return report;
}

}  // namespace nw
