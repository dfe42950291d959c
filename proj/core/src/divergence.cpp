#include "nw/divergence.hpp"

#include <cmath>

#include "nw/common.hpp"

namespace nw {

double kl_divergence(std::span<const double> p, std::span<const double> q,
                     double eps) {
  check(p.size() == q.size(), cat("kl_divergence: length mismatch ", p.size(),
                                  " vs ", q.size()));
  double s = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double pi = std::max(p[i], eps);
    const double qi = std::max(q[i], eps);
    s += p[i] * (std::log(pi) - std::log(qi));
  }
  return s;
}

double sym_divergence(std::span<const double> p, std::span<const double> q,
                      double eps) {
  return 0.5 * (kl_divergence(p, q, eps) + kl_divergence(q, p, eps));
}

MaskVector fixed_threshold_mask(const std::vector<DivergenceRecord>& records,
                                double threshold) {
  check(threshold > 0.0,
        cat("fixed_threshold_mask: threshold must be positive, got ", threshold));
  MaskVector mv;
  mv.threshold = threshold;
  mv.m.resize(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    const bool keep = records[i].div < threshold;
    mv.m[i] = keep ? 1 : 0;
    mv.survivors += keep;
  }
  return mv;
}

double batch_threshold(const std::vector<DivergenceRecord>& records) {
  check(!records.empty(), "batch_threshold: empty batch");
  long double acc = 0.0L;
  for (const auto& r : records) acc += static_cast<long double>(r.div);
  return static_cast<double>(acc / static_cast<long double>(records.size()));
}

}  // namespace nw
