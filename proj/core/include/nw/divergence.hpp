#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nw {

// Kullback-Leibler divergence sum_i p_i * ln(p~_i / q~_i) in nats, where
// p~, q~ are floored at eps before the logs. Inputs must be equal-length
// probability vectors.
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     double eps = 1e-12);

// Symmetrized variant (KL(p||q) + KL(q||p)) / 2.
double sym_divergence(std::span<const double> p, std::span<const double> q,
                      double eps = 1e-12);

// Per-sample instability measurement: the divergence value plus the two
// probability vectors it was computed from.
struct DivergenceRecord {
  int64_t sample_index = -1;
  double div = 0.0;
  std::vector<double> p_original;
  std::vector<double> p_neighbor;
};

struct MaskVector {
  std::vector<uint8_t> m;  // 1 keeps the sample, 0 masks its gradient
  double threshold = 0.0;
  int64_t survivors = 0;
};

// m_i = 1 iff div_i < T strictly; equality masks the sample out.
MaskVector fixed_threshold_mask(const std::vector<DivergenceRecord>& records,
                                double threshold);

// Arithmetic mean of the batch divergences. Accumulated in extended
// precision and rounded once, so an exact-mean batch thresholds its own
// members out (0.3 is not < 0.3).
double batch_threshold(const std::vector<DivergenceRecord>& records);

}  // namespace nw
