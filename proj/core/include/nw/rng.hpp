#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace nw {

// Deterministic random stream. The engine is std::mt19937_64 (bit-stable by
// the standard); the distributions are hand-rolled because the standard
// library's are implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; consumes exactly two uniforms per call.
  double normal();

  // Uniform integer in [0, n). Modulo bias is < n / 2^64, irrelevant here.
  int64_t uniform_int(int64_t n);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(static_cast<int64_t>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Child seed for an independent named stream.
  static uint64_t derive(uint64_t master, std::string_view tag);

 private:
  std::mt19937_64 eng_;
};

}  // namespace nw
