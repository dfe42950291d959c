#include "nw/rng.hpp"

#include <cmath>

#include "nw/common.hpp"

namespace nw {

double Rng::normal() {
  // Box-Muller. u1 is kept away from 0 so the log is finite.
  double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int64_t Rng::uniform_int(int64_t n) {
  check(n > 0, "uniform_int requires n > 0");
  return static_cast<int64_t>(eng_() % static_cast<uint64_t>(n));
}

uint64_t Rng::derive(uint64_t master, std::string_view tag) {
  uint64_t x = master ^ fnv1a64(tag);
  // splitmix64 finalizer decorrelates nearby masters and tags
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace nw
