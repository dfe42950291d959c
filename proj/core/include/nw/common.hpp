#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nw {

// Every recoverable failure in this library is reported as nw::Error with a
// message naming the offending operation and values.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

template <class... Ts>
std::string cat(Ts&&... xs) {
  std::ostringstream os;
  (os << ... << xs);
  return os.str();
}

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

// FNV-1a, used for payload checksums and seed derivation from string tags.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

// Little-endian binary primitives for the NWCK / NWDS file formats.
void write_u32le(std::ostream& os, uint32_t v);
void write_u64le(std::ostream& os, uint64_t v);
void write_f64le(std::ostream& os, double v);
uint32_t read_u32le(std::istream& is, const char* what);
uint64_t read_u64le(std::istream& is, const char* what);
double read_f64le(std::istream& is, const char* what);

// Shortest round-trip decimal form, used by the CSV writers.
std::string format_double(double v);

}  // namespace nw
