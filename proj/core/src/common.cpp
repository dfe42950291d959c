#include "nw/common.hpp"

#include <charconv>
#include <cstring>

namespace nw {

namespace {

template <class T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T read_le(std::istream& is, const char* what) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw Error(cat("truncated file while reading ", what));
  T v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_u32le(std::ostream& os, uint32_t v) { write_le(os, v); }
void write_u64le(std::ostream& os, uint64_t v) { write_le(os, v); }

void write_f64le(std::ostream& os, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_le(os, bits);
}

uint32_t read_u32le(std::istream& is, const char* what) { return read_le<uint32_t>(is, what); }
uint64_t read_u64le(std::istream& is, const char* what) { return read_le<uint64_t>(is, what); }

double read_f64le(std::istream& is, const char* what) {
  uint64_t bits = read_le<uint64_t>(is, what);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace nw
