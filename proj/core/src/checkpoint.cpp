#include "nw/checkpoint.hpp"

#include <fstream>

#include "nw/common.hpp"

namespace nw {

namespace {
constexpr char kMagic[4] = {'N', 'W', 'C', 'K'};
constexpr uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const ParamStore& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  check(os.good(), cat("cannot open '", path, "' for writing"));
  os.write(kMagic, 4);
  write_u32le(os, kVersion);
  for (const auto& [name, p] : params) {
    write_u32le(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32le(os, static_cast<uint32_t>(p.value.rank()));
    for (int64_t i = 0; i < p.value.rank(); ++i)
      write_u32le(os, static_cast<uint32_t>(p.value.dim(i)));
    for (int64_t i = 0; i < p.value.numel(); ++i) write_f64le(os, p.value[i]);
  }
  check(os.good(), cat("write failed for '", path, "'"));
}

void load_checkpoint(ParamStore& params, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  check(is.good(), cat("cannot open checkpoint '", path, "'"));
  char magic[4];
  is.read(magic, 4);
  check(is.good() && std::equal(magic, magic + 4, kMagic),
        cat("'", path, "' is not a checkpoint file (bad magic)"));
  const uint32_t ver = read_u32le(is, "checkpoint version");
  check(ver == kVersion, cat("unsupported checkpoint version ", ver,
                             " in '", path, "' (expected ", kVersion, ")"));

  size_t loaded = 0;
  while (true) {
    is.peek();
    if (is.eof()) break;
    const uint32_t name_len = read_u32le(is, "parameter name length");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    check(is.good(), cat("truncated checkpoint '", path, "' in parameter name"));
    const uint32_t rank = read_u32le(is, "parameter rank");
    std::vector<int64_t> dims(rank);
    int64_t numel = 1;
    for (uint32_t i = 0; i < rank; ++i) {
      dims[i] = read_u32le(is, "parameter dimension");
      numel *= dims[i];
    }
    check(params.has(name), cat("checkpoint '", path, "' contains unknown parameter '",
                                name, "'"));
    Param& p = params.at(name);
    check(p.value.shape() == dims,
          cat("checkpoint shape ", Tensor::shape_str(dims), " for '", name,
              "' does not match model shape ", p.value.shape_str()));
    for (int64_t i = 0; i < numel; ++i)
      p.value[i] = read_f64le(is, "parameter values");
    ++loaded;
  }
  check(loaded == params.size(),
        cat("checkpoint '", path, "' holds ", loaded, " parameters, model has ",
            params.size()));
}

}  // namespace nw
