#include "nw/pgm.hpp"

#include <cmath>
#include <fstream>

#include "nw/common.hpp"

namespace nw {

void export_pgm(const Tensor& image, const std::string& path) {
  int64_t h = 0, w = 0;
  if (image.rank() == 2) {
    h = image.dim(0);
    w = image.dim(1);
  } else if (image.rank() == 3 && image.dim(0) == 1) {
    h = image.dim(1);
    w = image.dim(2);
  } else {
    throw Error(cat("export_pgm: expected [H,W] or [1,H,W], got ", image.shape_str()));
  }
  for (int64_t i = 0; i < image.numel(); ++i)
    check(image[i] >= 0.0 && image[i] <= 1.0,
          cat("export_pgm: pixel ", i, " = ", image[i], " outside [0,1]"));

  std::ofstream os(path, std::ios::binary);
  check(os.good(), cat("export_pgm: cannot open '", path, "'"));
  os << "P5\n" << w << " " << h << "\n255\n";
  for (int64_t i = 0; i < image.numel(); ++i) {
    // round half up: 0.5 -> 128
    const auto byte = static_cast<unsigned char>(std::floor(255.0 * image[i] + 0.5));
    os.put(static_cast<char>(byte));
  }
  check(os.good(), cat("export_pgm: write failed for '", path, "'"));
}

}  // namespace nw
