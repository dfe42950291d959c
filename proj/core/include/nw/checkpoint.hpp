#pragma once

#include <string>

#include "nw/params.hpp"

namespace nw {

// Parameter checkpoint, format "NWCK":
//   magic "NWCK", version u32 LE, then per-entry records in name order:
//   name length u32, name bytes, rank u32, dims u32[], values f64[] LE.
// Running statistics are ordinary entries and round-trip with the weights.
void save_checkpoint(const ParamStore& params, const std::string& path);

// Overwrites values of an already initialized store. The file's name set
// and shapes must match the store exactly; magic, version and truncation
// problems are reported distinctly.
void load_checkpoint(ParamStore& params, const std::string& path);

}  // namespace nw
