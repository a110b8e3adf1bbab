#pragma once

#include <string>

#include "pcdvq/transforms.hpp"

namespace pcdvq {

// Raw little-endian f32 values in row-major order; shape lives in a
// "<path>.meta" text sidecar with "rows:" and "cols:" lines.
WeightMatrix load_tensor(const std::string& path);
void save_tensor(const std::string& path, const WeightMatrix& w);

}  // namespace pcdvq
