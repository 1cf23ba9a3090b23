#pragma once

#include <vector>

#include "periscat/forward.hpp"

namespace periscat::detail {

// Sorted distinct j1 and j2 of a mode set, with each mode's position in them.
struct LateralIndex {
  std::vector<int> j1, j2;
  std::vector<int> pos1, pos2;  // per mode

  explicit LateralIndex(const ModeSet& modes);
};

// U[(a * n_j2 + b) * n3 + i3] = sum_{i1, i2} exp(-i(alpha_1 y1 + alpha_2 y2)) w(i1, i2, i3)
// for alpha = alpha + (j1[a], j2[b]).
std::vector<Vec3c> lateral_transform(const WaveParameters& params, const VoxelGrid& grid, const VectorField& w,
                                     const LateralIndex& index);

// out[i1 + n1 i2] = sum_{a, b} exp(i(alpha_1 x1[i1] + alpha_2 x2[i2])) X[a * n_j2 + b].
void lateral_synthesis(const WaveParameters& params, const LateralIndex& index, const std::vector<Vec3c>& X,
                       const std::vector<double>& x1, const std::vector<double>& x2, std::vector<Vec3c>& out);

}  // namespace periscat::detail
