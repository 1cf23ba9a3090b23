#include "lateral.hpp"

#include <algorithm>

namespace periscat::detail {

LateralIndex::LateralIndex(const ModeSet& modes) {
  for (const Mode& m : modes) {
    j1.push_back(m.index.j1);
    j2.push_back(m.index.j2);
  }
  for (auto* v : {&j1, &j2}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  for (const Mode& m : modes) {
    pos1.push_back(static_cast<int>(std::lower_bound(j1.begin(), j1.end(), m.index.j1) - j1.begin()));
    pos2.push_back(static_cast<int>(std::lower_bound(j2.begin(), j2.end(), m.index.j2) - j2.begin()));
  }
}

std::vector<Vec3c> lateral_transform(const WaveParameters& params, const VoxelGrid& grid, const VectorField& w,
                                     const LateralIndex& index) {
  const int n1 = grid.n[0], n2 = grid.n[1], n3 = grid.n[2];
  const int nj1 = static_cast<int>(index.j1.size()), nj2 = static_cast<int>(index.j2.size());

  std::vector<Vec3c> T(static_cast<std::size_t>(nj1) * n2 * n3, Vec3c::Zero());
  std::vector<Complex> e(std::max(n1, n2));
  for (int a = 0; a < nj1; ++a) {
    for (int i = 0; i < n1; ++i) e[i] = std::exp(-kI * (params.alpha1 + index.j1[a]) * grid.center(i, 0, 0)[0]);
    for (int i3 = 0; i3 < n3; ++i3)
      for (int i2 = 0; i2 < n2; ++i2) {
        Vec3c acc = Vec3c::Zero();
        const std::size_t base = grid.index(0, i2, i3);
        for (int i1 = 0; i1 < n1; ++i1) acc += e[i1] * w[base + i1];
        T[(static_cast<std::size_t>(a) * n3 + i3) * n2 + i2] = acc;
      }
  }
  std::vector<Vec3c> U(static_cast<std::size_t>(nj1) * nj2 * n3, Vec3c::Zero());
  for (int b = 0; b < nj2; ++b) {
    for (int i = 0; i < n2; ++i) e[i] = std::exp(-kI * (params.alpha2 + index.j2[b]) * grid.center(0, i, 0)[1]);
    for (int a = 0; a < nj1; ++a)
      for (int i3 = 0; i3 < n3; ++i3) {
        Vec3c acc = Vec3c::Zero();
        const Vec3c* t = &T[(static_cast<std::size_t>(a) * n3 + i3) * n2];
        for (int i2 = 0; i2 < n2; ++i2) acc += e[i2] * t[i2];
        U[(static_cast<std::size_t>(a) * nj2 + b) * n3 + i3] = acc;
      }
  }
  return U;
}

void lateral_synthesis(const WaveParameters& params, const LateralIndex& index, const std::vector<Vec3c>& X,
                       const std::vector<double>& x1, const std::vector<double>& x2, std::vector<Vec3c>& out) {
  const int n1 = static_cast<int>(x1.size()), n2 = static_cast<int>(x2.size());
  const int nj1 = static_cast<int>(index.j1.size()), nj2 = static_cast<int>(index.j2.size());
  std::vector<Complex> e2(static_cast<std::size_t>(nj2) * n2);
  for (int b = 0; b < nj2; ++b)
    for (int i = 0; i < n2; ++i) e2[static_cast<std::size_t>(b) * n2 + i] = std::exp(kI * (params.alpha2 + index.j2[b]) * x2[i]);
  std::vector<Complex> e1(static_cast<std::size_t>(nj1) * n1);
  for (int a = 0; a < nj1; ++a)
    for (int i = 0; i < n1; ++i) e1[static_cast<std::size_t>(a) * n1 + i] = std::exp(kI * (params.alpha1 + index.j1[a]) * x1[i]);

  std::vector<Vec3c> Y(static_cast<std::size_t>(nj1) * n2, Vec3c::Zero());
  for (int a = 0; a < nj1; ++a)
    for (int b = 0; b < nj2; ++b) {
      const Vec3c& x = X[static_cast<std::size_t>(a) * nj2 + b];
      if (x.isZero(0.0)) continue;
      for (int i2 = 0; i2 < n2; ++i2) Y[static_cast<std::size_t>(a) * n2 + i2] += e2[static_cast<std::size_t>(b) * n2 + i2] * x;
    }
  out.assign(static_cast<std::size_t>(n1) * n2, Vec3c::Zero());
  for (int i2 = 0; i2 < n2; ++i2)
    for (int a = 0; a < nj1; ++a) {
      const Vec3c& y = Y[static_cast<std::size_t>(a) * n2 + i2];
      for (int i1 = 0; i1 < n1; ++i1) out[static_cast<std::size_t>(i2) * n1 + i1] += e1[static_cast<std::size_t>(a) * n1 + i1] * y;
    }
}

}  // namespace periscat::detail
