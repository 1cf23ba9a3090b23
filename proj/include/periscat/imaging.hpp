#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "periscat/forward.hpp"
#include "periscat/green.hpp"
#include "periscat/modal.hpp"
#include "periscat/scene.hpp"

namespace periscat {

/// Cell-centered sampling points over a box, x-fastest.
struct SamplingGrid {
  Box box;
  std::array<int, 3> n{40, 40, 20};

  SamplingGrid() = default;
  SamplingGrid(const Box& b, const std::array<int, 3>& dims);

  /// (-pi, pi)^2 x (-h, h).
  static SamplingGrid domain(const WaveParameters& params, const std::array<int, 3>& dims = {40, 40, 20});

  std::size_t size() const { return static_cast<std::size_t>(n[0]) * n[1] * n[2]; }
  std::size_t index(int i1, int i2, int i3) const {
    return static_cast<std::size_t>(i1) + static_cast<std::size_t>(n[0]) * (i2 + static_cast<std::size_t>(n[1]) * i3);
  }
  Vec3 spacing() const;
  Vec3 point(int i1, int i2, int i3) const;
  Vec3 point(std::size_t idx) const;
  std::vector<double> axis(int a) const;
};

enum class FunctionalKind { New, Osm, TheoremRhs };

std::string to_string(FunctionalKind kind);

struct ImagingResult {
  SamplingGrid grid;
  std::vector<double> values;
  double p = 3.0;
  FunctionalKind kind = FunctionalKind::New;
  std::size_t mode_count = 0;

  double max() const;
  std::size_t argmax() const;
};

/// W and V of one mode, indexed by side_slot.
struct ModeWeight {
  std::array<Mat3c, 2> W;
  std::array<Vec3c, 2> V;
};

/// W+ = (h+ - 2 Re(beta) g+)^*, V+ = g+^* (alpha_1, alpha_2, beta),
/// W- = (h- + 2 Re(beta) g-)^*, V- = g-^* (alpha_1, alpha_2, -beta).
std::vector<ModeWeight> mode_weights(const WaveParameters& params, const ModeSet& modes, const Vec3& z);

/// I(z) = sum_l |sum_j (W+ u+ + u+_3 V+ - W- u- - u-_3 V-)|^p over every
/// mode of `modes`; each must be present in U (ModeMismatchError otherwise).
/// Evaluated by separable lateral sums, level by level.
ImagingResult imaging_functional(const RayleighDataMatrix& U, const SamplingGrid& grid, const WaveParameters& params,
                                 const ModeSet& modes, double p = 3.0);

/// Same functional at one point, straight from mode_weights.
double imaging_functional_at(const RayleighDataMatrix& U, const WaveParameters& params, const ModeSet& modes,
                             const Vec3& z, double p = 3.0);

/// sum_l |(k^2 / 2 pi^2) int_D F(z, y)(eps - I) E(y, l) dy|^p by the midpoint
/// rule on the voxel grid.
double theorem_rhs(const WaveParameters& params, const VoxelGrid& grid, const std::vector<Mat3>& contrast,
                   const std::vector<VectorField>& fields, const Vec3& z, double p = 3.0);
ImagingResult theorem_rhs_field(const WaveParameters& params, const VoxelGrid& grid,
                                const std::vector<Mat3>& contrast, const std::vector<VectorField>& fields,
                                const SamplingGrid& sampling, double p = 3.0);

/// Orthogonality sampling from Rayleigh data:
/// sum_l |4 pi^2 sum_j sum_+- (u_j^+-.q) conj(r_j^+-(z)) exp(-2 Im(beta_j)(rho - h))|^p,
/// i.e. the surface integral over x3 = +-rho of (u.q) conj(Phi(x, z)).
ImagingResult osm_functional(const RayleighDataMatrix& U, const SamplingGrid& grid, const WaveParameters& params,
                             const Vec3c& q = Vec3c(1.0, 1.0, 1.0), double rho = 1.5, double p = 3.0);

/// Direct rectangle-rule evaluation of the same surface integral from
/// traces: traces[l] holds the planes x3 = +rho and x3 = -rho.
double osm_functional_direct(const std::vector<std::array<TraceSamples, 2>>& traces, const GreenKernel& kernel,
                             const Vec3& z, const Vec3c& q = Vec3c(1.0, 1.0, 1.0), double p = 3.0);

using Mask = std::vector<std::uint8_t>;

/// values >= fraction * max. An all-zero field yields an empty mask and a warning.
Mask isosurface_mask(const ImagingResult& field, double fraction = 0.6);

/// Grid points inside the scatterer.
Mask rasterize(const PermittivityModel& model, const SamplingGrid& grid);

struct Component {
  std::vector<std::size_t> cells;
  Vec3 centroid = Vec3::Zero();
};

/// Face-connected components, largest first (ties by lowest cell index).
std::vector<Component> connected_components(const Mask& mask, const SamplingGrid& grid);

Vec3 mask_centroid(const Mask& mask, const SamplingGrid& grid);
double mask_fraction(const Mask& mask);

/// |A and B| / |A or B|; 1 when both are empty.
double jaccard(const Mask& a, const Mask& b);

}  // namespace periscat
