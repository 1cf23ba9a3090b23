#pragma once

#include <array>
#include <string>
#include <variant>
#include <vector>

#include "periscat/green.hpp"
#include "periscat/modal.hpp"
#include "periscat/types.hpp"

namespace periscat {

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  bool contains(const Vec3& x) const;
  Vec3 extent() const { return hi - lo; }
};

/// Maps x1, x2 into [-pi, pi).
Vec3 wrap_to_cell(const Vec3& x);

/// Hollow cylinder r_inner <= sqrt(x1^2 + x2^2) <= r_outer, |x3| <= half_height.
struct RingShape {
  double r_inner = 1.0;
  double r_outer = 1.5;
  double half_height = 0.1;
};

struct SpheresShape {
  std::vector<Vec3> centers{{-1.8, 0.0, 0.0}, {-0.6, 0.0, 0.0}, {0.6, 0.0, 0.0}, {1.8, 0.0, 0.0}};
  double radius = 0.4;
};

/// |x_i| <= half_extent_i.
struct CubeShape {
  Vec3 half_extent{1.0, 1.0, 0.3};
};

/// Cell-centered table of permittivity tensors over a box, looked up by
/// nearest cell. Outside the box the medium is vacuum.
struct VoxelTable {
  Box box;
  std::array<int, 3> n{1, 1, 1};
  std::vector<Mat3> eps;  // x-fastest

  Vec3 spacing() const;
  Vec3 center(int i1, int i2, int i3) const;
  const Mat3& at(int i1, int i2, int i3) const;
};

using Shape = std::variant<RingShape, SpheresShape, CubeShape, VoxelTable>;

/// diag(1.3, 1.5, 1.4).
Mat3 default_eps_inside();

class PermittivityModel {
 public:
  /// eps_inside is ignored for VoxelTable shapes. Throws std::invalid_argument
  /// when a tensor is not symmetric positive definite or the support leaves
  /// Omega_h.
  PermittivityModel(Shape shape, const Mat3& eps_inside = default_eps_inside(), double h = 1.0);

  static PermittivityModel ring(const Mat3& eps = default_eps_inside());
  static PermittivityModel spheres(const Mat3& eps = default_eps_inside());
  static PermittivityModel cube(const Mat3& eps = default_eps_inside());

  /// Single cell with the given permittivity, centered at c.
  static PermittivityModel point(const Vec3& c, const Vec3& size, const Mat3& eps, double h = 1.0);

  bool contains(const Vec3& x) const;
  Mat3 permittivity(const Vec3& x) const;
  Mat3 contrast(const Vec3& x) const { return permittivity(x) - Mat3::Identity(); }

  const Box& support() const { return support_; }
  const Shape& shape() const { return shape_; }
  const Mat3& eps_inside() const { return eps_inside_; }
  std::string name() const;

  /// Same geometry with contrast multiplied by s.
  PermittivityModel scaled(double s) const;

 private:
  bool contains_wrapped(const Vec3& x) const;

  Shape shape_;
  Mat3 eps_inside_;
  Box support_;
  double h_;
};

struct SourcePlaneArray {
  double z_offset = 2.5;
  int n1 = 15;
  int n2 = 15;

  void validate(double h) const;
  int count() const { return 2 * n1 * n2; }
};

/// Cell-centered positions, plane x3 = +z_offset first, x1 fastest.
std::vector<Vec3> source_positions(const SourcePlaneArray& array);

/// Field of a vertical point dipole at y: the third column of G(x, y),
/// summed modally. Requires x3 != y3.
Vec3c incident_field(const WaveParameters& params, const Vec3& y, const Vec3& x,
                     const KernelTruncation& trunc = {});

/// incident_field at the centers of an n1 x n2 x n3 cell grid over box
/// (x-fastest). All points must lie strictly on one side of y.
std::vector<Vec3c> incident_field_on_grid(const WaveParameters& params, const Vec3& y, const Box& box,
                                          const std::array<int, 3>& n, const KernelTruncation& trunc = {});

}  // namespace periscat
