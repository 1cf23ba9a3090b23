#pragma once

#include <array>
#include <vector>

#include "periscat/modal.hpp"
#include "periscat/types.hpp"

namespace periscat {

/// Scalar kernel value together with its Hessian in the first argument.
struct KernelValue {
  Complex phi{0.0, 0.0};
  Mat3c hessian = Mat3c::Zero();
};

/// Ewald-split evaluator of the alpha-quasiperiodic Helmholtz Green's
/// function Phi(x, y) = sum_m exp(-i 2 pi alpha.m) exp(ik R_m) / (4 pi R_m),
/// R_m = |x - y + (2 pi m1, 2 pi m2, 0)|.
///
/// The lattice sum is split with the complementary error function into a
/// Gaussian-damped image sum and a Gaussian-damped modal sum, both of which
/// converge super-exponentially. Valid for every height difference,
/// including x3 = y3 where the plain modal series does not converge.
///
/// The splitting parameter is max(sqrt(pi) / (2 pi), k / 6), which bounds
/// the cancellation factor exp(k^2 / 4E^2) by e^9.
class EwaldSum {
 public:
  explicit EwaldSum(const WaveParameters& params, double tol = 1e-13);

  /// Phi(x, y) and its x-Hessian for d = x - y.
  /// Throws SingularPointError when d lies on the lattice {(2 pi m, 0)}.
  KernelValue evaluate(const Vec3& d) const;

  /// Limit d -> 0 of Phi minus the free-space image exp(ik|d|) / (4 pi |d|),
  /// with its Hessian.
  KernelValue regular_at_origin() const;

  /// Values at the offsets (m1 s1, m2 s2, m3 s3), |m_i| <= n_i - 1, stored
  /// with m1 fastest. The origin entry holds regular_at_origin().
  std::vector<KernelValue> tabulate(const Vec3& spacing, const std::array<int, 3>& n) const;

  double splitting() const { return split_; }
  int spectral_bound() const { return spectral_j_; }

 private:
  struct SpectralMode {
    double a1;
    double a2;
    Complex gamma;  // sqrt(|alpha_j|^2 - k^2), i.e. -i beta_j
  };
  struct Profile {
    Complex s_over_gamma;
    Complex ds_over_gamma;
    Complex d2s_over_gamma;
  };

  Profile profile(Complex gamma, double d3) const;
  void add_spectral(const Vec3& d, KernelValue& out) const;
  void add_images(const Vec3& d, bool skip_origin_image, KernelValue& out) const;
  void add_radial(double R, const Vec3& r, Complex phase, KernelValue& out) const;

  WaveParameters params_;
  double tol_;
  double split_;
  double image_cutoff_;
  int spectral_j_;
  std::vector<SpectralMode> spectral_;
};

}  // namespace periscat
