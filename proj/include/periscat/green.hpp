#pragma once

#include <array>
#include <vector>

#include "periscat/ewald.hpp"
#include "periscat/modal.hpp"
#include "periscat/types.hpp"

namespace periscat {

/// Truncation controls for the kernel series.
///
/// modal_J is the minimum sup-norm radius of modal sums; the radius grows
/// until the a priori tail bound drops below tail_tol relative to the
/// partial sum. lattice_J bounds the plain image sums (phi_images,
/// f_kernel_images). The Ewald route is controlled by tail_tol alone.
struct KernelTruncation {
  int modal_J = 8;
  int lattice_J = 8;
  double tail_tol = 1e-10;

  void validate() const;
};

enum class GreenRoute { Automatic, Modal, Spatial };

/// Height separation at and above which GreenRoute::Automatic picks the
/// modal series.
inline constexpr double kModalRouteMinSeparation = 1.0;

// Scalar quasiperiodic Green's function.

/// Modal series (i / 8 pi^2) sum_j exp(i(alpha_j.(x - y) + beta_j |x3 - y3|)) / beta_j.
/// Throws CoincidentHeightError when x3 == y3 and ConvergenceError when the
/// tail bound cannot be met below J = 2048.
Complex phi_modal(const WaveParameters& params, const Vec3& x, const Vec3& y,
                  const KernelTruncation& trunc = {});

/// Smallest J >= min_J whose modal tail bound at height separation dist is
/// at most abs_tol. The dyadic bound covers the second-derivative weights.
int modal_cutoff(const WaveParameters& params, double dist, double abs_tol, bool dyadic, int min_J);

/// Image-sum representation evaluated with Ewald splitting. Accurate to
/// about tail_tol for every x - y off the singular lattice.
Complex phi_spatial(const WaveParameters& params, const Vec3& x, const Vec3& y,
                    const KernelTruncation& trunc = {});

/// Plain truncated image sum over max(|m1|, |m2|) <= lattice_J. Converges
/// slowly; kept as a reference for the single-image limit.
Complex phi_images(const WaveParameters& params, const Vec3& x, const Vec3& y, int lattice_J);

// Rayleigh coefficients of Phi and G about a source point z in Omega_h.

Complex r_coeff(const WaveParameters& params, ModeIndex j, Side side, const Vec3& z);
Mat3c g_coeff(const WaveParameters& params, ModeIndex j, Side side, const Vec3& z);
Mat3c h_coeff(const WaveParameters& params, ModeIndex j, Side side, const Vec3& z);

/// g and h from a precomputed r, in the same operation order as g_coeff and h_coeff.
Mat3c g_from_r(const WaveParameters& params, const Mode& mode, Side side, Complex r);
Mat3c h_from_g(const Mode& mode, Side side, const Mat3c& g);

/// r, g and h for every mode of a set at one point z.
class GreenModalCoefficients {
 public:
  GreenModalCoefficients(const WaveParameters& params, const ModeSet& modes, const Vec3& z);

  std::size_t size() const { return r_.size() / 2; }
  Complex r(std::size_t mode, Side side) const { return r_[slot(mode, side)]; }
  const Mat3c& g(std::size_t mode, Side side) const { return g_[slot(mode, side)]; }
  const Mat3c& h(std::size_t mode, Side side) const { return h_[slot(mode, side)]; }
  const Vec3& point() const { return z_; }

 private:
  static std::size_t slot(std::size_t mode, Side side) { return 2 * mode + side_slot(side); }

  Vec3 z_;
  std::vector<Complex> r_;
  std::vector<Mat3c> g_;
  std::vector<Mat3c> h_;
};

// Dyadic Green's function G = Phi I + grad div (Phi I) / k^2.

Mat3c green_tensor_modal(const WaveParameters& params, const Vec3& x, const Vec3& y,
                         const KernelTruncation& trunc = {});
Mat3c green_tensor_spatial(const WaveParameters& params, const Vec3& x, const Vec3& y,
                           const KernelTruncation& trunc = {});
Mat3c green_tensor(const WaveParameters& params, const Vec3& x, const Vec3& y,
                   const KernelTruncation& trunc = {}, GreenRoute route = GreenRoute::Automatic);

/// Reusable evaluator: keeps the Ewald tables alive across calls.
class GreenKernel {
 public:
  explicit GreenKernel(const WaveParameters& params, const KernelTruncation& trunc = {});

  Complex phi(const Vec3& x, const Vec3& y, GreenRoute route = GreenRoute::Automatic) const;
  Mat3c tensor(const Vec3& x, const Vec3& y, GreenRoute route = GreenRoute::Automatic) const;

  const WaveParameters& params() const { return params_; }
  const KernelTruncation& truncation() const { return trunc_; }
  const EwaldSum& ewald() const { return ewald_; }

 private:
  bool use_modal(const Vec3& x, const Vec3& y, GreenRoute route) const;

  WaveParameters params_;
  KernelTruncation trunc_;
  EwaldSum ewald_;
};

/// G from an Ewald kernel value.
Mat3c dyadic_from_scalar(double k, const KernelValue& v);

// Resolution kernels F = (Phi(x, y) - conj Phi(y, x)) / 2i and its dyadic.
// Evanescent modes cancel exactly, so the finite propagating sum
// (1 / 8 pi^2) sum_j cos(beta_j (x3 - y3)) exp(i alpha_j.(x - y)) / beta_j
// is the whole kernel.

Complex f_kernel(const WaveParameters& params, const Vec3& x, const Vec3& y,
                 const KernelTruncation& trunc = {});
Mat3c big_f_kernel(const WaveParameters& params, const Vec3& x, const Vec3& y,
                   const KernelTruncation& trunc = {});

/// Truncated image form sum_m exp(-i 2 pi alpha.m) (k / 4 pi) j0(k R_m) and its
/// dyadic, max(|m1|, |m2|) <= lattice_J.
Complex f_kernel_images(const WaveParameters& params, const Vec3& x, const Vec3& y, int lattice_J);
Mat3c big_f_kernel_images(const WaveParameters& params, const Vec3& x, const Vec3& y, int lattice_J);

/// Propagating-mode table for repeated F evaluations.
class FKernel {
 public:
  explicit FKernel(const WaveParameters& params);

  Complex f(const Vec3& x, const Vec3& y) const;
  Mat3c big_f(const Vec3& x, const Vec3& y) const;

 private:
  double k_;
  ModeSet modes_;
};

}  // namespace periscat
