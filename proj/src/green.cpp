#include "periscat/green.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace periscat {
namespace {

constexpr int kMaxModalJ = 2048;
constexpr double kSingularRadius = 1e-12;

double alpha_shift(const WaveParameters& p) { return std::max(std::abs(p.alpha1), std::abs(p.alpha2)); }

// Bound on the modal terms outside the sup-norm ball of radius J. In shell n
// (8n modes) |alpha_j| >= n - a, so |beta_j| >= b_n = sqrt((n - a)^2 - k^2).
// The dyadic weight bounds |delta - gamma gamma / k^2| by 1 + 4 (n + a)^2 / k^2.
double modal_tail(const WaveParameters& p, int J, double dist, bool dyadic) {
  const double a = alpha_shift(p);
  const double k = p.k;
  if (J + 1 - a <= k) return std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (int n = J + 1; n < J + 1000000; ++n) {
    const double b = std::sqrt((n - a) * (n - a) - k * k);
    double term = 8.0 * n * std::exp(-b * dist) / (8.0 * kPi * kPi * b);
    if (dyadic) term *= 1.0 + 4.0 * (n + a) * (n + a) / (k * k);
    total += term;
    if (term < 1e-17 * total) break;
  }
  return total;
}

template <class Visit>
void visit_shell(int n, Visit&& visit) {
  if (n == 0) {
    visit(ModeIndex{0, 0});
    return;
  }
  for (int j1 = -n; j1 <= n; ++j1) {
    visit(ModeIndex{j1, -n});
    visit(ModeIndex{j1, n});
  }
  for (int j2 = -n + 1; j2 <= n - 1; ++j2) {
    visit(ModeIndex{-n, j2});
    visit(ModeIndex{n, j2});
  }
}

struct ModalSum {
  Complex phi{0.0, 0.0};
  Mat3c tensor = Mat3c::Zero();
};

ModalSum modal_series(const WaveParameters& p, const Vec3& d, const KernelTruncation& trunc, bool dyadic) {
  p.validate();
  trunc.validate();
  const double dist = std::abs(d[2]);
  if (dist == 0.0) throw CoincidentHeightError("modal series requires x3 != y3; use the spatial route");
  const double s3 = d[2] > 0.0 ? 1.0 : -1.0;
  const double k2 = p.k * p.k;
  const Complex c = kI / (8.0 * kPi * kPi);

  ModalSum out;
  auto add = [&](ModeIndex j) {
    const Complex b = beta_checked(p, j);
    const double a1 = p.alpha1 + j.j1;
    const double a2 = p.alpha2 + j.j2;
    const Complex t = c / b * std::exp(kI * (a1 * d[0] + a2 * d[1]) + kI * b * dist);
    out.phi += t;
    if (dyadic) {
      const Complex g[3] = {a1, a2, s3 * b};
      for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) out.tensor(m, n) += ((m == n ? 1.0 : 0.0) - g[m] * g[n] / k2) * t;
    }
  };

  for (int n = 0;; ++n) {
    visit_shell(n, add);
    if (n < trunc.modal_J) continue;
    const double scale = dyadic ? out.tensor.norm() : std::abs(out.phi);
    if (modal_tail(p, n, dist, dyadic) <= trunc.tail_tol * scale) break;
    if (n >= kMaxModalJ) {
      std::ostringstream os;
      os << "modal series tail above tolerance at J = " << n << " for |x3 - y3| = " << dist;
      throw ConvergenceError(os.str(), modal_tail(p, n, dist, dyadic) / scale);
    }
  }
  return out;
}

double ewald_tolerance(const KernelTruncation& trunc) { return std::clamp(trunc.tail_tol, 1e-15, 1e-2); }

void check_in_slab(const WaveParameters& p, const Vec3& z) {
  if (!(std::abs(z[2]) < p.h)) throw std::invalid_argument("Rayleigh coefficients need |z3| < h");
}

// Radial profile (k / 4 pi) j0(kR) = sin(kR) / (4 pi R) and its first two
// derivatives, with a Taylor branch near R = 0.
struct SincProfile {
  double f, d1_over_r, d2;
};

SincProfile sinc_profile(double k, double R) {
  const double u = k * R;
  const double c = 1.0 / (4.0 * kPi);
  if (u < 1e-3) {
    const double k3 = k * k * k;
    return {c * k * (1.0 - u * u / 6.0), c * k3 * (-1.0 / 3.0 + u * u / 30.0), c * k3 * (-1.0 / 3.0 + u * u / 10.0)};
  }
  const double s = std::sin(u), co = std::cos(u);
  const double f = c * s / R;
  const double d1 = c * (k * co / R - s / (R * R));
  const double d2 = c * (-k * k * s / R - 2.0 * k * co / (R * R) + 2.0 * s / (R * R * R));
  return {f, d1 / R, d2};
}

}  // namespace

void KernelTruncation::validate() const {
  if (modal_J < 0) throw std::invalid_argument("modal_J must be nonnegative");
  if (lattice_J < 0) throw std::invalid_argument("lattice_J must be nonnegative");
  if (!(tail_tol > 0.0)) throw std::invalid_argument("tail_tol must be positive");
}

int modal_cutoff(const WaveParameters& params, double dist, double abs_tol, bool dyadic, int min_J) {
  if (!(dist > 0.0)) throw CoincidentHeightError("modal cutoff requires a positive height separation");
  if (!(abs_tol > 0.0)) throw std::invalid_argument("modal cutoff tolerance must be positive");
  for (int J = std::max(min_J, 0); J <= kMaxModalJ; ++J)
    if (modal_tail(params, J, dist, dyadic) <= abs_tol) return J;
  throw ConvergenceError("modal tail above tolerance at the maximal cutoff", abs_tol);
}

Complex phi_modal(const WaveParameters& params, const Vec3& x, const Vec3& y, const KernelTruncation& trunc) {
  return modal_series(params, x - y, trunc, false).phi;
}

Complex phi_spatial(const WaveParameters& params, const Vec3& x, const Vec3& y, const KernelTruncation& trunc) {
  trunc.validate();
  return EwaldSum(params, ewald_tolerance(trunc)).evaluate(x - y).phi;
}

Complex phi_images(const WaveParameters& params, const Vec3& x, const Vec3& y, int lattice_J) {
  params.validate();
  if (lattice_J < 0) throw std::invalid_argument("lattice_J must be nonnegative");
  const Vec3 d = x - y;
  Complex sum = 0.0;
  for (int m1 = -lattice_J; m1 <= lattice_J; ++m1) {
    for (int m2 = -lattice_J; m2 <= lattice_J; ++m2) {
      const double R = Vec3(d[0] + kTwoPi * m1, d[1] + kTwoPi * m2, d[2]).norm();
      if (R < kSingularRadius) throw SingularPointError("image sum evaluated on the singular lattice");
      const Complex phase = std::exp(-kI * kTwoPi * (params.alpha1 * m1 + params.alpha2 * m2));
      sum += phase * std::exp(kI * params.k * R) / (4.0 * kPi * R);
    }
  }
  return sum;
}

Complex r_coeff(const WaveParameters& params, ModeIndex j, Side side, const Vec3& z) {
  params.validate();
  check_in_slab(params, z);
  const Complex b = beta_checked(params, j);
  const double a1 = params.alpha1 + j.j1;
  const double a2 = params.alpha2 + j.j2;
  const Complex phase = -kI * (a1 * z[0] + a2 * z[1]) + kI * b * (params.h - sign(side) * z[2]);
  return kI / (8.0 * kPi * kPi * b) * std::exp(phase);
}

Mat3c g_from_r(const WaveParameters& params, const Mode& mode, Side side, Complex r) {
  const Complex g[3] = {mode.alpha[0], mode.alpha[1], sign(side) * mode.beta};
  const double k2 = params.k * params.k;
  Mat3c out;
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n) out(m, n) = ((m == n ? 1.0 : 0.0) - g[m] * g[n] / k2) * r;
  return out;
}

Mat3c h_from_g(const Mode& mode, Side side, const Mat3c& g) {
  const Complex gam[3] = {mode.alpha[0], mode.alpha[1], sign(side) * mode.beta};
  Mat3c out;
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n) out(m, n) = gam[m] * g(2, n);
  return out;
}

namespace {
Mode single_mode(const WaveParameters& params, ModeIndex j) {
  Mode m;
  m.index = j;
  m.alpha = alpha_vec(params, j);
  m.beta = beta_checked(params, j);
  m.propagating = m.beta.imag() == 0.0;
  return m;
}
}  // namespace

Mat3c g_coeff(const WaveParameters& params, ModeIndex j, Side side, const Vec3& z) {
  return g_from_r(params, single_mode(params, j), side, r_coeff(params, j, side, z));
}

Mat3c h_coeff(const WaveParameters& params, ModeIndex j, Side side, const Vec3& z) {
  const Mode m = single_mode(params, j);
  return h_from_g(m, side, g_from_r(params, m, side, r_coeff(params, j, side, z)));
}

GreenModalCoefficients::GreenModalCoefficients(const WaveParameters& params, const ModeSet& modes, const Vec3& z)
    : z_(z) {
  params.validate();
  check_in_slab(params, z);
  r_.resize(2 * modes.size());
  g_.resize(2 * modes.size());
  h_.resize(2 * modes.size());
  const Complex c = kI / (8.0 * kPi * kPi);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const Mode& m = modes[i];
    const Complex lateral = std::exp(-kI * (m.alpha[0] * z[0] + m.alpha[1] * z[1]));
    for (Side s : kSides) {
      const std::size_t at = slot(i, s);
      r_[at] = c / m.beta * lateral * std::exp(kI * m.beta * (params.h - sign(s) * z[2]));
      g_[at] = g_from_r(params, m, s, r_[at]);
      h_[at] = h_from_g(m, s, g_[at]);
    }
  }
}

Mat3c dyadic_from_scalar(double k, const KernelValue& v) {
  return v.phi * Mat3c::Identity() + v.hessian / (k * k);
}

Mat3c green_tensor_modal(const WaveParameters& params, const Vec3& x, const Vec3& y, const KernelTruncation& trunc) {
  return modal_series(params, x - y, trunc, true).tensor;
}

Mat3c green_tensor_spatial(const WaveParameters& params, const Vec3& x, const Vec3& y,
                           const KernelTruncation& trunc) {
  trunc.validate();
  return dyadic_from_scalar(params.k, EwaldSum(params, ewald_tolerance(trunc)).evaluate(x - y));
}

Mat3c green_tensor(const WaveParameters& params, const Vec3& x, const Vec3& y, const KernelTruncation& trunc,
                   GreenRoute route) {
  if (route == GreenRoute::Modal ||
      (route == GreenRoute::Automatic && std::abs(x[2] - y[2]) >= kModalRouteMinSeparation))
    return green_tensor_modal(params, x, y, trunc);
  return green_tensor_spatial(params, x, y, trunc);
}

GreenKernel::GreenKernel(const WaveParameters& params, const KernelTruncation& trunc)
    : params_(params), trunc_(trunc), ewald_(params, ewald_tolerance(trunc)) {
  trunc_.validate();
}

bool GreenKernel::use_modal(const Vec3& x, const Vec3& y, GreenRoute route) const {
  if (route == GreenRoute::Automatic) return std::abs(x[2] - y[2]) >= kModalRouteMinSeparation;
  return route == GreenRoute::Modal;
}

Complex GreenKernel::phi(const Vec3& x, const Vec3& y, GreenRoute route) const {
  if (use_modal(x, y, route)) return modal_series(params_, x - y, trunc_, false).phi;
  return ewald_.evaluate(x - y).phi;
}

Mat3c GreenKernel::tensor(const Vec3& x, const Vec3& y, GreenRoute route) const {
  if (use_modal(x, y, route)) return modal_series(params_, x - y, trunc_, true).tensor;
  return dyadic_from_scalar(params_.k, ewald_.evaluate(x - y));
}

FKernel::FKernel(const WaveParameters& params) : k_(params.k) {
  params.validate();
  const int J = static_cast<int>(std::ceil(params.k + alpha_shift(params))) + 1;
  modes_ = build_mode_set(params, J, false);
}

Complex FKernel::f(const Vec3& x, const Vec3& y) const {
  const Vec3 d = x - y;
  Complex sum = 0.0;
  for (const Mode& m : modes_) {
    const double b = m.beta.real();
    sum += std::cos(b * d[2]) / b * std::exp(kI * (m.alpha[0] * d[0] + m.alpha[1] * d[1]));
  }
  return sum / (8.0 * kPi * kPi);
}

Mat3c FKernel::big_f(const Vec3& x, const Vec3& y) const {
  const Vec3 d = x - y;
  const double k2 = k_ * k_;
  Mat3c out = Mat3c::Zero();
  for (const Mode& m : modes_) {
    const double b = m.beta.real();
    const double a[2] = {m.alpha[0], m.alpha[1]};
    const Complex e = std::exp(kI * (a[0] * d[0] + a[1] * d[1])) / b;
    const double co = std::cos(b * d[2]);
    const double si = std::sin(b * d[2]);
    for (int p = 0; p < 2; ++p) {
      for (int q = 0; q < 2; ++q) out(p, q) += ((p == q ? 1.0 : 0.0) - a[p] * a[q] / k2) * co * e;
      const Complex mixed = -kI * a[p] * b * si / k2 * e;
      out(p, 2) += mixed;
      out(2, p) += mixed;
    }
    out(2, 2) += (1.0 - b * b / k2) * co * e;
  }
  return out / (8.0 * kPi * kPi);
}

Complex f_kernel(const WaveParameters& params, const Vec3& x, const Vec3& y, const KernelTruncation&) {
  return FKernel(params).f(x, y);
}

Mat3c big_f_kernel(const WaveParameters& params, const Vec3& x, const Vec3& y, const KernelTruncation&) {
  return FKernel(params).big_f(x, y);
}

Complex f_kernel_images(const WaveParameters& params, const Vec3& x, const Vec3& y, int lattice_J) {
  params.validate();
  if (lattice_J < 0) throw std::invalid_argument("lattice_J must be nonnegative");
  const Vec3 d = x - y;
  Complex sum = 0.0;
  for (int m1 = -lattice_J; m1 <= lattice_J; ++m1) {
    for (int m2 = -lattice_J; m2 <= lattice_J; ++m2) {
      const double R = Vec3(d[0] + kTwoPi * m1, d[1] + kTwoPi * m2, d[2]).norm();
      const Complex phase = std::exp(-kI * kTwoPi * (params.alpha1 * m1 + params.alpha2 * m2));
      sum += phase * sinc_profile(params.k, R).f;
    }
  }
  return sum;
}

Mat3c big_f_kernel_images(const WaveParameters& params, const Vec3& x, const Vec3& y, int lattice_J) {
  params.validate();
  if (lattice_J < 0) throw std::invalid_argument("lattice_J must be nonnegative");
  const Vec3 d = x - y;
  const double k2 = params.k * params.k;
  Mat3c out = Mat3c::Zero();
  for (int m1 = -lattice_J; m1 <= lattice_J; ++m1) {
    for (int m2 = -lattice_J; m2 <= lattice_J; ++m2) {
      const Vec3 r(d[0] + kTwoPi * m1, d[1] + kTwoPi * m2, d[2]);
      const double R = r.norm();
      const SincProfile s = sinc_profile(params.k, R);
      Mat3 rr = Mat3::Zero();
      if (R > 0.0) rr = (r / R) * (r / R).transpose();
      const Mat3 hess = s.d2 * rr + s.d1_over_r * (Mat3::Identity() - rr);
      const Complex phase = std::exp(-kI * kTwoPi * (params.alpha1 * m1 + params.alpha2 * m2));
      out += phase * (s.f * Mat3::Identity() + hess / k2).cast<Complex>();
    }
  }
  return out;
}

}  // namespace periscat
