#include "periscat/ewald.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "periscat/faddeeva.hpp"

namespace periscat {
namespace {

constexpr double kSingularRadius = 1e-12;
constexpr double kCancellationExponent = 3.0;  // E >= k / (2 * 3)

}  // namespace

EwaldSum::EwaldSum(const WaveParameters& params, double tol) : params_(params), tol_(tol) {
  params_.validate();
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("Ewald tolerance must lie in (0, 1)");
  const double k = params_.k;
  split_ = std::max(std::sqrt(kPi) / kTwoPi, k / (2.0 * kCancellationExponent));
  const double log_tol = std::log(1.0 / tol_);
  const double E2 = split_ * split_;

  // Image terms carry exp(k^2/4E^2 - R^2 E^2); modal terms exp(-gamma^2/4E^2).
  image_cutoff_ = std::sqrt(k * k / (4.0 * E2) + log_tol) / split_;
  const double gamma_cut = 2.0 * split_ * std::sqrt(log_tol);
  const double alpha_shift = std::max(std::abs(params_.alpha1), std::abs(params_.alpha2));
  spectral_j_ = static_cast<int>(std::ceil(std::sqrt(k * k + gamma_cut * gamma_cut) + alpha_shift)) + 1;

  spectral_.reserve(static_cast<std::size_t>((2 * spectral_j_ + 1) * (2 * spectral_j_ + 1)));
  for (int j1 = -spectral_j_; j1 <= spectral_j_; ++j1) {
    for (int j2 = -spectral_j_; j2 <= spectral_j_; ++j2) {
      const ModeIndex j{j1, j2};
      const Complex b = beta_checked(params_, j);
      spectral_.push_back({params_.alpha1 + j1, params_.alpha2 + j2, -kI * b});
    }
  }
}

EwaldSum::Profile EwaldSum::profile(Complex g, double d3) const {
  using special::faddeeva_w;
  const double E = split_;
  const Complex a_plus = g / (2.0 * E) + d3 * E;
  const Complex a_minus = g / (2.0 * E) - d3 * E;
  const Complex Q = std::exp(-g * g / (4.0 * E * E) - d3 * d3 * E * E);

  // exp(+-g d3) erfc(a) written through w so that no factor overflows.
  auto damped = [&](double sigma, Complex a) -> Complex {
    if (a.real() >= 0.0) return Q * faddeeva_w(kI * a);
    return 2.0 * std::exp(sigma * g * d3) - Q * faddeeva_w(-kI * a);
  };
  const Complex tp = damped(1.0, a_plus);
  const Complex tm = damped(-1.0, a_minus);
  const Complex s = tp + tm;
  return {s / g, tp - tm, g * s - (4.0 * E / std::sqrt(kPi)) * Q};
}

void EwaldSum::add_spectral(const Vec3& d, KernelValue& out) const {
  const double c = 1.0 / (16.0 * kPi * kPi);
  Complex phi = 0.0, h11 = 0.0, h12 = 0.0, h22 = 0.0, h13 = 0.0, h23 = 0.0, h33 = 0.0;
  for (const SpectralMode& m : spectral_) {
    const Complex e = std::exp(kI * (m.a1 * d[0] + m.a2 * d[1]));
    const Profile p = profile(m.gamma, d[2]);
    const Complex ea = e * p.s_over_gamma;
    phi += ea;
    h11 -= m.a1 * m.a1 * ea;
    h12 -= m.a1 * m.a2 * ea;
    h22 -= m.a2 * m.a2 * ea;
    h13 += kI * m.a1 * e * p.ds_over_gamma;
    h23 += kI * m.a2 * e * p.ds_over_gamma;
    h33 += e * p.d2s_over_gamma;
  }
  out.phi += c * phi;
  Mat3c H;
  H << h11, h12, h13, h12, h22, h23, h13, h23, h33;
  out.hessian += c * H;
}

void EwaldSum::add_radial(double R, const Vec3& r, Complex phase, KernelValue& out) const {
  using special::faddeeva_w;
  const double k = params_.k;
  const double E = split_;
  const double G0 = std::exp(k * k / (4.0 * E * E) - R * R * E * E);
  const Complex up = G0 * faddeeva_w(Complex(-k / (2.0 * E), R * E));
  const Complex um = G0 * faddeeva_w(Complex(k / (2.0 * E), R * E));
  const Complex U = up + um;
  const double P = 2.0 * E / std::sqrt(kPi) * G0;
  const Complex U1 = kI * k * (up - um) - 2.0 * P;
  const Complex U2 = -k * k * U + 4.0 * R * E * E * P;

  const double c = 1.0 / (8.0 * kPi);
  const Complex f = c * U / R;
  const Complex f1 = c * (U1 / R - U / (R * R));
  const Complex f2 = c * (U2 / R - 2.0 * U1 / (R * R) + 2.0 * U / (R * R * R));

  const Vec3 rh = r / R;
  const Mat3 rr = rh * rh.transpose();
  out.phi += phase * f;
  out.hessian += phase * (f2 * rr.cast<Complex>() + (f1 / R) * (Mat3::Identity() - rr).cast<Complex>());
}

void EwaldSum::add_images(const Vec3& d, bool skip_origin_image, KernelValue& out) const {
  const int M1 = static_cast<int>(std::ceil((std::abs(d[0]) + image_cutoff_) / kTwoPi));
  const int M2 = static_cast<int>(std::ceil((std::abs(d[1]) + image_cutoff_) / kTwoPi));
  for (int m1 = -M1; m1 <= M1; ++m1) {
    for (int m2 = -M2; m2 <= M2; ++m2) {
      if (skip_origin_image && m1 == 0 && m2 == 0) continue;
      const Vec3 r(d[0] + kTwoPi * m1, d[1] + kTwoPi * m2, d[2]);
      const double R = r.norm();
      if (R > image_cutoff_) continue;
      if (R < kSingularRadius) {
        std::ostringstream os;
        os << "kernel evaluated on the singular lattice (image " << m1 << ", " << m2 << ")";
        throw SingularPointError(os.str());
      }
      const Complex phase = std::exp(-kI * kTwoPi * (params_.alpha1 * m1 + params_.alpha2 * m2));
      add_radial(R, r, phase, out);
    }
  }
}

KernelValue EwaldSum::evaluate(const Vec3& d) const {
  KernelValue out;
  add_images(d, false, out);
  add_spectral(d, out);
  return out;
}

KernelValue EwaldSum::regular_at_origin() const {
  KernelValue out;
  const Vec3 zero = Vec3::Zero();
  add_images(zero, true, out);
  add_spectral(zero, out);

  // Taylor limit of the m = 0 image minus exp(ikR)/(4 pi R); the difference
  // D(R)/(8 pi R) is even in R, so only D'(0) and D'''(0) enter.
  const double k = params_.k;
  const double E = split_;
  const double pre = std::exp(k * k / (4.0 * E * E));
  const Complex S0 = 2.0 * pre * special::faddeeva_w(Complex(k / (2.0 * E), 0.0));
  const double P0 = 2.0 * E / std::sqrt(kPi) * pre;
  const Complex D1 = -kI * k * S0 - 2.0 * P0;
  const Complex D3 = -k * k * D1 + 4.0 * E * E * P0;
  out.phi += D1 / (8.0 * kPi);
  out.hessian += (D3 / (24.0 * kPi)) * Mat3c::Identity();
  return out;
}

std::vector<KernelValue> EwaldSum::tabulate(const Vec3& spacing, const std::array<int, 3>& n) const {
  for (int a = 0; a < 3; ++a)
    if (n[a] < 1) throw std::invalid_argument("tabulate: grid sizes must be positive");
  const int N1 = 2 * n[0] - 1, N2 = 2 * n[1] - 1, N3 = 2 * n[2] - 1;
  std::vector<KernelValue> table(static_cast<std::size_t>(N1) * N2 * N3);
  auto at = [&](int i1, int i2, int i3) -> KernelValue& {
    return table[static_cast<std::size_t>(i1) + static_cast<std::size_t>(N1) * (i2 + static_cast<std::size_t>(N2) * i3)];
  };

  // The spectral block is a full square, so the lateral sums factor into
  // two one-dimensional transforms per height level.
  const int nj = 2 * spectral_j_ + 1;
  std::vector<double> a1(nj), a2(nj);
  for (int j = 0; j < nj; ++j) {
    a1[j] = params_.alpha1 + (j - spectral_j_);
    a2[j] = params_.alpha2 + (j - spectral_j_);
  }
  std::vector<Complex> e1(static_cast<std::size_t>(nj) * N1), e2(static_cast<std::size_t>(nj) * N2);
  for (int j = 0; j < nj; ++j) {
    for (int i = 0; i < N1; ++i) e1[j * N1 + i] = std::exp(kI * a1[j] * ((i - (n[0] - 1)) * spacing[0]));
    for (int i = 0; i < N2; ++i) e2[j * N2 + i] = std::exp(kI * a2[j] * ((i - (n[1] - 1)) * spacing[1]));
  }

  constexpr int kChannels = 7;
  const double c = 1.0 / (16.0 * kPi * kPi);
  std::vector<Complex> X(static_cast<std::size_t>(kChannels) * nj * nj);
  std::vector<Complex> Y(static_cast<std::size_t>(kChannels) * nj * N2);
  for (int i3 = 0; i3 < N3; ++i3) {
    const double d3 = (i3 - (n[2] - 1)) * spacing[2];
    for (int j1 = 0; j1 < nj; ++j1) {
      for (int j2 = 0; j2 < nj; ++j2) {
        const SpectralMode& m = spectral_[static_cast<std::size_t>(j1) * nj + j2];
        const Profile p = profile(m.gamma, d3);
        const std::size_t base = (static_cast<std::size_t>(j1) * nj + j2) * kChannels;
        X[base + 0] = p.s_over_gamma;
        X[base + 1] = -m.a1 * m.a1 * p.s_over_gamma;
        X[base + 2] = -m.a1 * m.a2 * p.s_over_gamma;
        X[base + 3] = -m.a2 * m.a2 * p.s_over_gamma;
        X[base + 4] = kI * m.a1 * p.ds_over_gamma;
        X[base + 5] = kI * m.a2 * p.ds_over_gamma;
        X[base + 6] = p.d2s_over_gamma;
      }
    }
    std::fill(Y.begin(), Y.end(), Complex(0.0));
    for (int j1 = 0; j1 < nj; ++j1) {
      for (int j2 = 0; j2 < nj; ++j2) {
        const Complex* x = &X[(static_cast<std::size_t>(j1) * nj + j2) * kChannels];
        for (int i2 = 0; i2 < N2; ++i2) {
          const Complex e = e2[j2 * N2 + i2];
          Complex* y = &Y[(static_cast<std::size_t>(j1) * N2 + i2) * kChannels];
          for (int ch = 0; ch < kChannels; ++ch) y[ch] += e * x[ch];
        }
      }
    }
    for (int i2 = 0; i2 < N2; ++i2) {
      for (int i1 = 0; i1 < N1; ++i1) {
        Complex z[kChannels] = {};
        for (int j1 = 0; j1 < nj; ++j1) {
          const Complex e = e1[j1 * N1 + i1];
          const Complex* y = &Y[(static_cast<std::size_t>(j1) * N2 + i2) * kChannels];
          for (int ch = 0; ch < kChannels; ++ch) z[ch] += e * y[ch];
        }
        KernelValue& v = at(i1, i2, i3);
        v.phi = c * z[0];
        v.hessian << z[1], z[2], z[4], z[2], z[3], z[5], z[4], z[5], z[6];
        v.hessian *= c;
      }
    }
  }

  const KernelValue regular = regular_at_origin();
  for (int i3 = 0; i3 < N3; ++i3) {
    for (int i2 = 0; i2 < N2; ++i2) {
      for (int i1 = 0; i1 < N1; ++i1) {
        const Vec3 d((i1 - (n[0] - 1)) * spacing[0], (i2 - (n[1] - 1)) * spacing[1],
                     (i3 - (n[2] - 1)) * spacing[2]);
        if (i1 == n[0] - 1 && i2 == n[1] - 1 && i3 == n[2] - 1) {
          at(i1, i2, i3) = regular;
          continue;
        }
        add_images(d, false, at(i1, i2, i3));
      }
    }
  }
  return table;
}

}  // namespace periscat
