#include "periscat/faddeeva.hpp"

#include <array>
#include <cmath>

namespace periscat::special {
namespace {

// Weideman's rational expansion (SIAM J. Numer. Anal. 31, 1994) with
// N = 40 terms; coefficients come from a cosine transform of
// exp(-t^2)(L^2 + t^2) sampled at t = L tan(theta / 2).
constexpr int kTerms = 40;

struct Expansion {
  double L = 0.0;
  std::array<double, kTerms> a{};  // a[n-1] multiplies Z^(n-1)

  Expansion() {
    constexpr int M = 2 * kTerms;
    L = std::sqrt(kTerms / std::sqrt(2.0));
    std::array<double, 2 * M - 1> f{};
    for (int k = -M + 1; k <= M - 1; ++k) {
      const double t = L * std::tan(k * kPi / (2.0 * M));
      f[k + M - 1] = std::exp(-t * t) * (L * L + t * t);
    }
    for (int n = 1; n <= kTerms; ++n) {
      double s = 0.0;
      for (int k = -M + 1; k <= M - 1; ++k) s += f[k + M - 1] * std::cos(kPi * n * k / M);
      a[n - 1] = s / (2.0 * M);
    }
  }
};

const Expansion& expansion() {
  static const Expansion e;
  return e;
}

Complex w_upper(Complex z) {
  const Expansion& e = expansion();
  const Complex denom = e.L - kI * z;
  const Complex Z = (e.L + kI * z) / denom;
  Complex p = e.a[kTerms - 1];
  for (int n = kTerms - 2; n >= 0; --n) p = p * Z + e.a[n];
  return 2.0 * p / (denom * denom) + 1.0 / (std::sqrt(kPi) * denom);
}

}  // namespace

Complex faddeeva_w(Complex z) {
  if (z.imag() >= 0.0) return w_upper(z);
  return 2.0 * std::exp(-z * z) - w_upper(-z);
}

Complex erfc(Complex z) {
  // erfc(z) = exp(-z^2) w(iz); the reflection keeps iz in the upper half plane.
  if (z.real() >= 0.0) return std::exp(-z * z) * w_upper(kI * z);
  return 2.0 - std::exp(-z * z) * w_upper(-kI * z);
}

}  // namespace periscat::special
