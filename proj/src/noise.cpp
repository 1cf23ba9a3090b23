#include "periscat/noise.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace periscat {

void NoiseSpec::validate() const {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw std::invalid_argument("noise delta must be nonnegative");
}

RayleighDataMatrix add_noise(const RayleighDataMatrix& U, const NoiseSpec& spec) {
  spec.validate();
  RayleighDataMatrix out = U;
  const double unorm = U.frobenius_norm();
  if (spec.delta == 0.0 || unorm == 0.0) return out;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<Vec3c> N(U.raw().size());
  double nnorm2 = 0.0;
  for (Vec3c& v : N) {
    for (int a = 0; a < 3; ++a) {
      const double re = uniform(rng);
      const double im = uniform(rng);
      v[a] = Complex(re, im);
      nnorm2 += re * re + im * im;
    }
  }
  const double scale = spec.delta * unorm / std::sqrt(nnorm2);
  for (std::size_t i = 0; i < N.size(); ++i) out.raw()[i] += scale * N[i];
  return out;
}

}  // namespace periscat
