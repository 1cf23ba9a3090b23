#pragma once

#include <cstdint>

#include "periscat/forward.hpp"

namespace periscat {

struct NoiseSpec {
  double delta = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

/// U + delta |U|_F N / |N|_F, where N has independent entries whose real and
/// imaginary parts are uniform on [-1, 1], drawn from mt19937_64(seed) in
/// storage order. delta = 0 returns U unchanged.
RayleighDataMatrix add_noise(const RayleighDataMatrix& U, const NoiseSpec& spec);

}  // namespace periscat
