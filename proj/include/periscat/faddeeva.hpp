#pragma once

#include "periscat/types.hpp"

namespace periscat::special {

// Faddeeva function w(z) = exp(-z^2) erfc(-iz), accurate to roughly 1e-13
// relative for the moderate arguments produced by the Ewald splitting.
Complex faddeeva_w(Complex z);

// Complementary error function of a complex argument.
Complex erfc(Complex z);

}  // namespace periscat::special
