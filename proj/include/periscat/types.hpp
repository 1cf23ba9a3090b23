#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace periscat {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Vec3c = Eigen::Vector3cd;
using Mat3 = Eigen::Matrix3d;
using Mat3c = Eigen::Matrix3cd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

// Upper (x3 > h) or lower (x3 < -h) half space of a Rayleigh expansion.
enum class Side : int { Plus = 1, Minus = -1 };

inline constexpr double sign(Side s) { return s == Side::Plus ? 1.0 : -1.0; }
inline constexpr int side_slot(Side s) { return s == Side::Plus ? 0 : 1; }
inline constexpr Side kSides[2] = {Side::Plus, Side::Minus};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Some beta_j vanishes: the modal Green's function is undefined.
class WoodAnomalyError : public Error {
 public:
  using Error::Error;
};

// Kernel evaluated on the singular lattice x - y = (2 pi m1, 2 pi m2, 0).
class SingularPointError : public Error {
 public:
  using Error::Error;
};

// Modal series requested at x3 == y3, where it does not converge.
class CoincidentHeightError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class ModeMismatchError : public Error {
 public:
  using Error::Error;
};

class DataFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace periscat
