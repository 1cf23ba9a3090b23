#pragma once

#include <compare>
#include <optional>
#include <vector>

#include "periscat/types.hpp"

namespace periscat {

/// Wave setting of a biperiodic medium with period 2 pi in x1 and x2.
/// `h` is the half height of the slab Omega_h = (-pi, pi)^2 x (-h, h).
struct WaveParameters {
  double k = kTwoPi;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double h = 1.0;

  /// Throws std::invalid_argument unless k > 0 and h > 0.
  void validate() const;
};

struct ModeIndex {
  int j1 = 0;
  int j2 = 0;

  auto operator<=>(const ModeIndex&) const = default;
};

/// Lateral wave vector (alpha1 + j1, alpha2 + j2, 0).
Vec3 alpha_vec(const WaveParameters& params, ModeIndex j);

/// Propagation constant: sqrt(k^2 - |alpha_j|^2) on the real branch when
/// |alpha_j| <= k, i sqrt(|alpha_j|^2 - k^2) otherwise. Zero exactly at a
/// Wood's anomaly; use beta_checked where the value is divided by.
Complex beta(const WaveParameters& params, ModeIndex j);

/// True when |k - |alpha_j|| < 1e-12 k.
bool is_wood_anomaly(const WaveParameters& params, ModeIndex j);

/// beta() that throws WoodAnomalyError at an anomaly.
Complex beta_checked(const WaveParameters& params, ModeIndex j);

/// gamma_{n,j}: alpha_{n,j} for axis n = 1, 2 and +-beta_j for n = 3.
Complex gamma(const WaveParameters& params, int axis, ModeIndex j, Side side);

/// exp(i(alpha_{1,j} x1 + alpha_{2,j} x2 +- beta_j (x3 -+ h))).
Complex plane_wave(const WaveParameters& params, ModeIndex j, Side side, const Vec3& x);

struct Mode {
  ModeIndex index;
  Vec3 alpha;
  Complex beta;
  bool propagating = false;
};

/// Truncated, lexicographically ordered collection of Rayleigh modes.
/// Immutable after construction.
class ModeSet {
 public:
  ModeSet() = default;

  /// Builds the set from an explicit list; the list is sorted and checked
  /// for duplicates and Wood's anomalies.
  ModeSet(const WaveParameters& params, std::vector<ModeIndex> indices);

  const std::vector<Mode>& modes() const { return modes_; }
  std::size_t size() const { return modes_.size(); }
  const Mode& operator[](std::size_t i) const { return modes_[i]; }
  auto begin() const { return modes_.begin(); }
  auto end() const { return modes_.end(); }

  /// Sup-norm bound max(|j1|, |j2|) over the set.
  int j_max() const { return j_max_; }
  std::size_t propagating_count() const;

  std::optional<std::size_t> find(ModeIndex j) const;

  std::vector<ModeIndex> indices() const;

 private:
  std::vector<Mode> modes_;
  int j_max_ = 0;
};

/// All j with max(|j1|, |j2|) <= j_max, or only the propagating ones among
/// them when include_evanescent is false.
ModeSet build_mode_set(const WaveParameters& params, int j_max, bool include_evanescent);

}  // namespace periscat
