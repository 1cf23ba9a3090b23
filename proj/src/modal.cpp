#include "periscat/modal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace periscat {
namespace {

constexpr double kWoodRelTol = 1e-12;

std::string describe(ModeIndex j) {
  std::ostringstream os;
  os << "(" << j.j1 << ", " << j.j2 << ")";
  return os.str();
}

}  // namespace

void WaveParameters::validate() const {
  if (!(k > 0.0) || !std::isfinite(k)) throw std::invalid_argument("wavenumber k must be positive");
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("half height h must be positive");
  if (!std::isfinite(alpha1) || !std::isfinite(alpha2))
    throw std::invalid_argument("quasiperiodicity parameters must be finite");
}

Vec3 alpha_vec(const WaveParameters& params, ModeIndex j) {
  return {params.alpha1 + j.j1, params.alpha2 + j.j2, 0.0};
}

Complex beta(const WaveParameters& params, ModeIndex j) {
  const double a1 = params.alpha1 + j.j1;
  const double a2 = params.alpha2 + j.j2;
  const double norm = std::hypot(a1, a2);
  if (std::abs(params.k - norm) < kWoodRelTol * params.k) return {0.0, 0.0};
  // (k - |a|)(k + |a|) keeps the difference accurate near the light cone.
  const double disc = (params.k - norm) * (params.k + norm);
  if (disc >= 0.0) return {std::sqrt(disc), 0.0};
  return {0.0, std::sqrt(-disc)};
}

bool is_wood_anomaly(const WaveParameters& params, ModeIndex j) {
  const double norm = std::hypot(params.alpha1 + j.j1, params.alpha2 + j.j2);
  return std::abs(params.k - norm) < kWoodRelTol * params.k;
}

Complex beta_checked(const WaveParameters& params, ModeIndex j) {
  if (is_wood_anomaly(params, j))
    throw WoodAnomalyError("Wood's anomaly: beta vanishes for mode " + describe(j));
  return beta(params, j);
}

Complex gamma(const WaveParameters& params, int axis, ModeIndex j, Side side) {
  switch (axis) {
    case 1: return {params.alpha1 + j.j1, 0.0};
    case 2: return {params.alpha2 + j.j2, 0.0};
    case 3: return sign(side) * beta(params, j);
    default: throw std::invalid_argument("gamma: axis must be 1, 2 or 3");
  }
}

Complex plane_wave(const WaveParameters& params, ModeIndex j, Side side, const Vec3& x) {
  const Vec3 a = alpha_vec(params, j);
  const double s = sign(side);
  const Complex phase = a[0] * x[0] + a[1] * x[1] + s * beta(params, j) * (x[2] - s * params.h);
  return std::exp(kI * phase);
}

ModeSet::ModeSet(const WaveParameters& params, std::vector<ModeIndex> indices) {
  params.validate();
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
    throw std::invalid_argument("mode list contains duplicates");
  modes_.reserve(indices.size());
  for (ModeIndex j : indices) {
    Mode m;
    m.index = j;
    m.alpha = alpha_vec(params, j);
    m.beta = beta_checked(params, j);
    m.propagating = m.beta.imag() == 0.0;
    modes_.push_back(m);
    j_max_ = std::max({j_max_, std::abs(j.j1), std::abs(j.j2)});
  }
}

std::size_t ModeSet::propagating_count() const {
  return static_cast<std::size_t>(
      std::count_if(modes_.begin(), modes_.end(), [](const Mode& m) { return m.propagating; }));
}

std::optional<std::size_t> ModeSet::find(ModeIndex j) const {
  auto it = std::lower_bound(modes_.begin(), modes_.end(), j,
                             [](const Mode& m, ModeIndex key) { return m.index < key; });
  if (it == modes_.end() || it->index != j) return std::nullopt;
  return static_cast<std::size_t>(it - modes_.begin());
}

std::vector<ModeIndex> ModeSet::indices() const {
  std::vector<ModeIndex> out;
  out.reserve(modes_.size());
  for (const Mode& m : modes_) out.push_back(m.index);
  return out;
}

ModeSet build_mode_set(const WaveParameters& params, int j_max, bool include_evanescent) {
  params.validate();
  if (j_max < 0) throw std::invalid_argument("J_max must be nonnegative");
  std::vector<ModeIndex> indices;
  for (int j1 = -j_max; j1 <= j_max; ++j1) {
    for (int j2 = -j_max; j2 <= j_max; ++j2) {
      const ModeIndex j{j1, j2};
      if (is_wood_anomaly(params, j))
        throw WoodAnomalyError("Wood's anomaly: beta vanishes for mode " + describe(j));
      if (!include_evanescent && beta(params, j).imag() != 0.0) continue;
      indices.push_back(j);
    }
  }
  return ModeSet(params, std::move(indices));
}

}  // namespace periscat
