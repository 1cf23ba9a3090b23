#include "periscat/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "lateral.hpp"
#include "periscat/diagnostics.hpp"
#include "periscat/parallel.hpp"

namespace periscat {
namespace {

constexpr double kWeightDropRatio = 1e-14;

void check_exponent(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("exponent p must be positive");
}

void check_same_setting(const WaveParameters& a, const WaveParameters& b) {
  auto differs = [](double x, double y) { return std::abs(x - y) > 1e-12 * std::max(1.0, std::abs(x)); };
  if (differs(a.k, b.k) || differs(a.alpha1, b.alpha1) || differs(a.alpha2, b.alpha2) || differs(a.h, b.h))
    throw ModeMismatchError("data were generated for different wave parameters");
}

// Positions of `modes` inside U's mode set.
std::vector<std::size_t> locate_modes(const RayleighDataMatrix& U, const ModeSet& modes) {
  std::vector<std::size_t> out;
  out.reserve(modes.size());
  for (const Mode& m : modes) {
    const auto at = U.modes().find(m.index);
    if (!at) {
      std::ostringstream os;
      os << "mode (" << m.index.j1 << ", " << m.index.j2 << ") is missing from the data";
      throw ModeMismatchError(os.str());
    }
    out.push_back(*at);
  }
  return out;
}

Mat3c weight_block(const WaveParameters& params, const Mode& m, Side s) {
  const Vec3c gam(m.alpha[0], m.alpha[1], sign(s) * m.beta);
  return Mat3c::Identity() - gam * gam.transpose() / (params.k * params.k);
}

// conj(r_j^side(z)) without its lateral factor exp(i alpha_j . z).
Complex vertical_conj_r(const WaveParameters& params, const Mode& m, Side s, double z3) {
  return std::conj(kI / (8.0 * kPi * kPi * m.beta) * std::exp(kI * m.beta * (params.h - sign(s) * z3)));
}

// S(z, l) = sum_j sum_side sgn_side conj(r_j^side(z)) c_j^side(l), with
// sgn_minus the sign of the lower-side terms; values += sum_l |S|^p.
// coeff layout: [side_slot][mode][source]; scale[side_slot][mode] bounds |c|.
void synthesize(const WaveParameters& params, const ModeSet& modes, const SamplingGrid& grid, std::size_t n_sources,
                const std::vector<Vec3c>& coeff, const std::vector<double>& scale, double sgn_minus, double p,
                std::vector<double>& values) {
  const detail::LateralIndex index(modes);
  const std::size_t M = modes.size();
  const std::size_t nj2 = index.j2.size();
  const std::vector<double> x1 = grid.axis(0), x2 = grid.axis(1), x3 = grid.axis(2);
  const std::size_t plane = static_cast<std::size_t>(grid.n[0]) * grid.n[1];
  values.assign(grid.size(), 0.0);

  parallel_for(static_cast<std::size_t>(grid.n[2]), [&](std::size_t i3) {
    std::array<std::vector<Complex>, 2> rho;
    double wmax = 0.0;
    for (Side s : kSides) {
      rho[side_slot(s)].resize(M);
      for (std::size_t m = 0; m < M; ++m) {
        rho[side_slot(s)][m] = vertical_conj_r(params, modes[m], s, x3[i3]);
        wmax = std::max(wmax, std::abs(rho[side_slot(s)][m]) * scale[side_slot(s) * M + m]);
      }
    }
    std::array<std::vector<char>, 2> keep;
    for (Side s : kSides) {
      keep[side_slot(s)].resize(M);
      for (std::size_t m = 0; m < M; ++m)
        keep[side_slot(s)][m] = std::abs(rho[side_slot(s)][m]) * scale[side_slot(s) * M + m] >= kWeightDropRatio * wmax;
    }

    std::vector<Vec3c> X(index.j1.size() * nj2);
    std::vector<Vec3c> S;
    double* level = &values[i3 * plane];
    for (std::size_t l = 0; l < n_sources; ++l) {
      std::fill(X.begin(), X.end(), Vec3c::Zero());
      for (std::size_t m = 0; m < M; ++m) {
        Vec3c& x = X[static_cast<std::size_t>(index.pos1[m]) * nj2 + index.pos2[m]];
        if (keep[0][m]) x += rho[0][m] * coeff[(0 * M + m) * n_sources + l];
        if (keep[1][m]) x += sgn_minus * rho[1][m] * coeff[(1 * M + m) * n_sources + l];
      }
      detail::lateral_synthesis(params, index, X, x1, x2, S);
      for (std::size_t i = 0; i < plane; ++i) level[i] += std::pow(S[i].norm(), p);
    }
  });
}

ModeSet propagating_modes(const WaveParameters& params) {
  const double a = std::max(std::abs(params.alpha1), std::abs(params.alpha2));
  return build_mode_set(params, static_cast<int>(std::ceil(params.k + a)) + 1, false);
}

}  // namespace

SamplingGrid::SamplingGrid(const Box& b, const std::array<int, 3>& dims) : box(b), n(dims) {
  for (int a = 0; a < 3; ++a)
    if (n[a] < 1) throw std::invalid_argument("sampling grid sizes must be positive");
  if (!(box.extent().minCoeff() > 0.0)) throw std::invalid_argument("sampling grid box must have positive extent");
}

SamplingGrid SamplingGrid::domain(const WaveParameters& params, const std::array<int, 3>& dims) {
  return SamplingGrid(Box{Vec3(-kPi, -kPi, -params.h), Vec3(kPi, kPi, params.h)}, dims);
}

Vec3 SamplingGrid::spacing() const { return box.extent().cwiseQuotient(Vec3(n[0], n[1], n[2])); }

Vec3 SamplingGrid::point(int i1, int i2, int i3) const {
  return box.lo + spacing().cwiseProduct(Vec3(i1 + 0.5, i2 + 0.5, i3 + 0.5));
}

Vec3 SamplingGrid::point(std::size_t idx) const {
  const int i1 = static_cast<int>(idx % n[0]);
  const int i2 = static_cast<int>((idx / n[0]) % n[1]);
  const int i3 = static_cast<int>(idx / (static_cast<std::size_t>(n[0]) * n[1]));
  return point(i1, i2, i3);
}

std::vector<double> SamplingGrid::axis(int a) const {
  std::vector<double> out(n[a]);
  const double h = box.extent()[a] / n[a];
  for (int i = 0; i < n[a]; ++i) out[i] = box.lo[a] + (i + 0.5) * h;
  return out;
}

std::string to_string(FunctionalKind kind) {
  switch (kind) {
    case FunctionalKind::New: return "new";
    case FunctionalKind::Osm: return "osm";
    case FunctionalKind::TheoremRhs: return "theorem-rhs";
  }
  return "unknown";
}

double ImagingResult::max() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

std::size_t ImagingResult::argmax() const {
  if (values.empty()) throw std::logic_error("argmax of an empty field");
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::vector<ModeWeight> mode_weights(const WaveParameters& params, const ModeSet& modes, const Vec3& z) {
  const GreenModalCoefficients coeffs(params, modes, z);
  std::vector<ModeWeight> out(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const Mode& m = modes[i];
    const double rb = 2.0 * m.beta.real();
    for (Side s : kSides) {
      const Mat3c& g = coeffs.g(i, s);
      const Mat3c& h = coeffs.h(i, s);
      const Vec3c gam(m.alpha[0], m.alpha[1], sign(s) * m.beta);
      out[i].W[side_slot(s)] = (h - sign(s) * rb * g).adjoint();
      out[i].V[side_slot(s)] = g.adjoint() * gam;
    }
  }
  return out;
}

ImagingResult imaging_functional(const RayleighDataMatrix& U, const SamplingGrid& grid, const WaveParameters& params,
                                 const ModeSet& modes, double p) {
  check_exponent(p);
  params.validate();
  check_same_setting(U.params(), params);
  const std::vector<std::size_t> at = locate_modes(U, modes);
  const std::size_t M = modes.size(), L = U.n_sources();

  // T_j u = conj(r_j(z)) (A_j u + u_3 b_j) with z-independent A_j, b_j.
  std::vector<Vec3c> coeff(2 * M * L);
  std::vector<double> scale(2 * M);
  for (std::size_t m = 0; m < M; ++m) {
    const Mode& mode = modes[m];
    const double rb = 2.0 * mode.beta.real();
    for (Side s : kSides) {
      const Mat3c G = weight_block(params, mode, s);
      const Vec3c gam(mode.alpha[0], mode.alpha[1], sign(s) * mode.beta);
      const Mat3c H = gam * G.row(2);
      const Mat3c A = (H - sign(s) * rb * G).adjoint();
      const Vec3c b = G.adjoint() * gam;
      scale[side_slot(s) * M + m] = A.norm() + b.norm();
      for (std::size_t l = 0; l < L; ++l) {
        const Vec3c& u = U.at(s, at[m], l);
        coeff[(side_slot(s) * M + m) * L + l] = A * u + u[2] * b;
      }
    }
  }

  ImagingResult res;
  res.grid = grid;
  res.p = p;
  res.kind = FunctionalKind::New;
  res.mode_count = M;
  if (M > 0) synthesize(params, modes, grid, L, coeff, scale, -1.0, p, res.values);
  else res.values.assign(grid.size(), 0.0);
  return res;
}

double imaging_functional_at(const RayleighDataMatrix& U, const WaveParameters& params, const ModeSet& modes,
                             const Vec3& z, double p) {
  check_exponent(p);
  check_same_setting(U.params(), params);
  const std::vector<std::size_t> at = locate_modes(U, modes);
  const std::vector<ModeWeight> w = mode_weights(params, modes, z);
  double total = 0.0;
  for (std::size_t l = 0; l < U.n_sources(); ++l) {
    Vec3c acc = Vec3c::Zero();
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const Vec3c& up = U.at(Side::Plus, at[m], l);
      const Vec3c& um = U.at(Side::Minus, at[m], l);
      acc += w[m].W[0] * up + up[2] * w[m].V[0] - w[m].W[1] * um - um[2] * w[m].V[1];
    }
    total += std::pow(acc.norm(), p);
  }
  return total;
}

double theorem_rhs(const WaveParameters& params, const VoxelGrid& grid, const std::vector<Mat3>& contrast,
                   const std::vector<VectorField>& fields, const Vec3& z, double p) {
  check_exponent(p);
  if (contrast.size() != grid.size()) throw std::invalid_argument("contrast does not match the grid");
  const FKernel F(params);
  const double vol = grid.cell_volume();
  std::vector<Vec3c> acc(fields.size(), Vec3c::Zero());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (contrast[i].isZero(0.0)) continue;
    const Mat3c K = F.big_f(z, grid.center(i)) * contrast[i].cast<Complex>();
    for (std::size_t l = 0; l < fields.size(); ++l) acc[l] += K * fields[l][i];
  }
  const double c = params.k * params.k / (2.0 * kPi * kPi) * vol;
  double total = 0.0;
  for (const Vec3c& v : acc) total += std::pow((c * v).norm(), p);
  return total;
}

ImagingResult theorem_rhs_field(const WaveParameters& params, const VoxelGrid& grid,
                                const std::vector<Mat3>& contrast, const std::vector<VectorField>& fields,
                                const SamplingGrid& sampling, double p) {
  check_exponent(p);
  params.validate();
  if (contrast.size() != grid.size()) throw std::invalid_argument("contrast does not match the grid");
  const ModeSet modes = propagating_modes(params);
  const detail::LateralIndex index(modes);
  const std::size_t M = modes.size(), L = fields.size();
  const std::size_t nj2 = index.j2.size();
  const int n3 = grid.n[2];
  const double k2 = params.k * params.k;
  const double vol = grid.cell_volume();

  std::vector<double> y3(n3);
  for (int i = 0; i < n3; ++i) y3[i] = grid.center(0, 0, i)[2];

  // C_j = sum_y exp(-i alpha_j.y) cos(beta_j y3) w(y), S_j likewise with sin.
  std::vector<Vec3c> C(M * L), S(M * L);
  for (std::size_t l = 0; l < L; ++l) {
    if (fields[l].size() != grid.size()) throw std::invalid_argument("field does not match the grid");
    VectorField w(grid.size(), Vec3c::Zero());
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (!contrast[i].isZero(0.0)) w[i] = contrast[i].cast<Complex>() * fields[l][i];
    const std::vector<Vec3c> U = detail::lateral_transform(params, grid, w, index);
    for (std::size_t m = 0; m < M; ++m) {
      const double b = modes[m].beta.real();
      const Vec3c* u = &U[(static_cast<std::size_t>(index.pos1[m]) * nj2 + index.pos2[m]) * n3];
      Vec3c c = Vec3c::Zero(), s = Vec3c::Zero();
      for (int i3 = 0; i3 < n3; ++i3) {
        c += std::cos(b * y3[i3]) * u[i3];
        s += std::sin(b * y3[i3]) * u[i3];
      }
      C[m * L + l] = c;
      S[m * L + l] = s;
    }
  }

  std::vector<Mat3c> Mcc(M), Msc(M);
  for (std::size_t m = 0; m < M; ++m) {
    const double a[2] = {modes[m].alpha[0], modes[m].alpha[1]};
    const double b = modes[m].beta.real();
    Mcc[m].setZero();
    Msc[m].setZero();
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) Mcc[m](r, c) = (r == c ? 1.0 : 0.0) - a[r] * a[c] / k2;
      Msc[m](r, 2) = Msc[m](2, r) = -kI * a[r] * b / k2;
    }
    Mcc[m](2, 2) = 1.0 - b * b / k2;
  }

  ImagingResult res;
  res.grid = sampling;
  res.p = p;
  res.kind = FunctionalKind::TheoremRhs;
  res.mode_count = M;
  res.values.assign(sampling.size(), 0.0);
  const std::vector<double> z1 = sampling.axis(0), z2 = sampling.axis(1), z3 = sampling.axis(2);
  const std::size_t plane = static_cast<std::size_t>(sampling.n[0]) * sampling.n[1];
  const double pref = k2 / (2.0 * kPi * kPi) * vol / (8.0 * kPi * kPi);

  parallel_for(static_cast<std::size_t>(sampling.n[2]), [&](std::size_t i3) {
    std::vector<Vec3c> X(index.j1.size() * nj2);
    std::vector<Vec3c> out;
    double* level = &res.values[i3 * plane];
    for (std::size_t l = 0; l < L; ++l) {
      std::fill(X.begin(), X.end(), Vec3c::Zero());
      for (std::size_t m = 0; m < M; ++m) {
        const double b = modes[m].beta.real();
        const double cz = std::cos(b * z3[i3]), sz = std::sin(b * z3[i3]);
        const Vec3c& c = C[m * L + l];
        const Vec3c& s = S[m * L + l];
        X[static_cast<std::size_t>(index.pos1[m]) * nj2 + index.pos2[m]] =
            pref / b * (Mcc[m] * (cz * c + sz * s) + Msc[m] * (sz * c - cz * s));
      }
      detail::lateral_synthesis(params, index, X, z1, z2, out);
      for (std::size_t i = 0; i < plane; ++i) level[i] += std::pow(out[i].norm(), p);
    }
  });
  return res;
}

ImagingResult osm_functional(const RayleighDataMatrix& U, const SamplingGrid& grid, const WaveParameters& params,
                             const Vec3c& q, double rho, double p) {
  check_exponent(p);
  params.validate();
  check_same_setting(U.params(), params);
  if (!(rho >= params.h)) throw std::invalid_argument("OSM surfaces need rho >= h");
  const ModeSet& modes = U.modes();
  const std::size_t M = modes.size(), L = U.n_sources();
  std::vector<Vec3c> coeff(2 * M * L, Vec3c::Zero());
  std::vector<double> scale(2 * M);
  for (std::size_t m = 0; m < M; ++m) {
    const double damp = std::exp(-2.0 * modes[m].beta.imag() * (rho - params.h));
    for (Side s : kSides) {
      scale[side_slot(s) * M + m] = 4.0 * kPi * kPi * damp;
      for (std::size_t l = 0; l < L; ++l) {
        const Vec3c& u = U.at(s, m, l);
        coeff[(side_slot(s) * M + m) * L + l][0] = 4.0 * kPi * kPi * damp * (u.transpose() * q)(0);
      }
    }
  }
  ImagingResult res;
  res.grid = grid;
  res.p = p;
  res.kind = FunctionalKind::Osm;
  res.mode_count = M;
  if (M > 0) synthesize(params, modes, grid, L, coeff, scale, 1.0, p, res.values);
  else res.values.assign(grid.size(), 0.0);
  return res;
}

double osm_functional_direct(const std::vector<std::array<TraceSamples, 2>>& traces, const GreenKernel& kernel,
                             const Vec3& z, const Vec3c& q, double p) {
  check_exponent(p);
  // conj(Phi(x, z)) dA per plane, shared by every source measured on the same plane
  std::array<std::vector<Complex>, 2> weight;
  std::array<std::pair<int, double>, 2> layout{};
  double total = 0.0;
  for (const auto& planes : traces) {
    Complex acc = 0.0;
    for (std::size_t s = 0; s < 2; ++s) {
      const TraceSamples& t = planes[s];
      if (weight[s].empty() || layout[s] != std::make_pair(t.n, t.height)) {
        const std::vector<Vec3> pts = trace_points(t.n, t.height);
        const double dA = (kTwoPi / t.n) * (kTwoPi / t.n);
        weight[s].resize(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) weight[s][i] = std::conj(kernel.phi(pts[i], z)) * dA;
        layout[s] = {t.n, t.height};
      }
      if (t.values.size() != weight[s].size()) throw std::invalid_argument("trace samples must form an n x n grid");
      for (std::size_t i = 0; i < weight[s].size(); ++i) acc += (t.values[i].transpose() * q)(0) * weight[s][i];
    }
    total += std::pow(std::abs(acc), p);
  }
  return total;
}

Mask isosurface_mask(const ImagingResult& field, double fraction) {
  if (field.values.empty()) throw std::invalid_argument("isosurface of an empty field");
  const double peak = field.max();
  Mask mask(field.values.size(), 0);
  if (!(peak > 0.0)) {
    warn("imaging field is identically zero; isosurface mask is empty");
    return mask;
  }
  const double iso = fraction * peak;
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = field.values[i] >= iso ? 1 : 0;
  return mask;
}

Mask rasterize(const PermittivityModel& model, const SamplingGrid& grid) {
  Mask mask(grid.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = model.contains(grid.point(i)) ? 1 : 0;
  return mask;
}

std::vector<Component> connected_components(const Mask& mask, const SamplingGrid& grid) {
  if (mask.size() != grid.size()) throw std::invalid_argument("mask does not match the grid");
  std::vector<int> label(mask.size(), -1);
  std::vector<Component> comps;
  const int n1 = grid.n[0], n2 = grid.n[1], n3 = grid.n[2];
  for (std::size_t seed = 0; seed < mask.size(); ++seed) {
    if (!mask[seed] || label[seed] >= 0) continue;
    Component c;
    std::queue<std::size_t> todo;
    label[seed] = static_cast<int>(comps.size());
    todo.push(seed);
    while (!todo.empty()) {
      const std::size_t idx = todo.front();
      todo.pop();
      c.cells.push_back(idx);
      const int i1 = static_cast<int>(idx % n1);
      const int i2 = static_cast<int>((idx / n1) % n2);
      const int i3 = static_cast<int>(idx / (static_cast<std::size_t>(n1) * n2));
      const int nb[6][3] = {{i1 - 1, i2, i3}, {i1 + 1, i2, i3}, {i1, i2 - 1, i3},
                            {i1, i2 + 1, i3}, {i1, i2, i3 - 1}, {i1, i2, i3 + 1}};
      for (const auto& v : nb) {
        if (v[0] < 0 || v[0] >= n1 || v[1] < 0 || v[1] >= n2 || v[2] < 0 || v[2] >= n3) continue;
        const std::size_t j = grid.index(v[0], v[1], v[2]);
        if (!mask[j] || label[j] >= 0) continue;
        label[j] = static_cast<int>(comps.size());
        todo.push(j);
      }
    }
    std::sort(c.cells.begin(), c.cells.end());
    for (std::size_t idx : c.cells) c.centroid += grid.point(idx);
    c.centroid /= static_cast<double>(c.cells.size());
    comps.push_back(std::move(c));
  }
  std::stable_sort(comps.begin(), comps.end(),
                   [](const Component& a, const Component& b) { return a.cells.size() > b.cells.size(); });
  return comps;
}

Vec3 mask_centroid(const Mask& mask, const SamplingGrid& grid) {
  if (mask.size() != grid.size()) throw std::invalid_argument("mask does not match the grid");
  Vec3 sum = Vec3::Zero();
  std::size_t count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    sum += grid.point(i);
    ++count;
  }
  if (count == 0) return Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
  return sum / static_cast<double>(count);
}

double mask_fraction(const Mask& mask) {
  if (mask.empty()) return 0.0;
  return static_cast<double>(std::count(mask.begin(), mask.end(), 1)) / static_cast<double>(mask.size());
}

double jaccard(const Mask& a, const Mask& b) {
  if (a.size() != b.size()) throw std::invalid_argument("masks differ in size");
  std::size_t both = 0, either = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    both += (a[i] && b[i]) ? 1 : 0;
    either += (a[i] || b[i]) ? 1 : 0;
  }
  return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

}  // namespace periscat
