#include "periscat/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace periscat {
namespace {

void check_spd(const Mat3& m, const char* what) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    throw std::invalid_argument(std::string(what) + " must be symmetric");
  Eigen::LLT<Mat3> llt(m);
  if (llt.info() != Eigen::Success) throw std::invalid_argument(std::string(what) + " must be positive definite");
}

Box shape_support(const Shape& shape) {
  struct Visitor {
    Box operator()(const RingShape& r) const {
      return {Vec3(-r.r_outer, -r.r_outer, -r.half_height), Vec3(r.r_outer, r.r_outer, r.half_height)};
    }
    Box operator()(const SpheresShape& s) const {
      if (s.centers.empty()) throw std::invalid_argument("sphere model needs at least one center");
      Vec3 lo = s.centers.front(), hi = s.centers.front();
      for (const Vec3& c : s.centers) {
        lo = lo.cwiseMin(c);
        hi = hi.cwiseMax(c);
      }
      const Vec3 r = Vec3::Constant(s.radius);
      return {lo - r, hi + r};
    }
    Box operator()(const CubeShape& c) const { return {-c.half_extent, c.half_extent}; }
    Box operator()(const VoxelTable& t) const { return t.box; }
  };
  return std::visit(Visitor{}, shape);
}

void validate_shape(const Shape& shape) {
  if (const auto* r = std::get_if<RingShape>(&shape)) {
    if (!(r->r_inner >= 0.0 && r->r_outer > r->r_inner && r->half_height > 0.0))
      throw std::invalid_argument("ring needs 0 <= r_inner < r_outer and half_height > 0");
  } else if (const auto* s = std::get_if<SpheresShape>(&shape)) {
    if (!(s->radius > 0.0)) throw std::invalid_argument("sphere radius must be positive");
  } else if (const auto* c = std::get_if<CubeShape>(&shape)) {
    if (!(c->half_extent.minCoeff() > 0.0)) throw std::invalid_argument("cube half extents must be positive");
  } else if (const auto* t = std::get_if<VoxelTable>(&shape)) {
    for (int a = 0; a < 3; ++a)
      if (t->n[a] < 1) throw std::invalid_argument("voxel table sizes must be positive");
    if (!(t->box.extent().minCoeff() > 0.0)) throw std::invalid_argument("voxel table box must have positive extent");
    const std::size_t cells = static_cast<std::size_t>(t->n[0]) * t->n[1] * t->n[2];
    if (t->eps.size() != cells) throw std::invalid_argument("voxel table size does not match its dimensions");
    for (const Mat3& e : t->eps) check_spd(e, "voxel permittivity");
  }
}

}  // namespace

bool Box::contains(const Vec3& x) const {
  for (int a = 0; a < 3; ++a)
    if (x[a] < lo[a] || x[a] > hi[a]) return false;
  return true;
}

Vec3 wrap_to_cell(const Vec3& x) {
  Vec3 out = x;
  for (int a = 0; a < 2; ++a) {
    out[a] = x[a] - kTwoPi * std::floor((x[a] + kPi) / kTwoPi);
    if (out[a] >= kPi) out[a] -= kTwoPi;
  }
  return out;
}

Vec3 VoxelTable::spacing() const {
  return box.extent().cwiseQuotient(Vec3(n[0], n[1], n[2]));
}

Vec3 VoxelTable::center(int i1, int i2, int i3) const {
  return box.lo + spacing().cwiseProduct(Vec3(i1 + 0.5, i2 + 0.5, i3 + 0.5));
}

const Mat3& VoxelTable::at(int i1, int i2, int i3) const {
  return eps[static_cast<std::size_t>(i1) + static_cast<std::size_t>(n[0]) * (i2 + static_cast<std::size_t>(n[1]) * i3)];
}

Mat3 default_eps_inside() { return Vec3(1.3, 1.5, 1.4).asDiagonal(); }

PermittivityModel::PermittivityModel(Shape shape, const Mat3& eps_inside, double h)
    : shape_(std::move(shape)), eps_inside_(eps_inside), h_(h) {
  if (!(h > 0.0)) throw std::invalid_argument("h must be positive");
  validate_shape(shape_);
  if (!std::holds_alternative<VoxelTable>(shape_)) check_spd(eps_inside_, "eps_inside");
  support_ = shape_support(shape_);
  for (int a = 0; a < 2; ++a)
    if (support_.lo[a] <= -kPi || support_.hi[a] >= kPi)
      throw std::invalid_argument("scatterer support must lie inside (-pi, pi)^2 laterally");
  if (support_.lo[2] <= -h || support_.hi[2] >= h)
    throw std::invalid_argument("scatterer support must lie inside |x3| < h");
}

PermittivityModel PermittivityModel::ring(const Mat3& eps) { return PermittivityModel(RingShape{}, eps); }
PermittivityModel PermittivityModel::spheres(const Mat3& eps) { return PermittivityModel(SpheresShape{}, eps); }
PermittivityModel PermittivityModel::cube(const Mat3& eps) { return PermittivityModel(CubeShape{}, eps); }

PermittivityModel PermittivityModel::point(const Vec3& c, const Vec3& size, const Mat3& eps, double h) {
  VoxelTable t;
  t.box = {c - 0.5 * size, c + 0.5 * size};
  t.n = {1, 1, 1};
  t.eps = {eps};
  return PermittivityModel(std::move(t), Mat3::Identity(), h);
}

bool PermittivityModel::contains_wrapped(const Vec3& x) const {
  struct Visitor {
    const Vec3& x;
    bool operator()(const RingShape& r) const {
      const double rho = std::hypot(x[0], x[1]);
      return rho >= r.r_inner && rho <= r.r_outer && std::abs(x[2]) <= r.half_height;
    }
    bool operator()(const SpheresShape& s) const {
      return std::any_of(s.centers.begin(), s.centers.end(),
                         [&](const Vec3& c) { return (x - c).norm() <= s.radius; });
    }
    bool operator()(const CubeShape& c) const { return (x.cwiseAbs() - c.half_extent).maxCoeff() <= 0.0; }
    bool operator()(const VoxelTable&) const { return false; }
  };
  return std::visit(Visitor{x}, shape_);
}

bool PermittivityModel::contains(const Vec3& x) const {
  if (std::holds_alternative<VoxelTable>(shape_)) return !(permittivity(x) - Mat3::Identity()).isZero(0.0);
  return contains_wrapped(wrap_to_cell(x));
}

Mat3 PermittivityModel::permittivity(const Vec3& x) const {
  const Vec3 w = wrap_to_cell(x);
  if (const auto* t = std::get_if<VoxelTable>(&shape_)) {
    if (!t->box.contains(w)) return Mat3::Identity();
    const Vec3 rel = (w - t->box.lo).cwiseQuotient(t->spacing());
    int idx[3];
    for (int a = 0; a < 3; ++a) idx[a] = std::clamp(static_cast<int>(std::floor(rel[a])), 0, t->n[a] - 1);
    return t->at(idx[0], idx[1], idx[2]);
  }
  return contains_wrapped(w) ? eps_inside_ : Mat3::Identity();
}

std::string PermittivityModel::name() const {
  struct Visitor {
    std::string operator()(const RingShape&) const { return "ring"; }
    std::string operator()(const SpheresShape&) const { return "spheres"; }
    std::string operator()(const CubeShape&) const { return "cube"; }
    std::string operator()(const VoxelTable&) const { return "voxel"; }
  };
  return std::visit(Visitor{}, shape_);
}

PermittivityModel PermittivityModel::scaled(double s) const {
  const Mat3 I = Mat3::Identity();
  if (const auto* t = std::get_if<VoxelTable>(&shape_)) {
    VoxelTable copy = *t;
    for (Mat3& e : copy.eps) e = I + s * (e - I);
    return PermittivityModel(std::move(copy), I, h_);
  }
  return PermittivityModel(shape_, I + s * (eps_inside_ - I), h_);
}

void SourcePlaneArray::validate(double h) const {
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("source counts per plane must be at least 1");
  if (!(std::abs(z_offset) > h)) throw std::invalid_argument("source planes must lie outside the slab |x3| <= h");
}

std::vector<Vec3> source_positions(const SourcePlaneArray& array) {
  if (array.n1 < 1 || array.n2 < 1) throw std::invalid_argument("source counts per plane must be at least 1");
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(array.count()));
  const double z = std::abs(array.z_offset);
  for (double x3 : {z, -z}) {
    for (int i2 = 0; i2 < array.n2; ++i2) {
      for (int i1 = 0; i1 < array.n1; ++i1) {
        out.emplace_back(-kPi + kTwoPi * (i1 + 0.5) / array.n1, -kPi + kTwoPi * (i2 + 0.5) / array.n2, x3);
      }
    }
  }
  return out;
}

Vec3c incident_field(const WaveParameters& params, const Vec3& y, const Vec3& x, const KernelTruncation& trunc) {
  return green_tensor_modal(params, x, y, trunc).col(2);
}

std::vector<Vec3c> incident_field_on_grid(const WaveParameters& params, const Vec3& y, const Box& box,
                                          const std::array<int, 3>& n, const KernelTruncation& trunc) {
  params.validate();
  trunc.validate();
  for (int a = 0; a < 3; ++a)
    if (n[a] < 1) throw std::invalid_argument("grid sizes must be positive");
  const Vec3 h = box.extent().cwiseQuotient(Vec3(n[0], n[1], n[2]));
  std::vector<double> x1(n[0]), x2(n[1]), x3(n[2]);
  for (int i = 0; i < n[0]; ++i) x1[i] = box.lo[0] + (i + 0.5) * h[0];
  for (int i = 0; i < n[1]; ++i) x2[i] = box.lo[1] + (i + 0.5) * h[1];
  for (int i = 0; i < n[2]; ++i) x3[i] = box.lo[2] + (i + 0.5) * h[2];

  const bool below = x3.back() < y[2];
  if (!below && !(x3.front() > y[2])) throw CoincidentHeightError("grid straddles the source height");
  const double s3 = below ? -1.0 : 1.0;
  const double dist_min = below ? y[2] - x3.back() : x3.front() - y[2];

  // Absolute tail target from the field magnitude at the nearest level.
  const Vec3 nearest(x1[n[0] / 2], x2[n[1] / 2], below ? x3.back() : x3.front());
  const double scale = incident_field(params, y, nearest, trunc).norm();
  const int J = modal_cutoff(params, dist_min, trunc.tail_tol * std::max(scale, 1e-300), true, trunc.modal_J);

  const int nj = 2 * J + 1;
  const double k2 = params.k * params.k;
  struct ModeData {
    Complex beta;
    Vec3c coeff;
  };
  std::vector<ModeData> modes(static_cast<std::size_t>(nj) * nj);
  for (int j1 = -J; j1 <= J; ++j1) {
    for (int j2 = -J; j2 <= J; ++j2) {
      const ModeIndex j{j1, j2};
      const Complex b = beta_checked(params, j);
      const double a1 = params.alpha1 + j1, a2 = params.alpha2 + j2;
      const Complex t = kI / (8.0 * kPi * kPi * b) * std::exp(-kI * (a1 * y[0] + a2 * y[1]));
      const Complex g3 = s3 * b;
      modes[static_cast<std::size_t>(j1 + J) * nj + (j2 + J)] = {
          b, Vec3c(-a1 * g3 / k2 * t, -a2 * g3 / k2 * t, (1.0 - g3 * g3 / k2) * t)};
    }
  }
  std::vector<Complex> e1(static_cast<std::size_t>(nj) * n[0]), e2(static_cast<std::size_t>(nj) * n[1]);
  for (int j = 0; j < nj; ++j) {
    for (int i = 0; i < n[0]; ++i) e1[j * n[0] + i] = std::exp(kI * (params.alpha1 + j - J) * x1[i]);
    for (int i = 0; i < n[1]; ++i) e2[j * n[1] + i] = std::exp(kI * (params.alpha2 + j - J) * x2[i]);
  }

  std::vector<Vec3c> out(static_cast<std::size_t>(n[0]) * n[1] * n[2]);
  std::vector<Vec3c> partial(static_cast<std::size_t>(nj) * n[1]);
  for (int i3 = 0; i3 < n[2]; ++i3) {
    const double dz = std::abs(x3[i3] - y[2]);
    std::fill(partial.begin(), partial.end(), Vec3c::Zero());
    for (int j1 = 0; j1 < nj; ++j1) {
      for (int j2 = 0; j2 < nj; ++j2) {
        const ModeData& m = modes[static_cast<std::size_t>(j1) * nj + j2];
        const Vec3c c = m.coeff * std::exp(kI * m.beta * dz);
        for (int i2 = 0; i2 < n[1]; ++i2) partial[static_cast<std::size_t>(j1) * n[1] + i2] += e2[j2 * n[1] + i2] * c;
      }
    }
    for (int i2 = 0; i2 < n[1]; ++i2) {
      for (int i1 = 0; i1 < n[0]; ++i1) {
        Vec3c v = Vec3c::Zero();
        for (int j1 = 0; j1 < nj; ++j1) v += e1[j1 * n[0] + i1] * partial[static_cast<std::size_t>(j1) * n[1] + i2];
        out[static_cast<std::size_t>(i1) + static_cast<std::size_t>(n[0]) * (i2 + static_cast<std::size_t>(n[1]) * i3)] = v;
      }
    }
  }
  return out;
}

}  // namespace periscat
