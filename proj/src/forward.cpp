#include "periscat/forward.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "periscat/diagnostics.hpp"
#include "periscat/parallel.hpp"
#include "lateral.hpp"

namespace periscat {
namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr int kComponents = 6;
constexpr int kCompRow[kComponents] = {0, 0, 0, 1, 1, 2};
constexpr int kCompCol[kComponents] = {0, 1, 2, 1, 2, 2};

int component(int a, int b) {
  if (a > b) std::swap(a, b);
  static constexpr int map[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
  return map[a][b];
}

Eigen::Map<Eigen::VectorXcd> flat(VectorField& f) {
  return {reinterpret_cast<Complex*>(f.data()), static_cast<Eigen::Index>(3 * f.size())};
}
Eigen::Map<const Eigen::VectorXcd> flat(const VectorField& f) {
  return {reinterpret_cast<const Complex*>(f.data()), static_cast<Eigen::Index>(3 * f.size())};
}

void check_grid(const WaveParameters& params, const VoxelGrid& grid) {
  for (int a = 0; a < 3; ++a)
    if (grid.n[a] < 1) throw std::invalid_argument("voxel grid sizes must be positive");
  const Vec3 e = grid.box.extent();
  if (!(e.minCoeff() > 0.0)) throw std::invalid_argument("voxel grid box must have positive extent");
  if (e[0] > kTwoPi || e[1] > kTwoPi) throw std::invalid_argument("voxel grid is wider than one period");
  if (grid.box.lo[2] < -params.h || grid.box.hi[2] > params.h)
    throw std::invalid_argument("voxel grid must lie inside |x3| <= h");
}

}  // namespace

VoxelGrid::VoxelGrid(const Box& b, const std::array<int, 3>& dims) : box(b), n(dims) {
  for (int a = 0; a < 3; ++a)
    if (n[a] < 1) throw std::invalid_argument("voxel grid sizes must be positive");
  if (!(box.extent().minCoeff() > 0.0)) throw std::invalid_argument("voxel grid box must have positive extent");
}

VoxelGrid VoxelGrid::around(const PermittivityModel& model, const std::array<int, 3>& dims, double h) {
  const Box& s = model.support();
  Box b;
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 3) throw std::invalid_argument("padded voxel grid needs at least 3 cells per axis");
    const double cell = (s.hi[a] - s.lo[a]) / (dims[a] - 2);
    b.lo[a] = s.lo[a] - cell;
    b.hi[a] = s.hi[a] + cell;
  }
  b.lo[0] = std::max(b.lo[0], -kPi);
  b.hi[0] = std::min(b.hi[0], kPi);
  b.lo[1] = std::max(b.lo[1], -kPi);
  b.hi[1] = std::min(b.hi[1], kPi);
  b.lo[2] = std::max(b.lo[2], -h);
  b.hi[2] = std::min(b.hi[2], h);
  return VoxelGrid(b, dims);
}

VoxelGrid VoxelGrid::around(const PermittivityModel& model, double max_spacing, double h) {
  if (!(max_spacing > 0.0)) throw std::invalid_argument("voxel spacing must be positive");
  const Vec3 e = model.support().extent();
  std::array<int, 3> dims{};
  for (int a = 0; a < 3; ++a) dims[a] = static_cast<int>(std::ceil(e[a] / max_spacing - 1e-9)) + 2;
  return around(model, dims, h);
}

double default_voxel_spacing(const WaveParameters& params) { return kTwoPi / params.k / 10.0; }

Vec3 VoxelGrid::spacing() const { return box.extent().cwiseQuotient(Vec3(n[0], n[1], n[2])); }

double VoxelGrid::cell_volume() const { return spacing().prod(); }

Vec3 VoxelGrid::center(int i1, int i2, int i3) const {
  return box.lo + spacing().cwiseProduct(Vec3(i1 + 0.5, i2 + 0.5, i3 + 0.5));
}

Vec3 VoxelGrid::center(std::size_t idx) const {
  const int i1 = static_cast<int>(idx % n[0]);
  const int i2 = static_cast<int>((idx / n[0]) % n[1]);
  const int i3 = static_cast<int>(idx / (static_cast<std::size_t>(n[0]) * n[1]));
  return center(i1, i2, i3);
}

double field_norm(const VectorField& f) { return flat(f).norm(); }

std::vector<Mat3> sample_contrast(const PermittivityModel& model, const VoxelGrid& grid) {
  std::vector<Mat3> out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = model.contrast(grid.center(i));
  return out;
}

struct LsOperator::Fft {
  std::array<int, 3> dims{};
  std::size_t total = 0;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::array<fftw_complex*, kComponents> kernel{};

  explicit Fft(const std::array<int, 3>& d) : dims(d) {
    total = static_cast<std::size_t>(d[0]) * d[1] * d[2];
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_complex* tmp = fftw_alloc_complex(total);
    forward = fftw_plan_dft_3d(d[2], d[1], d[0], tmp, tmp, FFTW_FORWARD, FFTW_ESTIMATE);
    backward = fftw_plan_dft_3d(d[2], d[1], d[0], tmp, tmp, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_free(tmp);
    for (auto& k : kernel) k = fftw_alloc_complex(total);
  }
  ~Fft() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    for (auto& k : kernel) fftw_free(k);
  }
};

Complex LsOperator::ball_self_term(double k, double cell_volume) {
  const double a = std::cbrt(3.0 * cell_volume / (4.0 * kPi));
  return 2.0 / 3.0 * (std::exp(kI * k * a) * (1.0 - kI * k * a) - 1.0) - 1.0 / 3.0;
}

LsOperator::LsOperator(const WaveParameters& params, const PermittivityModel& model, const VoxelGrid& grid,
                       const KernelTruncation& trunc)
    : LsOperator(params, [&] {
        const Box& s = model.support();
        const double slack = 1e-12 * (1.0 + grid.box.extent().norm());
        for (int a = 0; a < 3; ++a)
          if (s.lo[a] < grid.box.lo[a] - slack || s.hi[a] > grid.box.hi[a] + slack)
            throw std::invalid_argument("voxel grid does not cover the scatterer support");
        return sample_contrast(model, grid);
      }(), grid, trunc) {}

LsOperator::LsOperator(const WaveParameters& params, std::vector<Mat3> contrast, const VoxelGrid& grid,
                       const KernelTruncation& trunc)
    : params_(params), grid_(grid), contrast_(std::move(contrast)) {
  params_.validate();
  trunc.validate();
  check_grid(params_, grid_);
  if (contrast_.size() != grid_.size()) throw std::invalid_argument("contrast table does not match the grid");
  for (std::size_t i = 0; i < contrast_.size(); ++i)
    if (!contrast_[i].isZero(0.0)) active_.push_back(i);

  const double wavelength = kTwoPi / params_.k;
  if (grid_.spacing().maxCoeff() > wavelength / 10.0 * (1.0 + 1e-9)) {  // rounding slack
    std::ostringstream os;
    os << "voxel grid is coarse: spacing " << grid_.spacing().maxCoeff() << " exceeds a tenth of the wavelength "
       << wavelength;
    warn(os.str());
  }
  if (!active_.empty()) build(trunc);
}

LsOperator::~LsOperator() = default;

void LsOperator::build(const KernelTruncation& trunc) {
  const double k2 = params_.k * params_.k;
  const double vol = grid_.cell_volume();
  const EwaldSum ewald(params_, std::clamp(trunc.tail_tol, 1e-15, 1e-2));
  const std::vector<KernelValue> values = ewald.tabulate(grid_.spacing(), grid_.n);

  table_.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    table_[i] = vol * (k2 * values[i].phi * Mat3c::Identity() + values[i].hessian);
  const int N1 = 2 * grid_.n[0] - 1, N2 = 2 * grid_.n[1] - 1;
  const std::size_t origin =
      static_cast<std::size_t>(grid_.n[0] - 1) + N1 * ((grid_.n[1] - 1) + static_cast<std::size_t>(N2) * (grid_.n[2] - 1));
  table_[origin] += ball_self_term(params_.k, vol) * Mat3c::Identity();

  const std::array<int, 3> P{2 * grid_.n[0], 2 * grid_.n[1], 2 * grid_.n[2]};
  fft_ = std::make_unique<Fft>(P);
  for (int c = 0; c < kComponents; ++c) std::fill_n(reinterpret_cast<Complex*>(fft_->kernel[c]), fft_->total, Complex(0.0));
  for (int m3 = -(grid_.n[2] - 1); m3 <= grid_.n[2] - 1; ++m3) {
    for (int m2 = -(grid_.n[1] - 1); m2 <= grid_.n[1] - 1; ++m2) {
      for (int m1 = -(grid_.n[0] - 1); m1 <= grid_.n[0] - 1; ++m1) {
        const Mat3c& K = table_[static_cast<std::size_t>(m1 + grid_.n[0] - 1) +
                                N1 * ((m2 + grid_.n[1] - 1) + static_cast<std::size_t>(N2) * (m3 + grid_.n[2] - 1))];
        const std::size_t at = static_cast<std::size_t>((m1 + P[0]) % P[0]) +
                               P[0] * (static_cast<std::size_t>((m2 + P[1]) % P[1]) +
                                       static_cast<std::size_t>(P[1]) * ((m3 + P[2]) % P[2]));
        for (int c = 0; c < kComponents; ++c)
          reinterpret_cast<Complex*>(fft_->kernel[c])[at] = K(kCompRow[c], kCompCol[c]);
      }
    }
  }
  for (int c = 0; c < kComponents; ++c) fftw_execute_dft(fft_->forward, fft_->kernel[c], fft_->kernel[c]);
}

Mat3c LsOperator::kernel(int m1, int m2, int m3) const {
  const std::array<int, 3> m{m1, m2, m3};
  for (int a = 0; a < 3; ++a)
    if (std::abs(m[a]) > grid_.n[a] - 1) throw std::out_of_range("kernel offset outside the grid");
  if (table_.empty()) return Mat3c::Zero();
  const int N1 = 2 * grid_.n[0] - 1, N2 = 2 * grid_.n[1] - 1;
  return table_[static_cast<std::size_t>(m1 + grid_.n[0] - 1) +
                N1 * ((m2 + grid_.n[1] - 1) + static_cast<std::size_t>(N2) * (m3 + grid_.n[2] - 1))];
}

VectorField LsOperator::apply(const VectorField& E) const {
  if (E.size() != grid_.size()) throw std::invalid_argument("field size does not match the grid");
  VectorField out(E.size(), Vec3c::Zero());
  if (active_.empty()) return out;

  const std::array<int, 3>& P = fft_->dims;
  const std::size_t total = fft_->total;
  auto padded = [&](std::size_t idx) {
    const std::size_t i1 = idx % grid_.n[0];
    const std::size_t i2 = (idx / grid_.n[0]) % grid_.n[1];
    const std::size_t i3 = idx / (static_cast<std::size_t>(grid_.n[0]) * grid_.n[1]);
    return i1 + P[0] * (i2 + static_cast<std::size_t>(P[1]) * i3);
  };

  std::array<fftw_complex*, 3> w{};
  std::array<fftw_complex*, 3> o{};
  for (int a = 0; a < 3; ++a) {
    w[a] = fftw_alloc_complex(total);
    o[a] = fftw_alloc_complex(total);
    std::fill_n(reinterpret_cast<Complex*>(w[a]), total, Complex(0.0));
  }
  for (std::size_t idx : active_) {
    const Vec3c v = contrast_[idx].cast<Complex>() * E[idx];
    const std::size_t at = padded(idx);
    for (int a = 0; a < 3; ++a) reinterpret_cast<Complex*>(w[a])[at] = v[a];
  }
  for (int a = 0; a < 3; ++a) fftw_execute_dft(fft_->forward, w[a], w[a]);

  std::array<const Complex*, 3> W{};
  std::array<Complex*, 3> O{};
  std::array<const Complex*, kComponents> K{};
  for (int a = 0; a < 3; ++a) {
    W[a] = reinterpret_cast<const Complex*>(w[a]);
    O[a] = reinterpret_cast<Complex*>(o[a]);
  }
  for (int c = 0; c < kComponents; ++c) K[c] = reinterpret_cast<const Complex*>(fft_->kernel[c]);
  for (std::size_t i = 0; i < total; ++i) {
    for (int a = 0; a < 3; ++a) {
      O[a][i] = K[component(a, 0)][i] * W[0][i] + K[component(a, 1)][i] * W[1][i] + K[component(a, 2)][i] * W[2][i];
    }
  }
  for (int a = 0; a < 3; ++a) fftw_execute_dft(fft_->backward, o[a], o[a]);

  const double scale = 1.0 / static_cast<double>(total);
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    const std::size_t at = padded(idx);
    for (int a = 0; a < 3; ++a) out[idx][a] = O[a][at] * scale;
  }
  for (int a = 0; a < 3; ++a) {
    fftw_free(w[a]);
    fftw_free(o[a]);
  }
  return out;
}

VectorField LsOperator::apply_direct(const VectorField& E) const {
  if (E.size() != grid_.size()) throw std::invalid_argument("field size does not match the grid");
  VectorField out(E.size(), Vec3c::Zero());
  if (active_.empty()) return out;
  std::vector<Vec3c> w(active_.size());
  for (std::size_t s = 0; s < active_.size(); ++s) w[s] = contrast_[active_[s]].cast<Complex>() * E[active_[s]];
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    const int i1 = static_cast<int>(idx % grid_.n[0]);
    const int i2 = static_cast<int>((idx / grid_.n[0]) % grid_.n[1]);
    const int i3 = static_cast<int>(idx / (static_cast<std::size_t>(grid_.n[0]) * grid_.n[1]));
    Vec3c acc = Vec3c::Zero();
    for (std::size_t s = 0; s < active_.size(); ++s) {
      const std::size_t jdx = active_[s];
      const int j1 = static_cast<int>(jdx % grid_.n[0]);
      const int j2 = static_cast<int>((jdx / grid_.n[0]) % grid_.n[1]);
      const int j3 = static_cast<int>(jdx / (static_cast<std::size_t>(grid_.n[0]) * grid_.n[1]));
      acc += kernel(i1 - j1, i2 - j2, i3 - j3) * w[s];
    }
    out[idx] = acc;
  }
  return out;
}

VectorField ls_apply(const WaveParameters& params, const PermittivityModel& model, const VoxelGrid& grid,
                     const VectorField& E, const KernelTruncation& trunc) {
  return LsOperator(params, model, grid, trunc).apply(E);
}

void SolverSpec::validate() const {
  if (kind == Kind::Born && born_order < 1) throw std::invalid_argument("born_order must be at least 1");
  if (kind == Kind::Iterative) {
    if (!(tol > 0.0)) throw std::invalid_argument("solver tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("solver max_iter must be positive");
    if (restart < 1) throw std::invalid_argument("solver restart must be positive");
  }
}

namespace {

double relative_residual(const LsOperator& op, const VectorField& incident, const VectorField& E, double bnorm) {
  const VectorField LE = op.apply(E);
  return (flat(E) - flat(incident) - flat(LE)).norm() / bnorm;
}

SolveResult solve_born(const LsOperator& op, const VectorField& incident, int order) {
  SolveResult res;
  res.field = incident;
  VectorField term = incident;
  double prev = field_norm(incident);
  for (int n = 1; n < order; ++n) {
    term = op.apply(term);
    const double now = field_norm(term);
    if (now > prev) {
      std::ostringstream os;
      os << "Born series diverges: term " << n << " grew by a factor " << now / prev;
      throw ConvergenceError(os.str(), now / prev);
    }
    prev = now;
    flat(res.field) += flat(term);
    res.iterations = n;
  }
  res.residual = relative_residual(op, incident, res.field, field_norm(incident));
  return res;
}

// Restarted GMRES for (I - L) x = b with modified Gram-Schmidt and Givens
// rotations; x starts from b.
SolveResult solve_gmres(const LsOperator& op, const VectorField& b, const SolverSpec& spec) {
  using Vec = Eigen::VectorXcd;
  const double bnorm = field_norm(b);
  auto A = [&](const Vec& v) -> Vec {
    VectorField f(b.size());
    flat(f) = v;
    const VectorField Lf = op.apply(f);
    return v - flat(Lf);
  };

  Vec x = flat(b);
  Vec r = flat(b) - A(x);
  double rnorm = r.norm();
  int total = 0;
  const int m = spec.restart;
  while (rnorm / bnorm > spec.tol && total < spec.max_iter) {
    std::vector<Vec> V;
    V.reserve(m + 1);
    V.push_back(r / rnorm);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
    Vec g = Vec::Zero(m + 1);
    g[0] = rnorm;
    std::vector<double> cs(m);
    std::vector<Complex> sn(m);
    int used = 0;
    for (int j = 0; j < m && total < spec.max_iter; ++j) {
      Vec w = A(V[j]);
      ++total;
      for (int i = 0; i <= j; ++i) {
        H(i, j) = V[i].dot(w);
        w -= H(i, j) * V[i];
      }
      const double hnext = w.norm();
      H(j + 1, j) = hnext;
      for (int i = 0; i < j; ++i) {
        const Complex t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
        H(i + 1, j) = -std::conj(sn[i]) * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      const Complex a = H(j, j);
      const Complex bb = H(j + 1, j);
      const double t = std::sqrt(std::norm(a) + std::norm(bb));
      if (t == 0.0) {
        cs[j] = 1.0;
        sn[j] = 0.0;
      } else if (std::abs(a) == 0.0) {
        cs[j] = 0.0;
        sn[j] = 1.0;
      } else {
        cs[j] = std::abs(a) / t;
        sn[j] = a / std::abs(a) * std::conj(bb) / t;
      }
      H(j, j) = cs[j] * a + sn[j] * bb;
      H(j + 1, j) = 0.0;
      g[j + 1] = -std::conj(sn[j]) * g[j];
      g[j] = cs[j] * g[j];
      used = j + 1;
      if (hnext == 0.0 || std::abs(g[j + 1]) / bnorm <= spec.tol) break;
      V.push_back(w / hnext);
    }
    const Vec y = H.topLeftCorner(used, used).triangularView<Eigen::Upper>().solve(g.head(used));
    for (int i = 0; i < used; ++i) x += y[i] * V[i];
    r = flat(b) - A(x);
    rnorm = r.norm();
  }

  SolveResult res;
  res.field.resize(b.size());
  flat(res.field) = x;
  res.iterations = total;
  res.residual = rnorm / bnorm;
  if (res.residual > spec.tol) {
    std::ostringstream os;
    os << "GMRES did not reach tol " << spec.tol << " in " << total << " iterations (residual " << res.residual << ")";
    throw ConvergenceError(os.str(), res.residual);
  }
  return res;
}

}  // namespace

SolveResult solve_total_field(const LsOperator& op, const VectorField& incident, const SolverSpec& solver) {
  solver.validate();
  if (incident.size() != op.grid().size()) throw std::invalid_argument("incident field does not match the grid");
  const double bnorm = field_norm(incident);
  if (op.zero_contrast() || bnorm == 0.0) return {incident, 0, 0.0};
  if (solver.kind == SolverSpec::Kind::Born) return solve_born(op, incident, solver.born_order);
  return solve_gmres(op, incident, solver);
}

SolveResult solve_total_field(const WaveParameters& params, const PermittivityModel& model, const VoxelGrid& grid,
                              const Vec3& source, const SolverSpec& solver, const KernelTruncation& trunc) {
  const LsOperator op(params, model, grid, trunc);
  return solve_total_field(op, incident_field_on_grid(params, source, grid.box, grid.n, trunc), solver);
}

RayleighCoefficients rayleigh_data(const WaveParameters& params, const VoxelGrid& grid,
                                   const std::vector<Mat3>& contrast, const VectorField& E, const ModeSet& modes) {
  params.validate();
  if (contrast.size() != grid.size() || E.size() != grid.size())
    throw std::invalid_argument("contrast and field must match the grid");
  if (grid.box.lo[2] < -params.h || grid.box.hi[2] > params.h)
    throw std::invalid_argument("voxel grid must lie inside |x3| <= h");
  RayleighCoefficients out;
  for (auto& side : out.u) side.assign(modes.size(), Vec3c::Zero());
  if (modes.size() == 0) return out;

  const int n3 = grid.n[2];
  VectorField w(grid.size(), Vec3c::Zero());
  bool any = false;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (contrast[i].isZero(0.0)) continue;
    w[i] = contrast[i].cast<Complex>() * E[i];
    any = true;
  }
  if (!any) return out;

  const detail::LateralIndex index(modes);
  const std::vector<Vec3c> U = detail::lateral_transform(params, grid, w, index);
  const std::size_t nj2 = index.j2.size();
  std::vector<double> y3(n3);
  for (int i = 0; i < n3; ++i) y3[i] = grid.center(0, 0, i)[2];

  const double k2 = params.k * params.k;
  const double vol = grid.cell_volume();
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    const Mode& m = modes[mi];
    const Vec3c* u = &U[(static_cast<std::size_t>(index.pos1[mi]) * nj2 + index.pos2[mi]) * n3];
    const Complex c = kI / (8.0 * kPi * kPi * m.beta);
    for (Side s : kSides) {
      Vec3c S = Vec3c::Zero();
      for (int i3 = 0; i3 < n3; ++i3) S += std::exp(kI * m.beta * (params.h - sign(s) * y3[i3])) * u[i3];
      S *= c;
      const Vec3c gam(m.alpha[0], m.alpha[1], sign(s) * m.beta);
      out.u[side_slot(s)][mi] = k2 * vol * (S - gam * (gam.transpose() * S)(0) / k2);
    }
  }
  return out;
}

RayleighCoefficients rayleigh_data(const WaveParameters& params, const PermittivityModel& model,
                                   const VoxelGrid& grid, const VectorField& E, const ModeSet& modes) {
  return rayleigh_data(params, grid, sample_contrast(model, grid), E, modes);
}

Vec3c third_component_vector(const Mode& mode, Side side, const Vec3c& u) {
  return Vec3c(mode.alpha[0] * u[2], mode.alpha[1] * u[2], sign(side) * mode.beta * u[2]);
}

std::vector<Vec3> trace_points(int n, double height) {
  if (n < 1) throw std::invalid_argument("trace grid size must be positive");
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(n) * n);
  for (int i2 = 0; i2 < n; ++i2)
    for (int i1 = 0; i1 < n; ++i1) out.emplace_back(-kPi + kTwoPi * i1 / n, -kPi + kTwoPi * i2 / n, height);
  return out;
}

Vec3c extract_rayleigh_from_trace(const TraceSamples& trace, const WaveParameters& params, ModeIndex j) {
  params.validate();
  const int n = trace.n;
  if (n < 1 || trace.values.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("trace samples must form an n x n grid");
  if (!(std::abs(trace.height) >= params.h)) throw std::invalid_argument("trace plane must satisfy |x3| >= h");
  if (n <= 2 * std::max(std::abs(j.j1), std::abs(j.j2))) {
    std::ostringstream os;
    os << "trace grid of " << n << " points aliases mode (" << j.j1 << ", " << j.j2 << ")";
    warn(os.str());
  }
  const Complex b = beta_checked(params, j);
  const double a1 = params.alpha1 + j.j1, a2 = params.alpha2 + j.j2;
  std::vector<Complex> e1(n), e2(n);
  for (int i = 0; i < n; ++i) {
    const double x = -kPi + kTwoPi * i / n;
    e1[i] = std::exp(-kI * a1 * x);
    e2[i] = std::exp(-kI * a2 * x);
  }
  Vec3c acc = Vec3c::Zero();
  for (int i2 = 0; i2 < n; ++i2) {
    Vec3c row = Vec3c::Zero();
    for (int i1 = 0; i1 < n; ++i1) row += e1[i1] * trace.values[static_cast<std::size_t>(i2) * n + i1];
    acc += e2[i2] * row;
  }
  const double depth = std::abs(trace.height) - params.h;
  return acc / static_cast<double>(n * n) * std::exp(-kI * b * depth);
}

Vec3c scattered_field(const GreenKernel& kernel, const VoxelGrid& grid, const std::vector<Mat3>& contrast,
                      const VectorField& E, const Vec3& x) {
  const double k2 = kernel.params().k * kernel.params().k;
  const double vol = grid.cell_volume();
  Vec3c acc = Vec3c::Zero();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (contrast[i].isZero(0.0)) continue;
    acc += kernel.tensor(x, grid.center(i)) * (contrast[i].cast<Complex>() * E[i]);
  }
  return k2 * vol * acc;
}

Vec3c rayleigh_field(const WaveParameters& params, const ModeSet& modes, const RayleighCoefficients& c, Side side,
                     const Vec3& x) {
  if (!(sign(side) * x[2] >= params.h)) throw std::invalid_argument("Rayleigh series evaluated inside the slab");
  Vec3c acc = Vec3c::Zero();
  for (std::size_t i = 0; i < modes.size(); ++i) acc += c.at(side, i) * plane_wave(params, modes[i].index, side, x);
  return acc;
}

RayleighDataMatrix::RayleighDataMatrix(const WaveParameters& params, ModeSet modes, std::size_t n_sources)
    : params_(params), modes_(std::move(modes)), n_sources_(n_sources),
      data_(2 * modes_.size() * n_sources, Vec3c::Zero()) {}

void RayleighDataMatrix::set_source(std::size_t source, const RayleighCoefficients& c) {
  if (source >= n_sources_) throw std::out_of_range("source index out of range");
  for (Side s : kSides) {
    if (c.u[side_slot(s)].size() != modes_.size()) throw ModeMismatchError("coefficient count differs from mode set");
    for (std::size_t m = 0; m < modes_.size(); ++m) at(s, m, source) = c.at(s, m);
  }
}

double RayleighDataMatrix::frobenius_norm() const { return flat(data_).norm(); }

ForwardRun build_data_matrix(const WaveParameters& params, const PermittivityModel& model, const VoxelGrid& grid,
                             const std::vector<Vec3>& sources, const ModeSet& modes, const SolverSpec& solver,
                             const KernelTruncation& trunc, bool keep_fields) {
  solver.validate();
  const LsOperator op(params, model, grid, trunc);
  ForwardRun run;
  run.data = RayleighDataMatrix(params, modes, sources.size());
  run.iterations.assign(sources.size(), 0);
  run.residuals.assign(sources.size(), 0.0);
  if (keep_fields) run.fields.resize(sources.size());

  parallel_for(sources.size(), [&](std::size_t l) {
    try {
      const VectorField incident = incident_field_on_grid(params, sources[l], grid.box, grid.n, trunc);
      SolveResult res = solve_total_field(op, incident, solver);
      run.data.set_source(l, rayleigh_data(params, grid, op.contrast(), res.field, modes));
      run.iterations[l] = res.iterations;
      run.residuals[l] = res.residual;
      if (keep_fields) run.fields[l] = std::move(res.field);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("source " + std::to_string(l) + ": " + e.what(), e.residual());
    } catch (const std::exception& e) {
      throw Error("source " + std::to_string(l) + ": " + e.what());
    }
  });
  return run;
}

}  // namespace periscat
