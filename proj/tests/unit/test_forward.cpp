#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "periscat/diagnostics.hpp"
#include "periscat/forward.hpp"

using namespace periscat;

namespace {

WaveParameters with_alpha(double a1, double a2) {
  WaveParameters p;
  p.alpha1 = a1;
  p.alpha2 = a2;
  return p;
}

VectorField random_field(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorField f(n);
  for (auto& v : f)
    for (int c = 0; c < 3; ++c) v[c] = Complex(u(rng), u(rng));
  return f;
}

double diff_norm(const VectorField& a, const VectorField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).squaredNorm();
  return std::sqrt(s);
}

// Collects warnings for the lifetime of the object.
struct WarningCapture {
  std::vector<std::string> seen;
  WarningHandler previous;
  WarningCapture() {
    previous = set_warning_handler([this](const std::string& m) { seen.push_back(m); });
  }
  ~WarningCapture() { set_warning_handler(previous); }
};

VoxelGrid small_grid() { return VoxelGrid(Box{Vec3(-0.4, -0.3, -0.2), Vec3(0.4, 0.3, 0.2)}, {8, 6, 4}); }

Mat3 tensor_contrast() {
  Mat3 c;
  c << 0.3, 0.05, 0.0, 0.05, 0.5, 0.02, 0.0, 0.02, 0.4;
  return c;
}

}  // namespace

TEST_CASE("voxel grids") {
  const auto ring = PermittivityModel::ring();
  const VoxelGrid g = VoxelGrid::around(ring, 0.1);
  CHECK(g.n == std::array<int, 3>{32, 32, 4});
  CHECK(g.spacing().maxCoeff() <= 0.1 + 1e-12);
  CHECK((g.box.lo - (ring.support().lo - g.spacing())).norm() < 1e-12);
  const VoxelGrid fixed = VoxelGrid::around(ring, {10, 10, 5});
  CHECK(fixed.n == std::array<int, 3>{10, 10, 5});
  CHECK(fixed.box.lo[2] >= -1.0);
  CHECK(default_voxel_spacing(WaveParameters{}) == doctest::Approx(0.1));
  CHECK(g.index(1, 2, 3) == 1 + 32 * (2 + 32 * 3));
  CHECK((g.center(g.index(1, 2, 3)) - g.center(1, 2, 3)).norm() == 0.0);
}

TEST_CASE("LS operator basics") {
  const WaveParameters p;
  const VoxelGrid grid = small_grid();
  std::vector<Mat3> chi(grid.size(), tensor_contrast());
  const LsOperator op(p, chi, grid);
  const VectorField zero(grid.size(), Vec3c::Zero());
  CHECK(field_norm(op.apply(zero)) == 0.0);

  const VectorField a = random_field(grid.size(), 1), b = random_field(grid.size(), 2);
  const Complex c(0.3, -1.2);
  VectorField comb(grid.size());
  for (std::size_t i = 0; i < comb.size(); ++i) comb[i] = a[i] + c * b[i];
  const VectorField La = op.apply(a), Lb = op.apply(b), Lc = op.apply(comb);
  VectorField expect(grid.size());
  for (std::size_t i = 0; i < comb.size(); ++i) expect[i] = La[i] + c * Lb[i];
  CHECK(diff_norm(Lc, expect) < 1e-12 * field_norm(Lc));
}

TEST_CASE("FFT and dense application agree") {
  const auto q = with_alpha(0.2, -0.3);
  const VoxelGrid grid = small_grid();
  std::vector<Mat3> chi(grid.size(), Mat3::Zero());
  for (std::size_t i = 0; i < chi.size(); i += 3) chi[i] = tensor_contrast() * (1.0 + 0.01 * i);
  const LsOperator op(q, chi, grid);
  const VectorField E = random_field(grid.size(), 7);
  const VectorField f = op.apply(E), d = op.apply_direct(E);
  CHECK(diff_norm(f, d) < 1e-12 * field_norm(d));
}

TEST_CASE("one active voxel reproduces the tensor") {
  const auto q = with_alpha(0.1, 0.25);
  const VoxelGrid grid = small_grid();
  std::vector<Mat3> chi(grid.size(), Mat3::Zero());
  const double c = 0.4;
  const std::size_t src = grid.index(0, 0, 0);
  chi[src] = c * Mat3::Identity();
  VectorField E(grid.size(), Vec3c::Zero());
  E[src] = Vec3c(Complex(1, 0.5), Complex(-0.2, 0.1), Complex(0.3, -0.7));
  const LsOperator op(q, chi, grid);
  const VectorField out = op.apply(E);
  const double k2 = q.k * q.k;
  for (std::size_t dst : {grid.index(7, 5, 3), grid.index(4, 2, 1), grid.index(3, 5, 0)}) {
    const Vec3c expect = k2 * c * grid.cell_volume() * green_tensor(q, grid.center(dst), grid.center(src)) * E[src];
    CHECK((out[dst] - expect).norm() < 1e-8 * expect.norm());
  }
  // self cell: ball average plus the regular remainder
  const Complex S = LsOperator::ball_self_term(q.k, grid.cell_volume());
  const double a = std::cbrt(3.0 * grid.cell_volume() / (4.0 * kPi));
  const Complex expect_S = 2.0 / 3.0 * (std::exp(kI * q.k * a) * (1.0 - kI * q.k * a) - 1.0) - 1.0 / 3.0;
  CHECK(std::abs(S - expect_S) < 1e-15);
  CHECK(op.kernel(0, 0, 0).norm() > 0.0);
}

TEST_CASE("coarse grid warning") {
  const WaveParameters p;
  WarningCapture cap;
  const VoxelGrid coarse(Box{Vec3(-1, -1, -0.3), Vec3(1, 1, 0.3)}, {5, 5, 2});
  std::vector<Mat3> chi(coarse.size(), 0.1 * Mat3::Identity());
  const LsOperator op(p, chi, coarse);
  REQUIRE(cap.seen.size() == 1);
  CHECK(cap.seen[0].find("coarse") != std::string::npos);
  cap.seen.clear();
  const LsOperator fine(p, std::vector<Mat3>(small_grid().size(), Mat3::Zero()), small_grid());
  CHECK(cap.seen.empty());
}

TEST_CASE("scattered field is quasiperiodic") {
  const auto q = with_alpha(0.25, 0.0);
  const VoxelGrid grid = small_grid();
  std::vector<Mat3> chi(grid.size(), tensor_contrast());
  const VectorField E = random_field(grid.size(), 3);
  const GreenKernel kern(q);
  const Vec3 x(1.3, 0.4, 0.7);
  const Vec3c a = scattered_field(kern, grid, chi, E, x);
  const Vec3c b = scattered_field(kern, grid, chi, E, x + Vec3(kTwoPi, 0, 0));
  CHECK((b - std::exp(kI * kTwoPi * 0.25) * a).norm() < 1e-9 * a.norm());
}

TEST_CASE("solver contracts") {
  const WaveParameters p;
  const auto cube = PermittivityModel::cube();
  const VoxelGrid grid = VoxelGrid::around(cube, 0.2);
  const Vec3 y(0.3, -0.2, 2.5);
  const VectorField inc = incident_field_on_grid(p, y, grid.box, grid.n);

  SUBCASE("zero contrast") {
    const LsOperator op(p, std::vector<Mat3>(grid.size(), Mat3::Zero()), grid);
    const SolveResult r = solve_total_field(op, inc, SolverSpec{});
    CHECK(r.iterations == 0);
    CHECK(diff_norm(r.field, inc) == 0.0);
  }

  const LsOperator op(p, cube, grid);
  SUBCASE("iterative residual") {
    SolverSpec s;
    s.tol = 1e-8;
    const SolveResult r = solve_total_field(op, inc, s);
    CHECK(r.residual <= 1e-8);
    const VectorField LE = op.apply(r.field);
    VectorField res(grid.size());
    for (std::size_t i = 0; i < res.size(); ++i) res[i] = r.field[i] - inc[i] - LE[i];
    CHECK(field_norm(res) / field_norm(inc) <= 1e-8 * 1.01);
  }
  SUBCASE("Born terms") {
    SolverSpec s;
    s.kind = SolverSpec::Kind::Born;
    const SolveResult b1 = solve_total_field(op, inc, s);
    CHECK(diff_norm(b1.field, inc) == 0.0);
    s.born_order = 2;
    const SolveResult b2 = solve_total_field(op, inc, s);
    const VectorField L = op.apply(inc);
    VectorField expect(grid.size());
    for (std::size_t i = 0; i < expect.size(); ++i) expect[i] = inc[i] + L[i];
    CHECK(diff_norm(b2.field, expect) < 1e-14 * field_norm(expect));
  }
  SUBCASE("non-convergence reports the residual") {
    SolverSpec s;
    s.tol = 1e-12;
    s.max_iter = 2;
    s.restart = 2;
    try {
      solve_total_field(op, inc, s);
      FAIL("expected a ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.residual() > 1e-12);
    }
  }
  SUBCASE("divergent Born series") {
    const auto strong = PermittivityModel::cube(Vec3(30.0, 30.0, 30.0).asDiagonal());
    const LsOperator sop(p, strong, grid);
    SolverSpec s;
    s.kind = SolverSpec::Kind::Born;
    s.born_order = 6;
    CHECK_THROWS_AS(solve_total_field(sop, inc, s), ConvergenceError);
  }
  SUBCASE("solver spec validation") {
    SolverSpec s;
    s.tol = 0.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = {};
    s.kind = SolverSpec::Kind::Born;
    s.born_order = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  }
}

TEST_CASE("Born error is quadratic in the contrast") {
  const WaveParameters p;
  const auto cube = PermittivityModel::cube();
  const VoxelGrid grid = VoxelGrid::around(cube, 0.2);
  const VectorField inc = incident_field_on_grid(p, Vec3(0.1, 0.2, 2.5), grid.box, grid.n);
  std::vector<double> s{0.05, 0.1, 0.2}, err;
  for (double scale : s) {
    const LsOperator op(p, cube.scaled(scale), grid);
    const SolveResult full = solve_total_field(op, inc, SolverSpec{.tol = 1e-10});
    err.push_back(diff_norm(full.field, inc) / field_norm(inc));
  }
  const double slope = std::log(err[2] / err[0]) / std::log(s[2] / s[0]);
  MESSAGE("Born slope " << slope);
  // born_order 1 is E_in; the first correction is linear in s
  CHECK(slope > 0.9);

  std::vector<double> err2;
  for (double scale : s) {
    const LsOperator op(p, cube.scaled(scale), grid);
    const SolveResult full = solve_total_field(op, inc, SolverSpec{.tol = 1e-10});
    SolverSpec born;
    born.kind = SolverSpec::Kind::Born;
    born.born_order = 2;
    const SolveResult b = solve_total_field(op, inc, born);
    err2.push_back(diff_norm(full.field, b.field) / field_norm(inc));
  }
  const double slope2 = std::log(err2[2] / err2[0]) / std::log(s[2] / s[0]);
  MESSAGE("first-Born total field slope " << slope2);
  CHECK(slope2 >= 1.7);
}

TEST_CASE("Rayleigh data from a single voxel") {
  const auto q = with_alpha(0.15, -0.05);
  const VoxelGrid grid = small_grid();
  const ModeSet modes = build_mode_set(q, 8, true);
  std::vector<Mat3> chi(grid.size(), Mat3::Zero());
  VectorField E(grid.size(), Vec3c::Zero());

  const RayleighCoefficients z = rayleigh_data(q, grid, chi, E, modes);
  for (Side s : kSides)
    for (std::size_t m = 0; m < modes.size(); ++m) CHECK(z.at(s, m).norm() == 0.0);

  const std::size_t y0 = grid.index(5, 2, 1);
  chi[y0] = tensor_contrast();
  E[y0] = Vec3c(Complex(0.2, 1.0), Complex(-0.4, 0.3), Complex(0.9, -0.1));
  const RayleighCoefficients c = rayleigh_data(q, grid, chi, E, modes);
  const double k2 = q.k * q.k;
  const Vec3c w = chi[y0].cast<Complex>() * E[y0];
  for (Side s : kSides)
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const Vec3c expect = k2 * grid.cell_volume() * g_coeff(q, modes[m].index, s, grid.center(y0)) * w;
      CHECK((c.at(s, m) - expect).norm() <= 1e-12 * expect.norm());
      const Vec3c third = k2 * grid.cell_volume() * h_coeff(q, modes[m].index, s, grid.center(y0)) * w;
      CHECK((third_component_vector(modes[m], s, c.at(s, m)) - third).norm() <= 1e-6 * (third.norm() + 1e-300));
    }

  // linear in E and in the contrast
  VectorField E2 = E;
  E2[y0] *= Complex(2.0, -1.0);
  const RayleighCoefficients c2 = rayleigh_data(q, grid, chi, E2, modes);
  std::vector<Mat3> chi3 = chi;
  chi3[y0] *= 3.0;
  const RayleighCoefficients c3 = rayleigh_data(q, grid, chi3, E, modes);
  for (std::size_t m = 0; m < modes.size(); ++m) {
    CHECK((c2.at(Side::Plus, m) - Complex(2.0, -1.0) * c.at(Side::Plus, m)).norm() <= 1e-13 * c2.at(Side::Plus, m).norm());
    CHECK((c3.at(Side::Minus, m) - 3.0 * c.at(Side::Minus, m)).norm() <= 1e-13 * c3.at(Side::Minus, m).norm());
  }
}

TEST_CASE("third component vector") {
  const WaveParameters p;
  const ModeSet modes = build_mode_set(p, 0, true);
  const Vec3c u(Complex(1, 2), Complex(3, 4), Complex(0.5, -0.5));
  CHECK((third_component_vector(modes[0], Side::Plus, u) - Vec3c(0, 0, kTwoPi * u[2])).norm() < 1e-15);
  CHECK((third_component_vector(modes[0], Side::Minus, u) - Vec3c(0, 0, -kTwoPi * u[2])).norm() < 1e-15);
  CHECK(third_component_vector(modes[0], Side::Plus, Vec3c(1, 1, 0)).norm() == 0.0);
}

TEST_CASE("trace extraction of a single mode") {
  const auto q = with_alpha(0.3, -0.2);
  const int n = 16;
  const ModeIndex j0{2, -1};
  const Vec3c c(Complex(1, -2), Complex(0.5, 0.25), Complex(-1, 0));
  for (double r : {1.0, 1.7, -1.3}) {
    const Side s = r > 0 ? Side::Plus : Side::Minus;
    TraceSamples t{n, r, {}};
    for (const Vec3& x : trace_points(n, r)) t.values.push_back(c * plane_wave(q, j0, s, x));
    CHECK((extract_rayleigh_from_trace(t, q, j0) - c).norm() < 1e-12);
    for (ModeIndex j : {ModeIndex{0, 0}, ModeIndex{2, 1}, ModeIndex{-3, 4}})
      CHECK(extract_rayleigh_from_trace(t, q, j).norm() < 1e-12);
  }
  WarningCapture cap;
  TraceSamples t{4, 1.2, std::vector<Vec3c>(16, Vec3c::Zero())};
  extract_rayleigh_from_trace(t, q, {2, 0});
  CHECK(cap.seen.size() == 1);
  extract_rayleigh_from_trace(t, q, {1, 1});
  CHECK(cap.seen.size() == 1);
  CHECK_THROWS_AS(extract_rayleigh_from_trace(TraceSamples{4, 0.5, t.values}, q, {0, 0}), std::invalid_argument);
}

TEST_CASE("trace extraction does not depend on the plane height") {
  const auto q = with_alpha(0.1, 0.2);
  const Vec3 z(0.3, -0.2, 0.1);
  const GreenKernel kern(q);
  const int n = 32;
  for (ModeIndex j : {ModeIndex{0, 0}, ModeIndex{2, -3}, ModeIndex{-5, 1}}) {
    Vec3c at[2];
    int i = 0;
    for (double r : {1.0, 1.5}) {
      TraceSamples t{n, r, {}};
      for (const Vec3& x : trace_points(n, r)) t.values.push_back(kern.tensor(x, z, GreenRoute::Modal).col(0));
      at[i++] = extract_rayleigh_from_trace(t, q, j);
    }
    CHECK((at[0] - at[1]).norm() < 1e-8 * at[1].norm());
  }
}

TEST_CASE("trace route and volume route agree") {
  const auto q = with_alpha(0.2, 0.1);
  const auto model = PermittivityModel::point(Vec3(0.2, -0.1, 0.05), Vec3(0.4, 0.3, 0.2), Vec3(1.3, 1.5, 1.4).asDiagonal());
  const VoxelGrid grid = VoxelGrid::around(model, 0.1);
  const auto chi = sample_contrast(model, grid);
  const VectorField inc = incident_field_on_grid(q, Vec3(0.5, 0.5, 2.5), grid.box, grid.n);
  const LsOperator op(q, chi, grid);
  const SolveResult sol = solve_total_field(op, inc, SolverSpec{});
  const ModeSet modes = build_mode_set(q, 8, false);
  const RayleighCoefficients c = rayleigh_data(q, grid, chi, sol.field, modes);
  const GreenKernel kern(q);
  const int n = 24;
  for (double r : {1.3, -1.3}) {
    const Side s = r > 0 ? Side::Plus : Side::Minus;
    TraceSamples t{n, r, {}};
    for (const Vec3& x : trace_points(n, r)) t.values.push_back(scattered_field(kern, grid, chi, sol.field, x));
    double scale = 0.0;
    for (std::size_t m = 0; m < modes.size(); ++m) scale = std::max(scale, c.at(s, m).norm());
    for (std::size_t m = 0; m < modes.size(); ++m) {
      if (std::max(std::abs(modes[m].index.j1), std::abs(modes[m].index.j2)) >= n / 2) continue;
      const Vec3c u = extract_rayleigh_from_trace(t, q, modes[m].index);
      CHECK((u - c.at(s, m)).norm() < 1e-4 * scale);
    }
    // and the Rayleigh series reproduces the field beyond the slab
    const ModeSet all = build_mode_set(q, 16, true);
    const RayleighCoefficients ca = rayleigh_data(q, grid, chi, sol.field, all);
    const Vec3 x(0.7, -1.1, 1.6 * sign(s));
    const Vec3c direct = scattered_field(kern, grid, chi, sol.field, x);
    CHECK((rayleigh_field(q, all, ca, s, x) - direct).norm() < 1e-6 * direct.norm());
  }
}

TEST_CASE("midpoint quadrature is second order for smooth contrast") {
  const WaveParameters p;
  const Box box{Vec3(-0.6, -0.6, -0.3), Vec3(0.6, 0.6, 0.3)};
  const ModeSet modes(p, {{0, 0}, {1, 2}, {-3, 1}});
  const Vec3 y(0.4, 0.1, 2.5);
  auto bump = [&](const Vec3& x) {
    const Vec3 u = x.cwiseQuotient(Vec3(0.6, 0.6, 0.3));
    const double r2 = u.squaredNorm();
    return r2 < 1.0 ? std::pow(1.0 - r2, 3) : 0.0;
  };
  std::vector<std::vector<Vec3c>> u;
  for (int level : {6, 12, 24}) {
    const VoxelGrid grid(box, {level, level, level / 2});
    std::vector<Mat3> chi(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) chi[i] = bump(grid.center(i)) * Vec3(0.3, 0.5, 0.4).asDiagonal().toDenseMatrix();
    const VectorField inc = incident_field_on_grid(p, y, grid.box, grid.n);
    const RayleighCoefficients c = rayleigh_data(p, grid, chi, inc, modes);
    u.push_back(c.u[0]);
  }
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double d1 = (u[0][m] - u[1][m]).norm(), d2 = (u[1][m] - u[2][m]).norm();
    const double order = std::log2(d1 / d2);
    MESSAGE("mode " << m << " observed order " << order);
    CHECK(order >= 1.8);
  }
}

TEST_CASE("data matrix assembly") {
  const WaveParameters p;
  WarningCapture quiet;
  const ModeSet modes = build_mode_set(p, 2, true);
  const auto vac = PermittivityModel::cube(Mat3::Identity());
  const VoxelGrid grid = VoxelGrid::around(PermittivityModel::cube(), 0.25);
  const std::vector<Vec3> two{Vec3(0, 0, 2.5), Vec3(0, 0, -2.5)};
  const ForwardRun zero = build_data_matrix(p, vac, grid, two, modes, SolverSpec{});
  CHECK(zero.data.raw().size() == 2 * modes.size() * 2);
  CHECK(zero.data.frobenius_norm() == 0.0);

  const auto cube = PermittivityModel::cube().scaled(0.2);
  const std::vector<Vec3> src{Vec3(0.1, 0.2, 2.5), Vec3(-1.0, 0.5, -2.5), Vec3(2.0, -2.0, 2.5)};
  const std::vector<Vec3> perm{src[2], src[0], src[1]};
  const ForwardRun a = build_data_matrix(p, cube, grid, src, modes, SolverSpec{}, {}, true);
  const ForwardRun b = build_data_matrix(p, cube, grid, perm, modes, SolverSpec{});
  CHECK(a.fields.size() == 3);
  for (double r : a.residuals) CHECK(r <= 1e-6);
  const std::size_t map[3] = {1, 2, 0};
  for (Side s : kSides)
    for (std::size_t m = 0; m < modes.size(); ++m)
      for (std::size_t l = 0; l < 3; ++l) CHECK((a.data.at(s, m, l) - b.data.at(s, m, map[l])).norm() == 0.0);

  SolverSpec strict;
  strict.tol = 1e-14;
  strict.max_iter = 1;
  strict.restart = 1;
  try {
    build_data_matrix(p, cube, grid, src, modes, strict);
    FAIL("expected a ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(std::string(e.what()).rfind("source 0:", 0) == 0);
  }
}
