// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any failed.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "periscat/diagnostics.hpp"
#include "periscat/pipeline.hpp"

using namespace periscat;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// least-squares slope of log y against log x
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double sup_diff(const ImagingResult& a, const ImagingResult& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s = std::max(s, std::abs(a.values[i] - b.values[i]));
  return s;
}

// 50 sources: 5 x 5 on each plane
SourcePlaneArray reduced_sources() { return SourcePlaneArray{2.5, 5, 5}; }

const std::array<int, 3> kReducedGrid{20, 20, 10};

RayleighDataMatrix forward_data(const WaveParameters& p, const PermittivityModel& model, const SolverSpec& solver,
                                int j_max = 8) {
  const VoxelGrid grid = VoxelGrid::around(model, default_voxel_spacing(p), p.h);
  const ForwardRun run =
      build_data_matrix(p, model, grid, source_positions(reduced_sources()), build_mode_set(p, j_max, true), solver);
  return run.data;
}

SolverSpec born1() {
  SolverSpec s;
  s.kind = SolverSpec::Kind::Born;
  s.born_order = 1;
  return s;
}

SolverSpec iterative() {
  SolverSpec s;
  s.kind = SolverSpec::Kind::Iterative;
  s.tol = 1e-6;
  return s;
}

// 1: closed-form g against rectangle-rule extraction from traces of G(., z).
Outcome closed_form_coefficients() {
  const WaveParameters p;
  const Vec3 z(0.3, -0.2, 0.1);
  const int n = 128;
  const GreenKernel kern(p);
  const ModeSet modes = build_mode_set(p, 7, false);
  double worst = 0.0;
  std::size_t checked = 0;
  for (double r : {1.2, -1.2}) {
    const Side s = r > 0 ? Side::Plus : Side::Minus;
    const auto pts = trace_points(n, r);
    std::vector<Mat3c> G(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) G[i] = kern.tensor(pts[i], z, GreenRoute::Modal);
    std::array<TraceSamples, 3> cols;
    for (int c = 0; c < 3; ++c) {
      cols[c] = TraceSamples{n, r, {}};
      cols[c].values.reserve(G.size());
      for (const Mat3c& M : G) cols[c].values.push_back(M.col(c));
    }
    for (const Mode& m : modes) {
      const Mat3c g = g_coeff(p, m.index, s, z);
      for (int c = 0; c < 3; ++c) {
        const Vec3c u = extract_rayleigh_from_trace(cols[c], p, m.index);
        // a column that vanishes identically is measured against the whole matrix
        const double scale = g.col(c).norm() > 1e-12 * g.norm() ? g.col(c).norm() : g.norm();
        worst = std::max(worst, (u - g.col(c)).norm() / scale);
        ++checked;
      }
    }
  }
  return {worst <= 1e-6, std::to_string(checked) + " columns over " + std::to_string(modes.size()) +
                             " propagating modes, both sides, max rel err " + fmt("%.2e", worst)};
}

// 2: imaging functional against the resolution-kernel form for one voxel.
Outcome resolution_identity() {
  WaveParameters p;
  p.alpha1 = 0.1;
  const auto model =
      PermittivityModel::point(Vec3(0.45, -0.3, 0.15), Vec3(0.1, 0.1, 0.1), Vec3(1.3, 1.5, 1.4).asDiagonal());
  const VoxelGrid vg(model.support(), {1, 1, 1});
  const auto sources = source_positions(SourcePlaneArray{2.5, 2, 2});
  const ModeSet modes = build_mode_set(p, 6, true);
  const ForwardRun run = build_data_matrix(p, model, vg, sources, modes, born1(), {}, true);
  const SamplingGrid grid = SamplingGrid::domain(p, kReducedGrid);
  const ImagingResult I = imaging_functional(run.data, grid, p, modes);
  const ImagingResult R = theorem_rhs_field(p, vg, sample_contrast(model, vg), run.fields, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (R.values[i] > 0.0) worst = std::max(worst, std::abs(I.values[i] - R.values[i]) / R.values[i]);
  return {worst <= 5e-2, std::to_string(sources.size()) + " sources, " + std::to_string(modes.size()) +
                             " modes, max pointwise rel err " + fmt("%.2e", worst)};
}

// 3: F and its dyadic peak at the origin and decay away from it.
Outcome kernel_localization() {
  const WaveParameters p;
  const FKernel fk(p);
  const int n = 41;
  std::vector<Vec3> pts;
  for (int i2 = 0; i2 < n; ++i2)
    for (int i1 = 0; i1 < n; ++i1) pts.emplace_back(-kPi + kTwoPi * i1 / (n - 1), -kPi + kTwoPi * i2 / (n - 1), 0.0);
  const std::size_t origin = (n / 2) + n * (n / 2);

  std::vector<std::function<double(const Vec3&)>> kernels = {
      [&](const Vec3& x) { return std::abs(fk.f(x, Vec3::Zero())); },
      [&](const Vec3& x) { return (fk.big_f(x, Vec3::Zero()) * Vec3c(0, 0, 1)).norm(); },
      [&](const Vec3& x) { return (fk.big_f(x, Vec3::Zero()) * Vec3c(1, 1, 1)).norm(); },
  };
  const char* names[] = {"|F|", "|FF e3|", "|FF (1,1,1)|"};
  bool ok = true;
  std::string detail;
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    std::vector<double> v(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) v[i] = kernels[k](pts[i]);
    const std::size_t am = std::max_element(v.begin(), v.end()) - v.begin();
    double outside = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (pts[i].norm() > kPi / 2) {
        outside += v[i];
        ++count;
      }
    const double ratio = outside / count / v[am];
    const bool here = am == origin && ratio < 0.35;
    ok = ok && here;
    detail += std::string(k ? ", " : "") + names[k] + (am == origin ? " peak at 0" : " peak off 0") + " mean/peak " +
              fmt("%.3f", ratio);
  }
  return {ok, detail};
}

// 4: noise norm is exact.
Outcome noise_exactness() {
  const WaveParameters p;
  RayleighDataMatrix U(p, build_mode_set(p, 4, true), 20);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  for (auto& v : U.raw())
    for (int c = 0; c < 3; ++c) v[c] = Complex(g(rng), g(rng));
  const double nU = U.frobenius_norm();
  double worst = 0.0;
  for (double delta : {0.2, 0.4, 0.6}) {
    const RayleighDataMatrix V = add_noise(U, NoiseSpec{delta, 17});
    double d2 = 0.0;
    for (std::size_t i = 0; i < U.raw().size(); ++i) d2 += (V.raw()[i] - U.raw()[i]).squaredNorm();
    worst = std::max(worst, std::abs(std::sqrt(d2) - delta * nU) / (delta * nU));
  }
  return {worst <= 1e-12, "max rel deviation " + fmt("%.2e", worst)};
}

struct RingBorn {
  WaveParameters p;
  RayleighDataMatrix U;
};

const RingBorn& ring_born() {
  static const RingBorn r = [] {
    RingBorn b;
    b.U = forward_data(b.p, PermittivityModel::ring(), born1());
    return b;
  }();
  return r;
}

// 5: sup |I_delta - I| is linear in delta.
Outcome stability() {
  const RingBorn& rb = ring_born();
  const SamplingGrid grid = SamplingGrid::domain(rb.p, kReducedGrid);
  const ModeSet modes = build_mode_set(rb.p, 8, true);
  const std::vector<double> deltas{0.025, 0.05, 0.1};
  std::string detail;
  bool ok = true;
  for (double pw : {1.0, 3.0}) {
    const ImagingResult I0 = imaging_functional(rb.U, grid, rb.p, modes, pw);
    std::vector<double> d;
    for (double delta : deltas) d.push_back(sup_diff(imaging_functional(add_noise(rb.U, {delta, 5}), grid, rb.p, modes, pw), I0));
    const double slope = loglog_slope(deltas, d);
    const double small = std::log(d[1] / d[0]) / std::log(deltas[1] / deltas[0]);
    if (pw == 1.0) {
      ok = ok && slope >= 0.9 && slope <= 1.1;
      detail += "p=1 slope " + fmt("%.3f", slope);
    } else {
      ok = ok && small >= 0.9;
      detail += ", p=3 small-delta slope " + fmt("%.3f", small) + " (fit " + fmt("%.3f", slope) + ")";
    }
  }
  {
    // informational: the same p=1 fit two octaves further down
    const ImagingResult I0 = imaging_functional(rb.U, grid, rb.p, modes, 1.0);
    const std::vector<double> tiny{0.0015625, 0.003125, 0.00625};
    std::vector<double> d;
    for (double delta : tiny)
      d.push_back(sup_diff(imaging_functional(add_noise(rb.U, {delta, 5}), grid, rb.p, modes, 1.0), I0));
    detail += "; p=1 slope over delta 0.0016..0.0063 " + fmt("%.3f", loglog_slope(tiny, d));
  }
  return {ok, detail};
}

// 6: dropping evanescent modes barely changes the normalized functional.
Outcome evanescent_insensitivity() {
  const RingBorn& rb = ring_born();
  const SamplingGrid grid = SamplingGrid::domain(rb.p, kReducedGrid);
  ImagingResult all = imaging_functional(rb.U, grid, rb.p, build_mode_set(rb.p, 8, true));
  ImagingResult prop = imaging_functional(rb.U, grid, rb.p, build_mode_set(rb.p, 8, false));
  const double ma = all.max(), mp = prop.max();
  for (double& v : all.values) v /= ma;
  for (double& v : prop.values) v /= mp;
  const double d = sup_diff(all, prop);
  return {d <= 1e-3, std::to_string(prop.mode_count) + " propagating vs " + std::to_string(all.mode_count) +
                         " modes, normalized sup diff " + fmt("%.2e", d)};
}

// 7: reconstructions from noisy full-wave data.
Outcome reconstruction() {
  const WaveParameters p;
  const SamplingGrid grid = SamplingGrid::domain(p, kReducedGrid);
  const ModeSet modes = build_mode_set(p, 8, true);
  const NoiseSpec noise{0.2, 11};
  std::string detail;

  // (a) sphere quartet
  bool a_ok;
  {
    const auto model = PermittivityModel::spheres();
    const auto U = add_noise(forward_data(p, model, iterative()), noise);
    const auto I = imaging_functional(U, grid, p, modes);
    const auto comps = connected_components(isosurface_mask(I, 0.6), grid);
    const auto& centers = std::get<SpheresShape>(model.shape()).centers;
    double worst = 0.0;
    for (const Component& c : comps) {
      double best = 1e300;
      for (const Vec3& s : centers) best = std::min(best, (c.centroid - s).norm());
      worst = std::max(worst, best);
    }
    a_ok = comps.size() >= 3 && worst <= 0.5;
    detail += "(a) " + std::string(a_ok ? "ok" : "FAIL") + ": " + std::to_string(comps.size()) +
              " components, farthest centroid " + fmt("%.3f", worst) + " from a center";
  }
  // (b) cube
  bool b_ok;
  {
    const auto model = PermittivityModel::cube();
    const auto U = add_noise(forward_data(p, model, iterative()), noise);
    const auto I = imaging_functional(U, grid, p, modes);
    const Vec3 c = mask_centroid(isosurface_mask(I, 0.6), grid);
    b_ok = std::abs(c[0]) <= 0.5 && std::abs(c[1]) <= 0.5 && std::abs(c[2]) <= 0.3;
    char buf[96];
    std::snprintf(buf, sizeof buf, "centroid (%.3f, %.3f, %.3f)", c[0], c[1], c[2]);
    detail += "; (b) " + std::string(b_ok ? "ok" : "FAIL") + ": " + buf;
  }
  // (c) ring, new against OSM; recorded, warns only
  {
    const auto model = PermittivityModel::ring();
    const auto U = add_noise(forward_data(p, model, iterative()), noise);
    const Mask truth = rasterize(model, grid);
    const double jn = jaccard(isosurface_mask(imaging_functional(U, grid, p, modes), 0.6), truth);
    const double jo = jaccard(isosurface_mask(osm_functional(U, grid, p), 0.6), truth);
    const bool c_ok = jn > jo;
    detail += "; (c) " + std::string(c_ok ? "ok" : "WARN") + ": jaccard new " + fmt("%.3f", jn) + " vs OSM " +
              fmt("%.3f", jo);
    if (!c_ok) warn("criterion 7c: new-method Jaccard does not exceed OSM on the ring");
  }
  return {a_ok && b_ok, detail};
}

// 8: the two-term Neumann series is second-order accurate in the contrast.
Outcome born_convergence() {
  const WaveParameters p;
  const std::vector<double> scales{0.05, 0.1, 0.2};
  const Vec3 source = source_positions(SourcePlaneArray{2.5, 1, 1})[0];
  std::vector<double> err;
  SolverSpec full;
  full.tol = 1e-12;
  full.max_iter = 1000;
  SolverSpec born2;
  born2.kind = SolverSpec::Kind::Born;
  born2.born_order = 2;
  for (double s : scales) {
    const auto model = PermittivityModel::cube().scaled(s);
    const VoxelGrid vg(model.support(), {16, 16, 16});
    const LsOperator op(p, model, vg);
    const auto inc = incident_field_on_grid(p, source, vg.box, vg.n);
    const VectorField Ef = solve_total_field(op, inc, full).field;
    const VectorField Eb = solve_total_field(op, inc, born2).field;
    VectorField d(Ef.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = Ef[i] - Eb[i];
    err.push_back(field_norm(d) / field_norm(inc));
  }
  const double slope = loglog_slope(scales, err);
  return {slope >= 1.7, "errors " + fmt("%.2e", err[0]) + " " + fmt("%.2e", err[1]) + " " + fmt("%.2e", err[2]) +
                            ", slope " + fmt("%.3f", slope)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 9: identical config and seed give identical bytes.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("periscat_accept_" + std::to_string(std::random_device{}()));
  const char* text = R"(geometry: {shape: cube, cube: {half_extent: [0.5, 0.5, 0.2]}}
sources: {n1: 2, n2: 2}
solver: {mode: iterative, spacing: 0.1}
modes: {j_max: 4}
noise: {delta: 0.2, seed: 3}
imaging: {grid: [12, 12, 6], functional: both}
)";
  std::vector<fs::path> dirs;
  for (int run = 0; run < 2; ++run) {
    ExperimentConfig cfg = parse_config(text);
    cfg.output.directory = (root / std::to_string(run)).string();
    dirs.emplace_back(cfg.output.directory);
    run_forward(cfg);
    run_noise(cfg, (dirs.back() / kDataFileName).string());
    run_image(cfg, (dirs.back() / kNoisyDataFileName).string());
    run_compare(cfg, (dirs.back() / kNoisyDataFileName).string());
  }
  std::size_t files = 0, same = 0;
  for (const auto& e : fs::directory_iterator(dirs[0])) {
    ++files;
    const fs::path other = dirs[1] / e.path().filename();
    if (fs::exists(other) && slurp(e.path()) == slurp(other)) ++same;
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  return {files > 0 && same == files, std::to_string(same) + "/" + std::to_string(files) + " files identical"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"closed-form Rayleigh coefficients vs trace quadrature", closed_form_coefficients},
      {"imaging functional vs resolution-kernel form", resolution_identity},
      {"resolution kernel localization", kernel_localization},
      {"noise norm exactness", noise_exactness},
      {"stability in the noise level", stability},
      {"evanescent-mode insensitivity", evanescent_insensitivity},
      {"reconstruction localization", reconstruction},
      {"Born convergence order", born_convergence},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %zu %s: %s (%s) [%.1f s]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed ? 1 : 0;
}
