#include "periscat/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace periscat {

ConfigError::ConfigError(const std::string& what, int line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

template <class T>
T scalar(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) throw ConfigError(field + ": expected a scalar", line_of(n));
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(field + ": cannot read '" + n.Scalar() + "'", line_of(n));
  }
}

template <class T, std::size_t N>
std::array<T, N> fixed_list(const YAML::Node& n, const std::string& field) {
  if (!n.IsSequence() || n.size() != N)
    throw ConfigError(field + ": expected a list of " + std::to_string(N) + " values", line_of(n));
  std::array<T, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = scalar<T>(n[i], field);
  return out;
}

Vec3 vec3(const YAML::Node& n, const std::string& field) {
  const auto a = fixed_list<double, 3>(n, field);
  return {a[0], a[1], a[2]};
}

// Walks a mapping and dispatches each key; unknown keys are errors.
using Handlers = std::map<std::string, std::function<void(const YAML::Node&, const std::string&)>>;

void visit(const YAML::Node& node, const std::string& path, const Handlers& handlers) {
  if (!node || node.IsNull()) return;
  if (!node.IsMap()) throw ConfigError((path.empty() ? std::string("config") : path) + ": expected a mapping", line_of(node));
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    const std::string field = path.empty() ? key : path + "." + key;
    const auto it = handlers.find(key);
    if (it == handlers.end()) throw ConfigError("unknown key '" + field + "'", line_of(kv.first));
    it->second(kv.second, field);
  }
}

template <class T>
std::function<void(const YAML::Node&, const std::string&)> into(T& target) {
  return [&target](const YAML::Node& n, const std::string& f) { target = scalar<T>(n, f); };
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(wave.k > 0.0 && std::isfinite(wave.k), "wave.k must be positive");
  require(wave.h > 0.0 && std::isfinite(wave.h), "wave.h must be positive");
  require(std::isfinite(wave.alpha1) && std::isfinite(wave.alpha2), "wave.alpha must be finite");

  const auto& g = geometry;
  require(g.shape == "ring" || g.shape == "spheres" || g.shape == "cube" || g.shape == "point",
          "geometry.shape must be ring, spheres, cube or point");
  require(g.eps.minCoeff() > 0.0, "geometry.eps must be positive");
  require(g.contrast_scale >= 0.0, "geometry.contrast_scale must be nonnegative");
  require(g.ring.r_inner >= 0.0 && g.ring.r_outer > g.ring.r_inner && g.ring.half_height > 0.0,
          "geometry.ring needs 0 <= r_inner < r_outer and half_height > 0");
  require(g.spheres.radius > 0.0 && !g.spheres.centers.empty(), "geometry.spheres needs centers and a positive radius");
  require(g.cube.half_extent.minCoeff() > 0.0, "geometry.cube.half_extent must be positive");
  require(g.point_size.minCoeff() > 0.0, "geometry.point.size must be positive");

  require(sources.n1 >= 1 && sources.n2 >= 1, "sources.n1 and sources.n2 must be at least 1");
  require(std::abs(sources.z_offset) > wave.h, "sources.z_offset must exceed wave.h");

  require(solver.mode == "iterative" || solver.mode == "born", "solver.mode must be iterative or born");
  require(solver.born_order >= 1, "solver.born_order must be at least 1");
  require(solver.tol > 0.0, "solver.tol must be positive");
  require(solver.max_iter >= 1, "solver.max_iter must be positive");
  require(solver.restart >= 1, "solver.restart must be positive");
  require(solver.spacing >= 0.0, "solver.spacing must be nonnegative");
  const bool any_dims = solver.dims[0] || solver.dims[1] || solver.dims[2];
  if (any_dims)
    require(solver.dims[0] >= 1 && solver.dims[1] >= 1 && solver.dims[2] >= 1, "solver.dims must all be positive");

  require(modes.j_max >= 0, "modes.j_max must be nonnegative");
  require(noise.delta >= 0.0 && std::isfinite(noise.delta), "noise.delta must be nonnegative");

  require(imaging.p > 0.0, "imaging.p must be positive");
  require(imaging.functional == "new" || imaging.functional == "osm" || imaging.functional == "both",
          "imaging.functional must be new, osm or both");
  require(imaging.grid[0] >= 1 && imaging.grid[1] >= 1 && imaging.grid[2] >= 1, "imaging.grid must be positive");
  require(imaging.rho >= wave.h, "imaging.rho must be at least wave.h");

  require(output.iso_fraction > 0.0 && output.iso_fraction <= 1.0, "output.iso_fraction must lie in (0, 1]");
  for (const std::string& f : output.formats) require(f == "vtk" || f == "csv", "output.formats entries must be vtk or csv");
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(e.msg, e.mark.line >= 0 ? e.mark.line + 1 : 0);
  }
  ExperimentConfig c;
  auto& g = c.geometry;
  visit(root, "",
        {{"wave",
          [&](const YAML::Node& n, const std::string& p) {
            visit(n, p,
                  {{"k", into(c.wave.k)},
                   {"alpha", [&](const YAML::Node& v, const std::string& f) {
                      const auto a = fixed_list<double, 2>(v, f);
                      c.wave.alpha1 = a[0];
                      c.wave.alpha2 = a[1];
                    }},
                   {"h", into(c.wave.h)}});
          }},
         {"geometry",
          [&](const YAML::Node& n, const std::string& p) {
            visit(n, p,
                  {{"shape", into(g.shape)},
                   {"eps", [&](const YAML::Node& v, const std::string& f) { g.eps = vec3(v, f); }},
                   {"contrast_scale", into(g.contrast_scale)},
                   {"ring",
                    [&](const YAML::Node& v, const std::string& f) {
                      visit(v, f,
                            {{"r_inner", into(g.ring.r_inner)},
                             {"r_outer", into(g.ring.r_outer)},
                             {"half_height", into(g.ring.half_height)}});
                    }},
                   {"spheres",
                    [&](const YAML::Node& v, const std::string& f) {
                      visit(v, f,
                            {{"radius", into(g.spheres.radius)},
                             {"centers", [&](const YAML::Node& list, const std::string& ff) {
                                if (!list.IsSequence()) throw ConfigError(ff + ": expected a list", line_of(list));
                                g.spheres.centers.clear();
                                for (const auto& e : list) g.spheres.centers.push_back(vec3(e, ff));
                              }}});
                    }},
                   {"cube",
                    [&](const YAML::Node& v, const std::string& f) {
                      visit(v, f, {{"half_extent", [&](const YAML::Node& e, const std::string& ff) {
                                      g.cube.half_extent = vec3(e, ff);
                                    }}});
                    }},
                   {"point", [&](const YAML::Node& v, const std::string& f) {
                      visit(v, f,
                            {{"center", [&](const YAML::Node& e, const std::string& ff) { g.point_center = vec3(e, ff); }},
                             {"size", [&](const YAML::Node& e, const std::string& ff) { g.point_size = vec3(e, ff); }}});
                    }}});
          }},
         {"sources",
          [&](const YAML::Node& n, const std::string& p) {
            visit(n, p, {{"z_offset", into(c.sources.z_offset)}, {"n1", into(c.sources.n1)}, {"n2", into(c.sources.n2)}});
          }},
         {"solver",
          [&](const YAML::Node& n, const std::string& p) {
            visit(n, p,
                  {{"mode", into(c.solver.mode)},
                   {"born_order", into(c.solver.born_order)},
                   {"tol", into(c.solver.tol)},
                   {"max_iter", into(c.solver.max_iter)},
                   {"restart", into(c.solver.restart)},
                   {"spacing", into(c.solver.spacing)},
                   {"dims", [&](const YAML::Node& v, const std::string& f) { c.solver.dims = fixed_list<int, 3>(v, f); }}});
          }},
         {"modes",
          [&](const YAML::Node& n, const std::string& p) {
            visit(n, p, {{"j_max", into(c.modes.j_max)}, {"include_evanescent", into(c.modes.include_evanescent)}});
          }},
         {"noise",
          [&](const YAML::Node& n, const std::string& p) {
            visit(n, p, {{"delta", into(c.noise.delta)}, {"seed", into(c.noise.seed)}});
          }},
         {"imaging",
          [&](const YAML::Node& n, const std::string& p) {
            visit(n, p,
                  {{"p", into(c.imaging.p)},
                   {"functional", into(c.imaging.functional)},
                   {"grid", [&](const YAML::Node& v, const std::string& f) { c.imaging.grid = fixed_list<int, 3>(v, f); }},
                   {"q", [&](const YAML::Node& v, const std::string& f) { c.imaging.q = vec3(v, f).cast<Complex>(); }},
                   {"rho", into(c.imaging.rho)}});
          }},
         {"output", [&](const YAML::Node& n, const std::string& p) {
            visit(n, p,
                  {{"directory", into(c.output.directory)},
                   {"formats",
                    [&](const YAML::Node& v, const std::string& f) {
                      if (!v.IsSequence()) throw ConfigError(f + ": expected a list", line_of(v));
                      c.output.formats.clear();
                      for (const auto& e : v) c.output.formats.push_back(scalar<std::string>(e, f));
                    }},
                   {"iso_fraction", into(c.output.iso_fraction)}});
          }}});
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_config(const ExperimentConfig& c) {
  std::ostringstream os;
  auto v3 = [](const Vec3& v) { return "[" + fmt(v[0]) + ", " + fmt(v[1]) + ", " + fmt(v[2]) + "]"; };
  auto i3 = [](const std::array<int, 3>& v) {
    return "[" + std::to_string(v[0]) + ", " + std::to_string(v[1]) + ", " + std::to_string(v[2]) + "]";
  };
  os << "wave:\n  k: " << fmt(c.wave.k) << "\n  alpha: [" << fmt(c.wave.alpha1) << ", " << fmt(c.wave.alpha2)
     << "]\n  h: " << fmt(c.wave.h) << "\n";
  const auto& g = c.geometry;
  os << "geometry:\n  shape: " << g.shape << "\n  eps: " << v3(g.eps) << "\n  contrast_scale: " << fmt(g.contrast_scale)
     << "\n  ring:\n    r_inner: " << fmt(g.ring.r_inner) << "\n    r_outer: " << fmt(g.ring.r_outer)
     << "\n    half_height: " << fmt(g.ring.half_height) << "\n  spheres:\n    radius: " << fmt(g.spheres.radius)
     << "\n    centers:\n";
  for (const Vec3& s : g.spheres.centers) os << "      - " << v3(s) << "\n";
  os << "  cube:\n    half_extent: " << v3(g.cube.half_extent) << "\n  point:\n    center: " << v3(g.point_center)
     << "\n    size: " << v3(g.point_size) << "\n";
  os << "sources:\n  z_offset: " << fmt(c.sources.z_offset) << "\n  n1: " << c.sources.n1 << "\n  n2: " << c.sources.n2
     << "\n";
  os << "solver:\n  mode: " << c.solver.mode << "\n  born_order: " << c.solver.born_order << "\n  tol: " << fmt(c.solver.tol)
     << "\n  max_iter: " << c.solver.max_iter << "\n  restart: " << c.solver.restart << "\n  spacing: " << fmt(c.solver.spacing)
     << "\n  dims: " << i3(c.solver.dims) << "\n";
  os << "modes:\n  j_max: " << c.modes.j_max << "\n  include_evanescent: " << (c.modes.include_evanescent ? "true" : "false")
     << "\n";
  os << "noise:\n  delta: " << fmt(c.noise.delta) << "\n  seed: " << c.noise.seed << "\n";
  os << "imaging:\n  p: " << fmt(c.imaging.p) << "\n  functional: " << c.imaging.functional << "\n  grid: " << i3(c.imaging.grid)
     << "\n  q: " << v3(c.imaging.q.real()) << "\n  rho: " << fmt(c.imaging.rho) << "\n";
  os << "output:\n  directory: " << c.output.directory << "\n  formats: [";
  for (std::size_t i = 0; i < c.output.formats.size(); ++i) os << (i ? ", " : "") << c.output.formats[i];
  os << "]\n  iso_fraction: " << fmt(c.output.iso_fraction) << "\n";
  return os.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  // the output directory does not change any result
  ExperimentConfig c = cfg;
  c.output.directory = ".";
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PermittivityModel make_model(const ExperimentConfig& cfg) {
  const auto& g = cfg.geometry;
  const Mat3 eps = g.eps.asDiagonal();
  const double h = cfg.wave.h;
  PermittivityModel model = [&] {
    if (g.shape == "ring") return PermittivityModel(g.ring, eps, h);
    if (g.shape == "spheres") return PermittivityModel(g.spheres, eps, h);
    if (g.shape == "cube") return PermittivityModel(g.cube, eps, h);
    return PermittivityModel::point(g.point_center, g.point_size, eps, h);
  }();
  return g.contrast_scale == 1.0 ? model : model.scaled(g.contrast_scale);
}

VoxelGrid make_voxel_grid(const ExperimentConfig& cfg, const PermittivityModel& model) {
  if (cfg.geometry.shape == "point") return VoxelGrid(model.support(), {1, 1, 1});
  const auto& d = cfg.solver.dims;
  if (d[0] > 0) return VoxelGrid::around(model, d, cfg.wave.h);
  const double s = cfg.solver.spacing > 0.0 ? cfg.solver.spacing : default_voxel_spacing(cfg.wave);
  return VoxelGrid::around(model, s, cfg.wave.h);
}

SolverSpec make_solver(const ExperimentConfig& cfg) {
  SolverSpec s;
  s.kind = cfg.solver.mode == "born" ? SolverSpec::Kind::Born : SolverSpec::Kind::Iterative;
  s.born_order = cfg.solver.born_order;
  s.tol = cfg.solver.tol;
  s.max_iter = cfg.solver.max_iter;
  s.restart = cfg.solver.restart;
  return s;
}

ModeSet make_modes(const ExperimentConfig& cfg) {
  return build_mode_set(cfg.wave, cfg.modes.j_max, cfg.modes.include_evanescent);
}

SamplingGrid make_sampling_grid(const ExperimentConfig& cfg) { return SamplingGrid::domain(cfg.wave, cfg.imaging.grid); }

}  // namespace periscat
