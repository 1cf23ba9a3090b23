#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "periscat/forward.hpp"
#include "periscat/imaging.hpp"
#include "periscat/modal.hpp"
#include "periscat/noise.hpp"
#include "periscat/scene.hpp"

namespace periscat {

/// Thrown for malformed config text; carries the 1-based line when known.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0);
  int line() const { return line_; }

 private:
  int line_;
};

struct GeometryConfig {
  std::string shape = "ring";  // ring | spheres | cube | point
  Vec3 eps{1.3, 1.5, 1.4};      // diagonal of eps inside D
  double contrast_scale = 1.0;
  RingShape ring;
  SpheresShape spheres;
  CubeShape cube;
  Vec3 point_center = Vec3::Zero();
  Vec3 point_size{0.1, 0.1, 0.1};
};

struct SolverConfig {
  std::string mode = "iterative";  // iterative | born
  int born_order = 1;
  double tol = 1e-6;
  int max_iter = 500;
  int restart = 50;
  double spacing = 0.0;          // max voxel edge; 0 means a tenth of the wavelength
  std::array<int, 3> dims{0, 0, 0};  // explicit voxel counts override spacing
};

struct ModesConfig {
  int j_max = 8;
  bool include_evanescent = true;
};

struct ImagingConfig {
  double p = 3.0;
  std::string functional = "new";  // new | osm | both
  std::array<int, 3> grid{40, 40, 20};
  Vec3c q{1.0, 1.0, 1.0};
  double rho = 1.5;
};

struct OutputConfig {
  std::string directory = ".";
  std::vector<std::string> formats{"vtk", "csv"};
  double iso_fraction = 0.6;
};

struct ExperimentConfig {
  WaveParameters wave;
  GeometryConfig geometry;
  SourcePlaneArray sources;
  SolverConfig solver;
  ModesConfig modes;
  NoiseSpec noise;
  ImagingConfig imaging;
  OutputConfig output;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// YAML text; every key is optional and unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical text of every field, defaults included.
std::string canonical_config(const ExperimentConfig& cfg);

/// FNV-1a 64 of canonical_config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

PermittivityModel make_model(const ExperimentConfig& cfg);
VoxelGrid make_voxel_grid(const ExperimentConfig& cfg, const PermittivityModel& model);
SolverSpec make_solver(const ExperimentConfig& cfg);
ModeSet make_modes(const ExperimentConfig& cfg);
SamplingGrid make_sampling_grid(const ExperimentConfig& cfg);

}  // namespace periscat
