#pragma once

#include <array>
#include <memory>
#include <vector>

#include "periscat/green.hpp"
#include "periscat/modal.hpp"
#include "periscat/scene.hpp"
#include "periscat/types.hpp"

namespace periscat {

/// Uniform cell-centered grid, x-fastest ordering.
struct VoxelGrid {
  Box box;
  std::array<int, 3> n{32, 32, 32};

  VoxelGrid() = default;
  VoxelGrid(const Box& b, const std::array<int, 3>& dims);

  /// Support box of the model padded by one cell on every side, clipped to
  /// Omega_h.
  static VoxelGrid around(const PermittivityModel& model, const std::array<int, 3>& dims, double h = 1.0);

  /// Padded support box with cells no longer than max_spacing on any axis,
  /// so that cells stay close to cubes.
  static VoxelGrid around(const PermittivityModel& model, double max_spacing, double h = 1.0);

  Vec3 spacing() const;
  double cell_volume() const;
  std::size_t size() const { return static_cast<std::size_t>(n[0]) * n[1] * n[2]; }
  std::size_t index(int i1, int i2, int i3) const {
    return static_cast<std::size_t>(i1) + static_cast<std::size_t>(n[0]) * (i2 + static_cast<std::size_t>(n[1]) * i3);
  }
  Vec3 center(int i1, int i2, int i3) const;
  Vec3 center(std::size_t idx) const;
};

/// A tenth of the wavelength.
double default_voxel_spacing(const WaveParameters& params);

/// One complex 3-vector per voxel.
using VectorField = std::vector<Vec3c>;

double field_norm(const VectorField& f);

/// Contrast eps - I sampled at the cell centers.
std::vector<Mat3> sample_contrast(const PermittivityModel& model, const VoxelGrid& grid);

/// Discrete volume operator E -> k^2 int_D G(x, y)(eps(y) - I) E(y) dy at the
/// cell centers. Midpoint rule off the diagonal; the self cell uses the
/// mean of the free-space dyadic over the equal-volume ball plus the
/// regular periodic remainder at the origin. Applied by FFT convolution.
class LsOperator {
 public:
  LsOperator(const WaveParameters& params, const PermittivityModel& model, const VoxelGrid& grid,
             const KernelTruncation& trunc = {});
  LsOperator(const WaveParameters& params, std::vector<Mat3> contrast, const VoxelGrid& grid,
             const KernelTruncation& trunc = {});
  ~LsOperator();
  LsOperator(const LsOperator&) = delete;
  LsOperator& operator=(const LsOperator&) = delete;

  VectorField apply(const VectorField& E) const;

  /// Dense O(N^2) application of the same discrete operator.
  VectorField apply_direct(const VectorField& E) const;

  /// Kernel block acting between voxels offset by (m1, m2, m3) cells.
  Mat3c kernel(int m1, int m2, int m3) const;

  const WaveParameters& params() const { return params_; }
  const VoxelGrid& grid() const { return grid_; }
  const std::vector<Mat3>& contrast() const { return contrast_; }
  bool zero_contrast() const { return active_.empty(); }

  /// Self-cell factor (2/3)(exp(ika)(1 - ika) - 1) - 1/3 for the ball radius a.
  static Complex ball_self_term(double k, double cell_volume);

 private:
  struct Fft;
  void build(const KernelTruncation& trunc);

  WaveParameters params_;
  VoxelGrid grid_;
  std::vector<Mat3> contrast_;
  std::vector<std::size_t> active_;
  std::vector<Mat3c> table_;  // (2n - 1)^3 offsets, x-fastest
  std::unique_ptr<Fft> fft_;
};

VectorField ls_apply(const WaveParameters& params, const PermittivityModel& model, const VoxelGrid& grid,
                     const VectorField& E, const KernelTruncation& trunc = {});

struct SolverSpec {
  enum class Kind { Born, Iterative };
  Kind kind = Kind::Iterative;
  int born_order = 1;
  double tol = 1e-6;
  int max_iter = 500;
  int restart = 50;

  void validate() const;
};

struct SolveResult {
  VectorField field;
  int iterations = 0;
  double residual = 0.0;  // ||E - E_in - L E|| / ||E_in||
};

/// Born mode returns born_order terms of the Neumann series and throws
/// ConvergenceError when a term outgrows its predecessor. Iterative mode
/// runs restarted GMRES on (I - L) E = E_in.
SolveResult solve_total_field(const LsOperator& op, const VectorField& incident, const SolverSpec& solver);

SolveResult solve_total_field(const WaveParameters& params, const PermittivityModel& model, const VoxelGrid& grid,
                              const Vec3& source, const SolverSpec& solver, const KernelTruncation& trunc = {});

/// Per-mode Rayleigh coefficients of one scattered field, indexed
/// [side_slot][mode].
struct RayleighCoefficients {
  std::array<std::vector<Vec3c>, 2> u;

  const Vec3c& at(Side s, std::size_t mode) const { return u[side_slot(s)][mode]; }
};

/// u_j^+- = k^2 vol sum_y g_j^+-(y)(eps(y) - I) E(y) over the voxels.
RayleighCoefficients rayleigh_data(const WaveParameters& params, const VoxelGrid& grid,
                                   const std::vector<Mat3>& contrast, const VectorField& E, const ModeSet& modes);
RayleighCoefficients rayleigh_data(const WaveParameters& params, const PermittivityModel& model,
                                   const VoxelGrid& grid, const VectorField& E, const ModeSet& modes);

/// (alpha_1j, alpha_2j, +-beta_j) u_3.
Vec3c third_component_vector(const Mode& mode, Side side, const Vec3c& u);

/// Field samples on the plane x3 = height at x_i = -pi + 2 pi i / n, x1 fastest.
struct TraceSamples {
  int n = 0;
  double height = 0.0;
  std::vector<Vec3c> values;
};

std::vector<Vec3> trace_points(int n, double height);

/// Rectangle-rule Rayleigh coefficient of mode j on the plane |height| >= h;
/// the side follows the sign of height. Warns when n <= 2 max(|j1|, |j2|).
Vec3c extract_rayleigh_from_trace(const TraceSamples& trace, const WaveParameters& params, ModeIndex j);

/// Scattered field k^2 vol sum_y G(x, y)(eps(y) - I) E(y) by direct quadrature.
Vec3c scattered_field(const GreenKernel& kernel, const VoxelGrid& grid, const std::vector<Mat3>& contrast,
                      const VectorField& E, const Vec3& x);

/// Rayleigh series sum_j u_j phi_j^side(x) for x beyond the slab on that side.
Vec3c rayleigh_field(const WaveParameters& params, const ModeSet& modes, const RayleighCoefficients& c, Side side,
                     const Vec3& x);

/// Data U: u[side][mode][source].
class RayleighDataMatrix {
 public:
  RayleighDataMatrix() = default;
  RayleighDataMatrix(const WaveParameters& params, ModeSet modes, std::size_t n_sources);

  Vec3c& at(Side s, std::size_t mode, std::size_t source) { return data_[slot(s, mode, source)]; }
  const Vec3c& at(Side s, std::size_t mode, std::size_t source) const { return data_[slot(s, mode, source)]; }

  void set_source(std::size_t source, const RayleighCoefficients& c);

  const WaveParameters& params() const { return params_; }
  const ModeSet& modes() const { return modes_; }
  std::size_t n_sources() const { return n_sources_; }
  std::vector<Vec3c>& raw() { return data_; }
  const std::vector<Vec3c>& raw() const { return data_; }
  double frobenius_norm() const;

 private:
  std::size_t slot(Side s, std::size_t mode, std::size_t source) const {
    return (static_cast<std::size_t>(side_slot(s)) * modes_.size() + mode) * n_sources_ + source;
  }

  WaveParameters params_;
  ModeSet modes_;
  std::size_t n_sources_ = 0;
  std::vector<Vec3c> data_;
};

struct ForwardRun {
  RayleighDataMatrix data;
  std::vector<int> iterations;
  std::vector<double> residuals;
  std::vector<VectorField> fields;  // filled when requested
};

/// Solves every source (in parallel) and assembles U. Solver failures are
/// rethrown with the offending source index in the message.
ForwardRun build_data_matrix(const WaveParameters& params, const PermittivityModel& model, const VoxelGrid& grid,
                             const std::vector<Vec3>& sources, const ModeSet& modes, const SolverSpec& solver,
                             const KernelTruncation& trunc = {}, bool keep_fields = false);

}  // namespace periscat
