#pragma once

#include "spde/noise.hpp"
#include "spde/types.hpp"

#include <string>

namespace spde::solvers {

enum class DriftKind { kZero, kLinear, kAtan, kTanh };

struct Drift {
  DriftKind kind = DriftKind::kZero;
  double param = 0.0;

  static Drift zero() { return {DriftKind::kZero, 0.0}; }
  static Drift linear(double lambda) { return {DriftKind::kLinear, lambda}; }
  static Drift arctan(double a) { return {DriftKind::kAtan, a}; }
  static Drift hyptan(double a) { return {DriftKind::kTanh, a}; }

  double operator()(double u) const;
  double deriv(double u) const;
  double max_deriv() const;
  bool is_zero() const { return kind == DriftKind::kZero; }
  std::string label() const;
};

enum class InitialKind { kZero, kConstant, kSineMode, kBump };

// Initial profiles: constant value, sin(k pi x) on the interval model,
// a centered Gaussian bump of given width on the torus.
struct InitialData {
  InitialKind kind = InitialKind::kZero;
  double amplitude = 0.0;
  double param = 1.0;  // sine: mode index; bump: width
};

enum class ModelKind { kHeatDirichlet1d, kHeatTorus, kWaveTorus };

struct ModelSpec {
  ModelKind model = ModelKind::kHeatDirichlet1d;
  int d = 1;
  Drift drift{};
  double sigma = 1.0;
  InitialData u0{};
  InitialData v0{};  // wave velocity profile
  double t_eval = 0.25;
  Vector3d x_eval = Vector3d::Zero();  // interval model reads x_eval[0]

  int n_x = 64;  // interval model: subintervals of [0, 1]
  noise::TorusGrid grid{1, 1.0, 64};
  noise::SpectralMeasure mu = noise::SpectralMeasure::white(1);
  double dt_target = 1e-3;

  int n_steps() const;
  double dt() const { return t_eval / n_steps(); }
  // stages the noise realization must carry (wave resolves each step's
  // stochastic convolution with a second stage)
  int noise_stages() const { return model == ModelKind::kWaveTorus ? 2 : 1; }
  noise::NoiseRealization sample_noise_for(std::uint64_t seed) const;
};

struct TrajectoryResult {
  double f_value = 0.0;    // u(t_eval, x_eval)
  ArrayXd final_field;     // interval: nodes 0..n_x; torus: physical values
  std::uint64_t seed = 0;
};

// Malliavin tangent of F = u(t_eval, x_eval), one row per time slice.
//   interval model: grid_slices(step, interior node) = D_{r, z} F
//   torus models:   mode_slices(step, k) = synthesis coefficients of the
//                   noise-space element D_r F (usable for d = 3, where the
//                   wave solution operator is a measure with no density)
struct TangentField {
  MatrixXd grid_slices;
  MatrixXcd mode_slices;
  double dt = 0.0;
  double dx = 0.0;
};

// Forward solves.  `path` (when non-null) receives the pre-step states
// needed by the adjoint pass: interval model stores interior nodal values,
// torus models store physical nodal values, one row per step.
TrajectoryResult solve_heat_dirichlet(const ModelSpec& spec, const noise::NoiseRealization& w,
                                      MatrixXd* path = nullptr);
TrajectoryResult solve_heat_torus(const ModelSpec& spec, const noise::NoiseRealization& w,
                                  MatrixXd* path = nullptr);
TrajectoryResult solve_wave_torus(const ModelSpec& spec, const noise::NoiseRealization& w,
                                  MatrixXd* path = nullptr);
TrajectoryResult solve(const ModelSpec& spec, const noise::NoiseRealization& w,
                       MatrixXd* path = nullptr);

// Tangent equations solved by one backward adjoint sweep over the stored
// path (the diffusion step and the drift linearization are both
// self-adjoint, so the sweep reuses the forward operators).
TangentField tangent_adjoint(const ModelSpec& spec, const MatrixXd& path);

// integral over r in [0, t_eval] of <D_r, D~_r>_H dr.
double tangent_inner(const ModelSpec& spec, const TangentField& a, const TangentField& b);
double htnorm_tangent(const ModelSpec& spec, const TangentField& tf);

// Scheme-exact variances of F for additive noise (drift = 0), used as
// oracles and refinement probes.
double heat_dirichlet_scheme_variance(int n_x, double dt, int n_steps, double x, double sigma);
double heat_torus_variance(const ModelSpec& spec);
double wave_torus_variance(const ModelSpec& spec);

}  // namespace spde::solvers
