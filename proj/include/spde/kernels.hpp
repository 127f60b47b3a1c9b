#pragma once

#include "spde/spectral_measure.hpp"
#include "spde/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

// Fourier convention throughout: F phi(xi) = integral of e^{-2 pi i x.xi} phi(x) dx.

namespace spde::kernels {

// ---------------------------------------------------------------------------
// Heat kernel on [0, 1] with Dirichlet boundary conditions.

struct HeatDirichletKernel {
  enum class Representation { kEigenSeries, kImageMethod };
  Representation representation = Representation::kEigenSeries;
  int series_terms = 512;  // eigen-series cap; early exit on tail < 1e-16
  int image_terms = 32;    // reflections per side for the image method
};

// G_t(x, y), t > 0, x, y in [0, 1].
double heat_dirichlet_green(double t, double x, double y,
                            const HeatDirichletKernel& kernel = {});

// integral over s in [t_lo, t_hi], y in [0, 1] of G_{t_hi - s}(x, y)^2,
// via the closed eigen-series form.
double heat_dirichlet_sq_norm(double t_lo, double t_hi, double x);

// ---------------------------------------------------------------------------
// Free-space heat kernel on R^d.

struct FreeSpaceHeatKernel {
  int d = 1;
  double value(double t, double r) const;    // G_t at |x| = r
  double fourier(double t, double r) const;  // exp(-4 pi^2 t r^2)
};

// integral over R^d of (1 - e^{-8 pi^2 t |xi|^2}) / (8 pi^2 |xi|^2) mu(dxi);
// equals the squared noise norm of the heat solution at time t.  Throws
// std::domain_error when the integral diverges.
double heat_rd_spectral_integral(double t, const noise::SpectralMeasure& mu);

// ---------------------------------------------------------------------------
// Wave fundamental solution on R^d, d <= 3.

struct WaveKernel {
  int d = 1;
  // density at |x| = r for d = 1, 2 (d = 3 carries a surface measure with
  // no density; only the Fourier side below is meaningful there)
  double value(double t, double r) const;
};

// F Gamma_t(xi) = sin(2 pi t |xi|) / (2 pi |xi|); value t at xi = 0.
double wave_ft(double t, double r);

// integral over s in [0, t] of (F Gamma_s(xi))^2; closed form
// t / (2 a^2) - sin(2 a t) / (4 a^3) with a = 2 pi |xi|; t^3 / 3 at xi = 0.
double wave_ft_time_integral(double t, double r);

// integral over s in [0, t] of Gamma_s^d(R^d) = t^2 / 2 for d = 1, 2, 3.
double wave_mass_integral(int d, double t);

// integral over R^d of wave_ft_time_integral(t, |xi|) mu(dxi); the wave
// analogue of heat_rd_spectral_integral.
double wave_spectral_time_integral(double t, const noise::SpectralMeasure& mu);

// ---------------------------------------------------------------------------
// Bound checks: each named inequality is evaluated on a parameter grid and
// reported as integral / envelope ratios.

struct BoundParams {
  ArrayXd t_grid;
  ArrayXd r_grid;          // |xi| values where a bound is pointwise in xi
  double x = 0.5;          // spatial point for the Dirichlet bound
  int d = 1;               // dimension for the wave mass bound
  noise::SpectralMeasure mu = noise::SpectralMeasure::white(1);
  double eta = 0.4;        // integrability exponent for measure-side bounds
};

// family: -1 rows feed the lower-constant estimate, +1 the upper, 0 both.
struct BoundPoint {
  double p1 = 0.0;
  double p2 = 0.0;
  int family = 0;
  double integral = 0.0;
  double envelope = 0.0;
  double ratio = 0.0;
};

struct BoundReport {
  std::string name;
  std::vector<std::string> param_names;
  std::vector<BoundPoint> points;
  double ratio_min = 0.0;
  double ratio_max = 0.0;
  double claimed_lower = 0.0;
  double claimed_upper = 0.0;
  bool lower_is_analytic = false;  // false: constant is empirical
  bool upper_is_analytic = false;
  bool pass = false;

  void write_csv_rows(std::ostream& os) const;
  static void write_csv_header(std::ostream& os);
  std::string summary_json() const;
};

// Supported names: square-norm-sqrt-t, heat-rd-time-bounds,
// wave-xi-sandwich, wave-mu-upper, wave-mass-quadratic, wave-time-bounds.
BoundReport check_bound(const std::string& name, const BoundParams& params);

// Names in canonical order for a full run.
std::vector<std::string> bound_names();

}  // namespace spde::kernels
