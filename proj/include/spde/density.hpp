#pragma once

#include "spde/malliavin.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace spde::density {

// rho(z) = E|F| / (2 g(z)) exp(-int_0^z y/g(y) dy), cumulative trapezoid from
// z = 0 outward in both directions.  The grid must contain 0 (F centered).
ArrayXd nv_density(const malliavin::GEstimate& g, double e_abs_f, const ArrayXd& z_grid);

struct Envelopes {
  ArrayXd lower;
  ArrayXd upper;
};

// lower(z) = E|F|/(2 c2) e^{-(z-m)^2/(2 c1)},
// upper(z) = E|F|/(2 c1) e^{-(z-m)^2/(2 c2)}, 0 < c1 <= c2.
// This is the orientation with lower <= upper pointwise; the report records
// how far the swapped-constant variant is from being an envelope pair at all.
Envelopes gaussian_envelopes(double e_abs_f, double c1, double c2, double m,
                             const ArrayXd& z_grid);

// Gaussian kernel density estimate on the grid; bandwidth 0 = Silverman.
ArrayXd kde(const std::vector<double>& samples, const ArrayXd& z_grid, double bandwidth = 0.0);

struct SandwichVerdict {
  bool pass = false;
  double lower_margin = 0.0;  // min over window of rho - lower
  double upper_margin = 0.0;  // min over window of upper - rho
  double window_lo = 0.0;
  double window_hi = 0.0;
  int points_checked = 0;
};

SandwichVerdict verify_sandwich(const ArrayXd& z_grid, const ArrayXd& rho, const Envelopes& env,
                                double window_lo, double window_hi);

struct DensityReport {
  ArrayXd z_grid;  // centered on f_mean
  ArrayXd rho_nv;
  ArrayXd rho_kde;
  Envelopes envelopes;
  double f_mean = 0.0;
  double e_abs_f = 0.0;
  double c1 = 0.0, c2 = 0.0;  // window extrema of the g estimate
  double normalization_defect = 0.0;  // |trapezoid integral of rho_nv - 1|
  double negative_fraction = 0.0;     // pre-clip fraction, copied from the estimate
  // max over the grid of (swapped lower - swapped upper): positive means the
  // swapped-constant display is internally inconsistent for these c1 < c2
  double alt_orientation_gap = 0.0;
  SandwichVerdict nv_verdict;
  SandwichVerdict kde_verdict;

  void write_csv(std::ostream& os) const;
  std::string verdict_json() const;
};

// Full post-processing: NV reconstruction on the estimate grid, KDE of the
// F sample, envelopes from the window extrema of g, both sandwich checks.
DensityReport build_density_report(const malliavin::GEstimate& g,
                                   const std::vector<double>& f_samples, double lo_q = 0.05,
                                   double hi_q = 0.95);

struct ScalingPoint {
  double t = 0.0;
  double g_lo = 0.0;
  double g_hi = 0.0;
};

struct SlopeBand {
  double min = -1e300;
  double max = 1e300;
};

struct ScalingReport {
  std::vector<ScalingPoint> points;
  double slope_lo = 0.0, slope_lo_se = 0.0;  // fit of log g_lo vs log t
  double slope_hi = 0.0, slope_hi_se = 0.0;
  SlopeBand lo_band, hi_band;
  bool pass = false;

  void write_csv(std::ostream& os) const;
  std::string slopes_json() const;
};

// Least-squares slopes of log g_lo and log g_hi against log t; needs >= 5
// time points.
ScalingReport scaling_fit(const std::vector<ScalingPoint>& runs, SlopeBand lo_band,
                          SlopeBand hi_band);

}  // namespace spde::density
