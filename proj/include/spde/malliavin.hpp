#pragma once

#include "spde/solvers.hpp"

#include <iosfwd>
#include <vector>

namespace spde::malliavin {

// One Monte Carlo sample of the shift representation
//   g(z) = E[ <DF(w), DF(w~)>_{H_T} | F = z ],   w~ = e^{-theta} w + sqrt(1 - e^{-2 theta}) w'
// with theta = -ln U so the e^{-theta} dtheta weight is absorbed into a
// single uniform draw per pair.
struct ShiftPairSample {
  double f = 0.0;
  double f_shift = 0.0;
  double theta = 0.0;
  double c = 0.0;       // cross inner product of the two tangent fields over [0, t]
  double h_norm = 0.0;  // squared noise-space norm of the unshifted tangent
  std::uint64_t seed = 0;
  std::uint64_t seed_prime = 0;
};

ShiftPairSample draw_shift_pair(const solvers::ModelSpec& spec, std::uint64_t master_seed,
                                std::uint64_t index);

// Fixed shift angle (stratified-theta estimators); the uniform draw is skipped.
ShiftPairSample draw_shift_pair_at(const solvers::ModelSpec& spec, std::uint64_t master_seed,
                                   std::uint64_t index, double theta);

std::vector<ShiftPairSample> collect_samples(const solvers::ModelSpec& spec, int n,
                                             std::uint64_t master_seed);
std::vector<ShiftPairSample> collect_samples_at(const solvers::ModelSpec& spec, int n,
                                                std::uint64_t master_seed, double theta);

enum class Regressor { kKernel, kBinned };

struct GOptions {
  Regressor regressor = Regressor::kKernel;
  double bandwidth = 0.0;  // 0: Silverman's rule on F
  int grid_points = 401;   // symmetric grid over +-4 sd, step sd/50, includes 0
  int min_per_bin = 50;    // binned regressor: equal-count bins of at least this size
  ArrayXd grid;            // nonempty: evaluate on this centered grid instead
};

// Regression estimate of g on a grid of centered F-values (z = F - f_mean).
struct GEstimate {
  ArrayXd z_grid;
  ArrayXd g_hat;  // clipped at g_min
  ArrayXd g_raw;
  ArrayXd counts;  // samples within 2h of each grid point (bin size when binned)
  ArrayXd se;      // pointwise regression standard error
  double bandwidth = 0.0;
  double g_min = 0.0;  // clip floor: max(eps, 1% quantile of positive raw values)
  int n_samples = 0;
  double f_mean = 0.0;
  double f_sd = 0.0;
  double e_abs_f = 0.0;  // mean |F - f_mean|
  double negative_fraction = 0.0;  // raw <= 0 within the central window
  ArrayXd f_quantiles;  // 101 percentiles of centered F

  double quantile(double q) const;         // centered scale
  double g_at(double z) const;             // clipped estimate, clamped linear interp
};

GEstimate estimate_g(const std::vector<ShiftPairSample>& samples, const GOptions& opts = {});

struct GBounds {
  double g_lo = 0.0;
  double g_hi = 0.0;
  double window_lo = 0.0;  // centered F window the extrema were taken over
  double window_hi = 0.0;
};

// Extrema of the clipped estimate over the central quantile window of F.
GBounds g_bounds_summary(const GEstimate& g, double lo_q = 0.05, double hi_q = 0.95);

void write_samples_jsonl(std::ostream& os, const std::vector<ShiftPairSample>& samples);
void write_estimate_csv(std::ostream& os, const GEstimate& g);

}  // namespace spde::malliavin
