#include "spde/density.hpp"

#include "spde/stats.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace spde::density {

namespace {

Index index_of_zero(const ArrayXd& z_grid) {
  Index best = 0;
  for (Index i = 1; i < z_grid.size(); ++i)
    if (std::abs(z_grid[i]) < std::abs(z_grid[best])) best = i;
  const double span = z_grid[z_grid.size() - 1] - z_grid[0];
  if (std::abs(z_grid[best]) > 1e-9 * std::max(1.0, span))
    throw std::invalid_argument("density grid must contain z = 0");
  return best;
}

double trapezoid(const ArrayXd& z, const ArrayXd& f) {
  double acc = 0.0;
  for (Index i = 1; i < z.size(); ++i) acc += 0.5 * (f[i] + f[i - 1]) * (z[i] - z[i - 1]);
  return acc;
}

}  // namespace

ArrayXd nv_density(const malliavin::GEstimate& g, double e_abs_f, const ArrayXd& z_grid) {
  if (!(e_abs_f > 0.0)) throw std::invalid_argument("E|F| must be positive");
  const Index m = z_grid.size();
  ArrayXd gz(m), psi(m);
  for (Index i = 0; i < m; ++i) {
    gz[i] = g.g_at(z_grid[i]);
    if (!(gz[i] > 0.0)) throw std::invalid_argument("g must be positive on the density grid");
    psi[i] = z_grid[i] / gz[i];
  }
  const Index i0 = index_of_zero(z_grid);

  ArrayXd integral(m);
  integral[i0] = 0.0;
  for (Index i = i0 + 1; i < m; ++i)
    integral[i] = integral[i - 1] + 0.5 * (psi[i] + psi[i - 1]) * (z_grid[i] - z_grid[i - 1]);
  for (Index i = i0 - 1; i >= 0; --i)
    integral[i] = integral[i + 1] - 0.5 * (psi[i] + psi[i + 1]) * (z_grid[i + 1] - z_grid[i]);

  ArrayXd rho(m);
  for (Index i = 0; i < m; ++i) rho[i] = e_abs_f / (2.0 * gz[i]) * std::exp(-integral[i]);
  return rho;
}

Envelopes gaussian_envelopes(double e_abs_f, double c1, double c2, double m,
                             const ArrayXd& z_grid) {
  if (!(c1 > 0.0) || c1 > c2) throw std::invalid_argument("need 0 < c1 <= c2");
  if (!(e_abs_f > 0.0)) throw std::invalid_argument("E|F| must be positive");
  Envelopes env;
  env.lower.resize(z_grid.size());
  env.upper.resize(z_grid.size());
  for (Index i = 0; i < z_grid.size(); ++i) {
    const double q = (z_grid[i] - m) * (z_grid[i] - m);
    env.lower[i] = e_abs_f / (2.0 * c2) * std::exp(-q / (2.0 * c1));
    env.upper[i] = e_abs_f / (2.0 * c1) * std::exp(-q / (2.0 * c2));
  }
  return env;
}

ArrayXd kde(const std::vector<double>& samples, const ArrayXd& z_grid, double bandwidth) {
  const std::size_t n = samples.size();
  if (n < 1000) throw std::invalid_argument("kde needs at least 1000 samples");
  double h = bandwidth;
  if (h <= 0.0) {
    auto s = stats::sorted(samples);
    const double sd = std::sqrt(stats::sample_variance(samples));
    if (sd < 1e-12) throw std::runtime_error("degenerate sample spread");
    h = stats::silverman_bandwidth(
        sd, stats::quantile_sorted(s, 0.75) - stats::quantile_sorted(s, 0.25), n);
  }
  const double norm = 1.0 / (n * h * std::sqrt(kTwoPi));
  ArrayXd rho = ArrayXd::Zero(z_grid.size());
  for (double x : samples)
    for (Index i = 0; i < z_grid.size(); ++i) {
      const double q = (z_grid[i] - x) / h;
      if (std::abs(q) < 8.0) rho[i] += std::exp(-0.5 * q * q);
    }
  return rho * norm;
}

SandwichVerdict verify_sandwich(const ArrayXd& z_grid, const ArrayXd& rho, const Envelopes& env,
                                double window_lo, double window_hi) {
  SandwichVerdict v;
  v.window_lo = window_lo;
  v.window_hi = window_hi;
  v.lower_margin = std::numeric_limits<double>::infinity();
  v.upper_margin = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < z_grid.size(); ++i) {
    if (z_grid[i] < window_lo || z_grid[i] > window_hi) continue;
    ++v.points_checked;
    v.lower_margin = std::min(v.lower_margin, rho[i] - env.lower[i]);
    v.upper_margin = std::min(v.upper_margin, env.upper[i] - rho[i]);
  }
  v.pass = v.points_checked > 0 && v.lower_margin >= 0.0 && v.upper_margin >= 0.0;
  return v;
}

DensityReport build_density_report(const malliavin::GEstimate& g,
                                   const std::vector<double>& f_samples, double lo_q,
                                   double hi_q) {
  DensityReport rep;
  rep.z_grid = g.z_grid;
  rep.f_mean = g.f_mean;
  rep.e_abs_f = g.e_abs_f;
  rep.negative_fraction = g.negative_fraction;

  const auto bounds = malliavin::g_bounds_summary(g, lo_q, hi_q);
  rep.c1 = bounds.g_lo;
  rep.c2 = bounds.g_hi;

  rep.rho_nv = nv_density(g, g.e_abs_f, rep.z_grid);

  std::vector<double> centered(f_samples.size());
  for (std::size_t i = 0; i < f_samples.size(); ++i) centered[i] = f_samples[i] - g.f_mean;
  rep.rho_kde = kde(centered, rep.z_grid);

  rep.envelopes = gaussian_envelopes(rep.e_abs_f, rep.c1, rep.c2, 0.0, rep.z_grid);
  rep.nv_verdict =
      verify_sandwich(rep.z_grid, rep.rho_nv, rep.envelopes, bounds.window_lo, bounds.window_hi);
  rep.kde_verdict =
      verify_sandwich(rep.z_grid, rep.rho_kde, rep.envelopes, bounds.window_lo, bounds.window_hi);

  rep.normalization_defect = std::abs(trapezoid(rep.z_grid, rep.rho_nv) - 1.0);

  double gap = 0.0;
  for (Index i = 0; i < rep.z_grid.size(); ++i) {
    const double q = rep.z_grid[i] * rep.z_grid[i];
    const double swapped_lower = rep.e_abs_f / (2.0 * rep.c1) * std::exp(-q / (2.0 * rep.c2));
    const double swapped_upper = rep.e_abs_f / (2.0 * rep.c2) * std::exp(-q / (2.0 * rep.c1));
    gap = std::max(gap, swapped_lower - swapped_upper);
  }
  rep.alt_orientation_gap = gap;
  return rep;
}

void DensityReport::write_csv(std::ostream& os) const {
  os << "z,rho_nv,rho_kde,env_lo,env_hi\n";
  char buf[256];
  for (Index i = 0; i < z_grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", z_grid[i], rho_nv[i],
                  rho_kde[i], envelopes.lower[i], envelopes.upper[i]);
    os << buf;
  }
}

std::string DensityReport::verdict_json() const {
  char buf[1024];
  std::snprintf(
      buf, sizeof buf,
      "{\"nv_pass\":%s,\"kde_pass\":%s,\"c1\":%.17g,\"c2\":%.17g,\"e_abs_f\":%.17g,"
      "\"f_mean\":%.17g,\"normalization_defect\":%.17g,\"negative_fraction\":%.17g,"
      "\"alt_orientation_gap\":%.17g,\"nv_lower_margin\":%.17g,\"nv_upper_margin\":%.17g,"
      "\"kde_lower_margin\":%.17g,\"kde_upper_margin\":%.17g,\"window\":[%.17g,%.17g]}",
      nv_verdict.pass ? "true" : "false", kde_verdict.pass ? "true" : "false", c1, c2, e_abs_f,
      f_mean, normalization_defect, negative_fraction, alt_orientation_gap,
      nv_verdict.lower_margin, nv_verdict.upper_margin, kde_verdict.lower_margin,
      kde_verdict.upper_margin, nv_verdict.window_lo, nv_verdict.window_hi);
  return buf;
}

ScalingReport scaling_fit(const std::vector<ScalingPoint>& runs, SlopeBand lo_band,
                          SlopeBand hi_band) {
  if (runs.size() < 5) throw std::invalid_argument("scaling_fit needs at least 5 time points");
  std::vector<double> lt, llo, lhi;
  for (const auto& p : runs) {
    if (!(p.t > 0.0) || !(p.g_lo > 0.0) || !(p.g_hi > 0.0))
      throw std::invalid_argument("scaling_fit needs positive t, g_lo, g_hi");
    lt.push_back(std::log(p.t));
    llo.push_back(std::log(p.g_lo));
    lhi.push_back(std::log(p.g_hi));
  }
  const auto flo = stats::fit_line(lt, llo);
  const auto fhi = stats::fit_line(lt, lhi);

  ScalingReport rep;
  rep.points = runs;
  rep.slope_lo = flo.slope;
  rep.slope_lo_se = flo.slope_se;
  rep.slope_hi = fhi.slope;
  rep.slope_hi_se = fhi.slope_se;
  rep.lo_band = lo_band;
  rep.hi_band = hi_band;
  rep.pass = flo.slope >= lo_band.min && flo.slope <= lo_band.max && fhi.slope >= hi_band.min &&
             fhi.slope <= hi_band.max;
  return rep;
}

void ScalingReport::write_csv(std::ostream& os) const {
  os << "t,g_lo,g_hi\n";
  char buf[128];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.t, p.g_lo, p.g_hi);
    os << buf;
  }
}

std::string ScalingReport::slopes_json() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "{\"slope_lo\":%.17g,\"slope_lo_se\":%.17g,\"slope_hi\":%.17g,"
                "\"slope_hi_se\":%.17g,\"lo_band\":[%.17g,%.17g],\"hi_band\":[%.17g,%.17g],"
                "\"pass\":%s}",
                slope_lo, slope_lo_se, slope_hi, slope_hi_se, lo_band.min, lo_band.max,
                hi_band.min, hi_band.max, pass ? "true" : "false");
  return buf;
}

}  // namespace spde::density
