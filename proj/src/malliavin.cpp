#include "spde/malliavin.hpp"

#include "spde/stats.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <utility>

namespace spde::malliavin {

namespace {

ShiftPairSample draw_pair_impl(const solvers::ModelSpec& spec, std::uint64_t master,
                               std::uint64_t index, const double* fixed_theta) {
  ShiftPairSample s;
  s.seed = rng::derive(master, index, rng::Stream::kNoise);
  s.seed_prime = rng::derive(master, index, rng::Stream::kNoisePrime);
  auto w = spec.sample_noise_for(s.seed);
  auto wp = spec.sample_noise_for(s.seed_prime);

  if (fixed_theta) {
    s.theta = *fixed_theta;
  } else {
    auto eng = rng::engine(rng::derive(master, index, rng::Stream::kTheta));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u;
    do { u = unif(eng); } while (u <= 0.0);
    s.theta = -std::log(u);
  }
  auto wt = noise::mehler_shift(w, wp, s.theta);

  // additive noise: tangents ignore the path, skip storing it
  MatrixXd path_a, path_b;
  MatrixXd* pa = spec.drift.is_zero() ? nullptr : &path_a;
  MatrixXd* pb = spec.drift.is_zero() ? nullptr : &path_b;
  s.f = solvers::solve(spec, w, pa).f_value;
  s.f_shift = solvers::solve(spec, wt, pb).f_value;
  auto ta = solvers::tangent_adjoint(spec, path_a);
  auto tb = solvers::tangent_adjoint(spec, path_b);
  s.c = solvers::tangent_inner(spec, ta, tb);
  s.h_norm = solvers::tangent_inner(spec, ta, ta);
  if (!std::isfinite(s.c)) throw std::runtime_error("tangent inner product is not finite");
  return s;
}

}  // namespace

ShiftPairSample draw_shift_pair(const solvers::ModelSpec& spec, std::uint64_t master_seed,
                                std::uint64_t index) {
  return draw_pair_impl(spec, master_seed, index, nullptr);
}

ShiftPairSample draw_shift_pair_at(const solvers::ModelSpec& spec, std::uint64_t master_seed,
                                   std::uint64_t index, double theta) {
  if (theta < 0.0) throw std::invalid_argument("shift angle must be nonnegative");
  return draw_pair_impl(spec, master_seed, index, &theta);
}

std::vector<ShiftPairSample> collect_samples(const solvers::ModelSpec& spec, int n,
                                             std::uint64_t master_seed) {
  std::vector<ShiftPairSample> out(n);
  for (int i = 0; i < n; ++i) out[i] = draw_shift_pair(spec, master_seed, i);
  return out;
}

std::vector<ShiftPairSample> collect_samples_at(const solvers::ModelSpec& spec, int n,
                                                std::uint64_t master_seed, double theta) {
  std::vector<ShiftPairSample> out(n);
  for (int i = 0; i < n; ++i) out[i] = draw_shift_pair_at(spec, master_seed, i, theta);
  return out;
}

double GEstimate::quantile(double q) const {
  const double pos = std::clamp(q, 0.0, 1.0) * (f_quantiles.size() - 1);
  const auto i = static_cast<Index>(pos);
  const double frac = pos - i;
  return i + 1 < f_quantiles.size() ? f_quantiles[i] * (1.0 - frac) + f_quantiles[i + 1] * frac
                                    : f_quantiles[i];
}

double GEstimate::g_at(double z) const {
  const Index m = z_grid.size();
  if (z <= z_grid[0]) return g_hat[0];
  if (z >= z_grid[m - 1]) return g_hat[m - 1];
  Index lo = 0, hi = m - 1;
  while (hi - lo > 1) {
    const Index mid = (lo + hi) / 2;
    (z_grid[mid] <= z ? lo : hi) = mid;
  }
  const double t = (z - z_grid[lo]) / (z_grid[hi] - z_grid[lo]);
  return g_hat[lo] * (1.0 - t) + g_hat[hi] * t;
}

GEstimate estimate_g(const std::vector<ShiftPairSample>& samples, const GOptions& opts) {
  const std::size_t n = samples.size();
  if (n < 1000) throw std::invalid_argument("estimate_g needs at least 1000 sample pairs");

  GEstimate est;
  est.n_samples = static_cast<int>(n);

  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = samples[i].f;
  est.f_mean = stats::mean(f);
  est.f_sd = std::sqrt(stats::sample_variance(f));
  if (est.f_sd < 1e-12) throw std::runtime_error("degenerate F spread");

  // center F and sort the (F, c) pairs once
  std::vector<std::pair<double, double>> fc(n);
  double eabs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fc[i] = {samples[i].f - est.f_mean, samples[i].c};
    eabs += std::abs(fc[i].first);
  }
  est.e_abs_f = eabs / n;
  std::sort(fc.begin(), fc.end());

  std::vector<double> fs(n);
  for (std::size_t i = 0; i < n; ++i) fs[i] = fc[i].first;
  est.f_quantiles.resize(101);
  for (int i = 0; i <= 100; ++i) est.f_quantiles[i] = stats::quantile_sorted(fs, i / 100.0);

  if (opts.grid.size()) {
    est.z_grid = opts.grid;
  } else {
    const int gp = opts.grid_points;
    const double step = est.f_sd / 50.0;
    est.z_grid.resize(gp);
    for (int i = 0; i < gp; ++i) est.z_grid[i] = (i - gp / 2) * step;
  }
  const Index m = est.z_grid.size();
  est.g_raw.resize(m);
  est.counts.resize(m);
  est.se.resize(m);

  const double iqr = stats::quantile_sorted(fs, 0.75) - stats::quantile_sorted(fs, 0.25);
  est.bandwidth = opts.bandwidth > 0.0 ? opts.bandwidth : stats::silverman_bandwidth(est.f_sd, iqr, n);
  const double h = est.bandwidth;

  if (opts.regressor == Regressor::kKernel) {
    for (Index i = 0; i < m; ++i) {
      const double z = est.z_grid[i];
      const auto lo = std::lower_bound(fs.begin(), fs.end(), z - 8.0 * h) - fs.begin();
      const auto hi = std::upper_bound(fs.begin(), fs.end(), z + 8.0 * h) - fs.begin();
      double s0 = 0.0, s1 = 0.0;
      for (auto j = lo; j < hi; ++j) {
        const double q = (fc[j].first - z) / h;
        const double k = std::exp(-0.5 * q * q);
        s0 += k;
        s1 += k * fc[j].second;
      }
      est.g_raw[i] = s0 > 0.0 ? s1 / s0 : 0.0;
      double s2 = 0.0;
      for (auto j = lo; j < hi; ++j) {
        const double q = (fc[j].first - z) / h;
        const double k = std::exp(-0.5 * q * q);
        const double r = fc[j].second - est.g_raw[i];
        s2 += k * k * r * r;
      }
      est.se[i] = s0 > 0.0 ? std::sqrt(s2) / s0 : std::numeric_limits<double>::infinity();
      const auto clo = std::lower_bound(fs.begin(), fs.end(), z - 2.0 * h) - fs.begin();
      const auto chi = std::upper_bound(fs.begin(), fs.end(), z + 2.0 * h) - fs.begin();
      est.counts[i] = static_cast<double>(chi - clo);
    }
  } else {
    const int n_bins = std::max<int>(1, static_cast<int>(n) / std::max(1, opts.min_per_bin));
    std::vector<double> centers(n_bins), means(n_bins), sds(n_bins), cnts(n_bins);
    for (int b = 0; b < n_bins; ++b) {
      const std::size_t lo = b * n / n_bins, hi = (b + 1) * n / n_bins;
      double sf = 0.0, sc = 0.0;
      for (std::size_t j = lo; j < hi; ++j) {
        sf += fc[j].first;
        sc += fc[j].second;
      }
      const double cnt = static_cast<double>(hi - lo);
      centers[b] = sf / cnt;
      means[b] = sc / cnt;
      double ss = 0.0;
      for (std::size_t j = lo; j < hi; ++j) ss += std::pow(fc[j].second - means[b], 2);
      sds[b] = cnt > 1 ? std::sqrt(ss / (cnt - 1) / cnt) : 0.0;
      cnts[b] = cnt;
    }
    for (Index i = 0; i < m; ++i) {
      const double z = est.z_grid[i];
      const auto it = std::lower_bound(centers.begin(), centers.end(), z);
      if (it == centers.begin()) {
        est.g_raw[i] = means.front();
        est.se[i] = sds.front();
        est.counts[i] = cnts.front();
      } else if (it == centers.end()) {
        est.g_raw[i] = means.back();
        est.se[i] = sds.back();
        est.counts[i] = cnts.back();
      } else {
        const auto b = it - centers.begin();
        const double t = (z - centers[b - 1]) / (centers[b] - centers[b - 1]);
        est.g_raw[i] = means[b - 1] * (1.0 - t) + means[b] * t;
        est.se[i] = sds[b - 1] * (1.0 - t) + sds[b] * t;
        est.counts[i] = t < 0.5 ? cnts[b - 1] : cnts[b];
      }
    }
  }

  std::vector<double> positive;
  positive.reserve(m);
  for (Index i = 0; i < m; ++i)
    if (est.g_raw[i] > 0.0) positive.push_back(est.g_raw[i]);
  est.g_min = DBL_EPSILON;
  if (!positive.empty()) {
    std::sort(positive.begin(), positive.end());
    est.g_min = std::max(est.g_min, stats::quantile_sorted(positive, 0.01));
  }
  est.g_hat = est.g_raw.max(est.g_min);

  const double wlo = est.quantile(0.05), whi = est.quantile(0.95);
  int inside = 0, nonpos = 0;
  for (Index i = 0; i < m; ++i) {
    if (est.z_grid[i] < wlo || est.z_grid[i] > whi) continue;
    ++inside;
    if (est.g_raw[i] <= 0.0) ++nonpos;
  }
  est.negative_fraction = inside ? static_cast<double>(nonpos) / inside : 0.0;
  return est;
}

GBounds g_bounds_summary(const GEstimate& g, double lo_q, double hi_q) {
  GBounds b;
  b.window_lo = g.quantile(lo_q);
  b.window_hi = g.quantile(hi_q);
  if (!(b.window_lo < b.window_hi)) throw std::invalid_argument("empty estimation window");
  b.g_lo = std::min(g.g_at(b.window_lo), g.g_at(b.window_hi));
  b.g_hi = std::max(g.g_at(b.window_lo), g.g_at(b.window_hi));
  for (Index i = 0; i < g.z_grid.size(); ++i) {
    if (g.z_grid[i] < b.window_lo || g.z_grid[i] > b.window_hi) continue;
    b.g_lo = std::min(b.g_lo, g.g_hat[i]);
    b.g_hi = std::max(b.g_hi, g.g_hat[i]);
  }
  return b;
}

void write_samples_jsonl(std::ostream& os, const std::vector<ShiftPairSample>& samples) {
  char buf[256];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf,
                  "{\"f\":%.17g,\"f_shift\":%.17g,\"theta\":%.17g,\"c\":%.17g,"
                  "\"seed\":%llu,\"seed_prime\":%llu}\n",
                  s.f, s.f_shift, s.theta, s.c, static_cast<unsigned long long>(s.seed),
                  static_cast<unsigned long long>(s.seed_prime));
    os << buf;
  }
}

void write_estimate_csv(std::ostream& os, const GEstimate& g) {
  os << "z,g_hat,count\n";
  char buf[128];
  for (Index i = 0; i < g.z_grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%g\n", g.z_grid[i], g.g_hat[i], g.counts[i]);
    os << buf;
  }
}

}  // namespace spde::malliavin
