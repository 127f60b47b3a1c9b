#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace spde::stats {

inline double mean(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / v.size();
}

inline double sample_variance(const std::vector<double>& v) {
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / (v.size() - 1);
}

inline std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// linear-interpolation quantile of an already sorted sample
inline double quantile_sorted(const std::vector<double>& s, double q) {
  if (s.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (q <= 0.0) return s.front();
  if (q >= 1.0) return s.back();
  const double pos = q * (s.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - i;
  return i + 1 < s.size() ? s[i] * (1.0 - frac) + s[i + 1] * frac : s[i];
}

inline double silverman_bandwidth(double sd, double iqr, std::size_t n) {
  double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Kolmogorov-Smirnov statistic against a cdf, sorted input.
template <class Cdf>
double ks_statistic(const std::vector<double>& s, Cdf cdf) {
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double c = cdf(s[i]);
    d = std::max(d, std::max(std::abs(c - i / n), std::abs((i + 1) / n - c)));
  }
  return d;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("fit_line needs >= 3 matched points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_line needs spread in x");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += r * r;
  }
  fit.slope_se = std::sqrt(rss / (x.size() - 2) / sxx);
  return fit;
}

}  // namespace spde::stats
