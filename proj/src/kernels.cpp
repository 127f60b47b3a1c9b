#include "spde/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace spde::kernels {

namespace {

double gauss_pt(double t, double z) {
  return std::exp(-z * z / (4.0 * t)) / std::sqrt(4.0 * kPi * t);
}

// x - sin(x), stable for small x.
double x_minus_sin(double x) {
  const double ax = std::abs(x);
  if (ax < 0.5) {
    const double x2 = x * x;
    return x * x2 / 6.0 *
           (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0 * (1.0 - x2 / 110.0))));
  }
  return x - std::sin(x);
}

}  // namespace

double heat_dirichlet_green(double t, double x, double y, const HeatDirichletKernel& kernel) {
  if (!(t > 0.0)) throw std::domain_error("heat_dirichlet_green requires t > 0");
  if (kernel.representation == HeatDirichletKernel::Representation::kEigenSeries) {
    double acc = 0.0;
    for (int n = 1; n <= kernel.series_terms; ++n) {
      const double decay = std::exp(-n * n * kPi * kPi * t);
      if (decay < 1e-16) break;
      acc += 2.0 * decay * std::sin(n * kPi * x) * std::sin(n * kPi * y);
    }
    return acc;
  }
  double acc = 0.0;
  for (int k = -kernel.image_terms; k <= kernel.image_terms; ++k)
    acc += gauss_pt(t, x - y + 2.0 * k) - gauss_pt(t, x + y + 2.0 * k);
  return acc;
}

double heat_dirichlet_sq_norm(double t_lo, double t_hi, double x) {
  if (t_hi < t_lo) throw std::domain_error("heat_dirichlet_sq_norm requires t_hi >= t_lo");
  const double delta = t_hi - t_lo;
  if (delta == 0.0) return 0.0;
  // sum over n of sin^2(n pi x) (1 - e^{-2 n^2 pi^2 delta}) / (n pi)^2, with
  // the delta-independent part in closed form: sum sin^2(n pi x)/(n pi)^2 =
  // x (1 - x) / 2.
  double tail = 0.0;
  for (int n = 1; n <= 2000000; ++n) {
    const double decay = std::exp(-2.0 * n * n * kPi * kPi * delta);
    if (decay < 1e-20) break;
    const double s = std::sin(n * kPi * x);
    tail += s * s * decay / (n * n * kPi * kPi);
  }
  return x * (1.0 - x) / 2.0 - tail;
}

double FreeSpaceHeatKernel::value(double t, double r) const {
  return std::exp(-r * r / (4.0 * t)) * std::pow(4.0 * kPi * t, -0.5 * d);
}

double FreeSpaceHeatKernel::fourier(double t, double r) const {
  return std::exp(-4.0 * kPi * kPi * t * r * r);
}

double heat_rd_spectral_integral(double t, const noise::SpectralMeasure& mu) {
  const int d = mu.dimension();
  if (!mu.compact_support()) {
    const double p = (d - 1) + mu.tail_power() - 2.0;
    if (p >= -1.0)
      throw std::domain_error(
          "heat spectral integral diverges: measure fails (1+|xi|^2)^{-1} integrability");
  }
  auto g = [t](double r) {
    const double u = 8.0 * kPi * kPi * t * r * r;
    if (u < 1e-12) return t;
    return -std::expm1(-u) / (8.0 * kPi * kPi * r * r);
  };
  return radial_mu_integral(mu, g, -2.0, 1.0 / (8.0 * kPi * kPi));
}

double WaveKernel::value(double t, double r) const {
  switch (d) {
    case 1:
      return r < t ? 0.5 : 0.0;
    case 2: {
      if (r >= t) return 0.0;
      return 1.0 / (kTwoPi * std::sqrt(t * t - r * r));
    }
    default:
      throw std::domain_error("wave kernel density exists only for d = 1, 2");
  }
}

double wave_ft(double t, double r) {
  const double a = kTwoPi * r;
  if (a * t < 1e-8) return t * (1.0 - (a * t) * (a * t) / 6.0);
  return std::sin(a * t) / a;
}

double wave_ft_time_integral(double t, double r) {
  const double a = kTwoPi * r;
  const double x = 2.0 * a * t;
  if (a < 1e-12) return t * t * t / 3.0;
  return x_minus_sin(x) / (4.0 * a * a * a);
}

double wave_mass_integral(int d, double t) {
  if (d < 1 || d > 3) throw std::domain_error("wave fundamental solution covers d = 1, 2, 3");
  return 0.5 * t * t;
}

double wave_spectral_time_integral(double t, const noise::SpectralMeasure& mu) {
  const int d = mu.dimension();
  if (!mu.compact_support()) {
    const double p = (d - 1) + mu.tail_power() - 2.0;
    if (p >= -1.0)
      throw std::domain_error(
          "wave spectral integral diverges: measure fails (1+|xi|^2)^{-1} integrability");
  }
  auto g = [t](double r) { return wave_ft_time_integral(t, r); };
  const double osc = 1.0 / (2.0 * std::max(t, 1e-6));
  return radial_mu_integral(mu, g, -2.0, t / (8.0 * kPi * kPi), osc);
}

// ---------------------------------------------------------------------------

void BoundReport::write_csv_header(std::ostream& os) {
  os << "lemma,p1,p2,family,integral,envelope,ratio\n";
}

void BoundReport::write_csv_rows(std::ostream& os) const {
  os.precision(17);
  for (const auto& pt : points)
    os << name << ',' << pt.p1 << ',' << pt.p2 << ',' << pt.family << ',' << pt.integral << ','
       << pt.envelope << ',' << pt.ratio << '\n';
}

std::string BoundReport::summary_json() const {
  std::ostringstream os;
  os.precision(17);
  os << "{\"lemma\":\"" << name << "\",\"ratio_min\":" << ratio_min
     << ",\"ratio_max\":" << ratio_max << ",\"claimed_lower\":" << claimed_lower
     << ",\"claimed_upper\":" << claimed_upper
     << ",\"upper_is_analytic\":" << (upper_is_analytic ? "true" : "false")
     << ",\"lower_is_analytic\":" << (lower_is_analytic ? "true" : "false")
     << ",\"pass\":" << (pass ? "true" : "false") << "}";
  return os.str();
}

namespace {

void finalize(BoundReport& rep) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& pt : rep.points) {
    if (pt.family <= 0) lo = std::min(lo, pt.ratio);
    if (pt.family >= 0) hi = std::max(hi, pt.ratio);
  }
  rep.ratio_min = lo;
  rep.ratio_max = hi;
  bool ok_lo = rep.lower_is_analytic ? rep.ratio_min >= rep.claimed_lower - 1e-12
                                     : rep.ratio_min > 0.0;
  bool ok_hi = rep.upper_is_analytic ? rep.ratio_max <= rep.claimed_upper + 1e-9
                                     : std::isfinite(rep.ratio_max);
  rep.pass = ok_lo && ok_hi && std::isfinite(rep.ratio_min);
}

ArrayXd logspace(double lo, double hi, int n) {
  ArrayXd out(n);
  for (int i = 0; i < n; ++i)
    out[i] = lo * std::pow(hi / lo, n == 1 ? 0.0 : double(i) / (n - 1));
  return out;
}

}  // namespace

std::vector<std::string> bound_names() {
  return {"square-norm-sqrt-t", "heat-rd-time-bounds", "wave-xi-sandwich",
          "wave-mu-upper",      "wave-mass-quadratic", "wave-time-bounds"};
}

BoundReport check_bound(const std::string& name, const BoundParams& params) {
  BoundReport rep;
  rep.name = name;

  if (name == "square-norm-sqrt-t") {
    rep.param_names = {"t", "x"};
    ArrayXd ts = params.t_grid.size() ? params.t_grid : logspace(1e-4, 1.0, 25);
    for (Index i = 0; i < ts.size(); ++i) {
      BoundPoint pt;
      pt.p1 = ts[i];
      pt.p2 = params.x;
      pt.integral = heat_dirichlet_sq_norm(0.0, ts[i], params.x);
      pt.envelope = std::sqrt(ts[i]) / std::sqrt(kTwoPi);
      pt.ratio = pt.integral / pt.envelope;
      rep.points.push_back(pt);
    }
    rep.claimed_lower = 0.0;
    rep.claimed_upper = 1.0;
    rep.upper_is_analytic = true;
    finalize(rep);
    return rep;
  }

  if (name == "heat-rd-time-bounds") {
    // k1 t <= I(t) <= k2 t^(1-eta) with empirical k1, k2 over the window.
    rep.param_names = {"t", "family"};
    ArrayXd ts = params.t_grid.size() ? params.t_grid : logspace(0.05, 1.0, 12);
    for (Index i = 0; i < ts.size(); ++i) {
      const double I = heat_rd_spectral_integral(ts[i], params.mu);
      BoundPoint lo{ts[i], -1.0, -1, I, ts[i], I / ts[i]};
      BoundPoint hi{ts[i], +1.0, +1, I, std::pow(ts[i], 1.0 - params.eta),
                    I / std::pow(ts[i], 1.0 - params.eta)};
      rep.points.push_back(lo);
      rep.points.push_back(hi);
    }
    finalize(rep);
    return rep;
  }

  if (name == "wave-xi-sandwich") {
    // c1 (t ^ t^3) / (1 + |xi|^2) <= I(t, xi) <= c2 (t + t^3) / (1 + |xi|^2)
    rep.param_names = {"t", "r"};
    ArrayXd ts = params.t_grid.size() ? params.t_grid : logspace(0.01, 10.0, 13);
    ArrayXd rs = params.r_grid.size() ? params.r_grid : [] {
      ArrayXd r(9);
      r << 0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0;
      return r;
    }();
    for (Index i = 0; i < ts.size(); ++i)
      for (Index j = 0; j < rs.size(); ++j) {
        const double t = ts[i], r = rs[j];
        const double I = wave_ft_time_integral(t, r);
        const double w = 1.0 + r * r;
        BoundPoint lo{t, r, -1, I, std::min(t, t * t * t) / w, I * w / std::min(t, t * t * t)};
        BoundPoint hi{t, r, +1, I, (t + t * t * t) / w, I * w / (t + t * t * t)};
        rep.points.push_back(lo);
        rep.points.push_back(hi);
      }
    finalize(rep);
    return rep;
  }

  if (name == "wave-mu-upper") {
    // J(t; mu) <= d3 t^(3 - 2 eta), empirical d3 over the window.
    rep.param_names = {"t", "eta"};
    ArrayXd ts = params.t_grid.size() ? params.t_grid : logspace(0.05, 1.0, 12);
    for (Index i = 0; i < ts.size(); ++i) {
      const double J = wave_spectral_time_integral(ts[i], params.mu);
      const double env = std::pow(ts[i], 3.0 - 2.0 * params.eta);
      rep.points.push_back({ts[i], params.eta, 0, J, env, J / env});
    }
    finalize(rep);
    return rep;
  }

  if (name == "wave-mass-quadratic") {
    rep.param_names = {"t", "d"};
    ArrayXd ts = params.t_grid.size() ? params.t_grid : logspace(0.05, 2.0, 10);
    for (Index i = 0; i < ts.size(); ++i) {
      const double I = wave_mass_integral(params.d, ts[i]);
      rep.points.push_back({ts[i], double(params.d), 0, I, ts[i] * ts[i], I / (ts[i] * ts[i])});
    }
    rep.claimed_lower = 0.5;
    rep.claimed_upper = 0.5;
    rep.lower_is_analytic = true;
    rep.upper_is_analytic = true;
    finalize(rep);
    return rep;
  }

  if (name == "wave-time-bounds") {
    // d1 t^3 <= J(t) <= d2 t for t in (0, 1), empirical d1, d2.
    rep.param_names = {"t", "family"};
    ArrayXd ts = params.t_grid.size() ? params.t_grid : logspace(0.05, 0.95, 10);
    for (Index i = 0; i < ts.size(); ++i) {
      const double t = ts[i];
      const double J = wave_spectral_time_integral(t, params.mu);
      rep.points.push_back({t, -1.0, -1, J, t * t * t, J / (t * t * t)});
      rep.points.push_back({t, +1.0, +1, J, t, J / t});
    }
    finalize(rep);
    return rep;
  }

  throw std::invalid_argument("unknown bound name: " + name);
}

}  // namespace spde::kernels
