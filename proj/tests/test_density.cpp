#include "spde/density.hpp"

#include "spde/malliavin.hpp"
#include "spde/rng.hpp"
#include "spde/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>

using namespace spde;
using malliavin::GEstimate;

namespace {

ArrayXd centered_grid(int half, double step) {
  ArrayXd z(2 * half + 1);
  for (int i = 0; i <= 2 * half; ++i) z[i] = (i - half) * step;
  return z;
}

// hand-built estimate with a prescribed conditioning function on the grid
GEstimate manual_estimate(const ArrayXd& z, const ArrayXd& g) {
  GEstimate est;
  est.z_grid = z;
  est.g_hat = g;
  est.g_raw = g;
  est.g_min = g.minCoeff();
  est.n_samples = 100000;
  est.f_sd = 1.0;
  return est;
}

double normal_pdf(double z, double v) {
  return std::exp(-0.5 * z * z / v) / std::sqrt(kTwoPi * v);
}

std::vector<double> normal_sample(int n, double sd, std::uint64_t seed) {
  auto eng = rng::engine(seed);
  std::normal_distribution<double> gauss(0.0, sd);
  std::vector<double> out(n);
  for (auto& x : out) x = gauss(eng);
  return out;
}

}  // namespace

TEST_CASE("constant conditioning function reconstructs the exact normal") {
  const double v = 0.37;
  const ArrayXd z = centered_grid(200, std::sqrt(v) / 50);
  const auto est = manual_estimate(z, ArrayXd::Constant(z.size(), v));
  const double e_abs = std::sqrt(2.0 * v / kPi);
  const ArrayXd rho = density::nv_density(est, e_abs, z);
  for (Index i = 0; i < z.size(); ++i)
    CHECK(rho[i] == doctest::Approx(normal_pdf(z[i], v)).epsilon(1e-10));
}

TEST_CASE("even conditioning function gives an even density") {
  const ArrayXd z = centered_grid(150, 0.02);
  ArrayXd g(z.size());
  for (Index i = 0; i < z.size(); ++i) g[i] = 1.0 + z[i] * z[i];
  const auto est = manual_estimate(z, g);
  const ArrayXd rho = density::nv_density(est, 0.8, z);
  const Index n = z.size();
  for (Index i = 0; i < n; ++i) CHECK(rho[i] == doctest::Approx(rho[n - 1 - i]).epsilon(1e-12));
  // positive everywhere and integrates to something sane
  CHECK(rho.minCoeff() > 0.0);
}

TEST_CASE("density reconstruction requires a grid through zero and positive g") {
  ArrayXd z(4);
  z << 0.5, 1.0, 1.5, 2.0;  // no zero on the grid
  const auto est = manual_estimate(z, ArrayXd::Constant(4, 1.0));
  CHECK_THROWS_AS(density::nv_density(est, 1.0, z), std::invalid_argument);
}

TEST_CASE("envelopes collapse to the normal when the constants coincide") {
  const double v = 0.8;
  const ArrayXd z = centered_grid(120, 0.03);
  const double e_abs = std::sqrt(2.0 * v / kPi);
  const auto env = density::gaussian_envelopes(e_abs, v, v, 0.0, z);
  for (Index i = 0; i < z.size(); ++i) {
    CHECK(env.lower[i] == doctest::Approx(env.upper[i]).epsilon(1e-14));
    CHECK(env.lower[i] == doctest::Approx(normal_pdf(z[i], v)).epsilon(1e-12));
  }
}

TEST_CASE("envelope orientation: lower never exceeds upper") {
  const ArrayXd z = centered_grid(100, 0.05);
  for (auto [c1, c2] : {std::pair{0.2, 0.3}, {0.05, 1.0}, {0.7, 0.71}}) {
    const auto env = density::gaussian_envelopes(1.1, c1, c2, 0.4, z);
    for (Index i = 0; i < z.size(); ++i) CHECK(env.lower[i] <= env.upper[i] + 1e-15);
  }
  CHECK_THROWS_AS(density::gaussian_envelopes(1.0, 0.5, 0.4, 0.0, z), std::invalid_argument);
  CHECK_THROWS_AS(density::gaussian_envelopes(1.0, 0.0, 0.4, 0.0, z), std::invalid_argument);
  CHECK_THROWS_AS(density::gaussian_envelopes(-1.0, 0.3, 0.4, 0.0, z), std::invalid_argument);
}

TEST_CASE("a normal with variance inside the bracket sits between the envelopes") {
  const double v = 1.3;
  const ArrayXd z = centered_grid(160, 4.0 * std::sqrt(v) / 160);
  const double e_abs = std::sqrt(2.0 * v / kPi);
  const auto env = density::gaussian_envelopes(e_abs, 0.9 * v, 1.1 * v, 0.0, z);
  ArrayXd rho(z.size());
  for (Index i = 0; i < z.size(); ++i) rho[i] = normal_pdf(z[i], v);
  const auto verdict = density::verify_sandwich(z, rho, env, z.minCoeff(), z.maxCoeff());
  CHECK(verdict.pass);
  CHECK(verdict.lower_margin >= 0.0);
  CHECK(verdict.upper_margin >= 0.0);
  CHECK(verdict.points_checked == z.size());

  // widening the bracket only increases the margins
  const auto wide = density::gaussian_envelopes(e_abs, 0.8 * v, 1.2 * v, 0.0, z);
  const auto verdict_wide = density::verify_sandwich(z, rho, wide, z.minCoeff(), z.maxCoeff());
  CHECK(verdict_wide.pass);
  CHECK(verdict_wide.lower_margin >= verdict.lower_margin - 1e-15);
  CHECK(verdict_wide.upper_margin >= verdict.upper_margin - 1e-15);
}

TEST_CASE("halved constants are rejected by the sandwich check") {
  // the control pair (v/2, v/2) pushes the lower envelope above the true
  // density near the center, so the verdict must fail
  const double v = 0.6;
  const ArrayXd z = centered_grid(160, 4.0 * std::sqrt(v) / 160);
  const double e_abs = std::sqrt(2.0 * v / kPi);
  ArrayXd rho(z.size());
  for (Index i = 0; i < z.size(); ++i) rho[i] = normal_pdf(z[i], v);
  const auto control = density::gaussian_envelopes(e_abs, v / 2, v / 2, 0.0, z);
  const double window = 1.645 * std::sqrt(v);
  const auto verdict = density::verify_sandwich(z, rho, control, -window, window);
  CHECK(!verdict.pass);
  CHECK(verdict.lower_margin < 0.0);
}

TEST_CASE("kernel density estimate matches the normal curve") {
  const auto sample = normal_sample(200000, 1.0, 616);
  // error budget on |z| <= 1.5 with the automatic bandwidth h ~ 0.078:
  // smoothing bias <= 0.5 h^2 |phi''/phi| ~ 0.4%, pointwise se <= 1.2%,
  // max over a correlated grid ~ 3 se, so 4% covers it
  const ArrayXd z = centered_grid(75, 0.02);  // |z| <= 1.5
  const ArrayXd est = density::kde(sample, z);
  for (Index i = 0; i < z.size(); ++i)
    CHECK(est[i] == doctest::Approx(normal_pdf(z[i], 1.0)).epsilon(0.04));
  // at the center the budget tightens to bias 0.3% + 2 se ~ 1.3%
  CHECK(est[75] == doctest::Approx(normal_pdf(0.0, 1.0)).epsilon(0.02));

  // normalization on a wide grid
  const ArrayXd zw = centered_grid(300, 5.0 / 150);
  const ArrayXd estw = density::kde(sample, zw);
  double integral = 0.0;
  for (Index i = 0; i + 1 < zw.size(); ++i)
    integral += 0.5 * (estw[i] + estw[i + 1]) * (zw[i + 1] - zw[i]);
  CHECK(integral == doctest::Approx(1.0).epsilon(0.01));

  CHECK_THROWS_AS(density::kde(normal_sample(100, 1.0, 1), z), std::invalid_argument);
}

TEST_CASE("full report on synthetic Gaussian data") {
  // f ~ N(0, v) with a conditioning function that genuinely varies with f,
  // so the (c1, c2) bracket is wide enough for the kde comparison: the
  // regression target is v (1 + 0.1 sin f), giving roughly a +-7% bracket
  // on the central window against kde errors of at most ~3 se ~ 4%
  const double v = 0.25;
  const int n = 20000;
  auto eng = rng::engine(2718);
  std::normal_distribution<double> gauss(0.0, std::sqrt(v));
  std::vector<malliavin::ShiftPairSample> samples(n);
  std::vector<double> fs(n);
  for (int i = 0; i < n; ++i) {
    samples[i].f = gauss(eng);
    samples[i].c = v * (1.0 + 0.1 * std::sin(samples[i].f));
    fs[i] = samples[i].f;
  }
  const auto est = malliavin::estimate_g(samples);
  const auto report = density::build_density_report(est, fs);
  CHECK(report.nv_verdict.pass);
  CHECK(report.kde_verdict.pass);
  CHECK(report.negative_fraction == 0.0);
  CHECK(report.c1 <= report.c2);
  CHECK(report.c1 > 0.9 * v);
  CHECK(report.c2 < 1.1 * v);
  CHECK(std::abs(report.normalization_defect) < 0.02);
  // with c1 < c2 the swapped orientation is provably not a sandwich
  CHECK(report.alt_orientation_gap > 0.0);
  CHECK(report.e_abs_f == doctest::Approx(std::sqrt(2.0 * v / kPi)).epsilon(0.05));

  const auto verdict_json = report.verdict_json();
  CHECK(verdict_json.find("\"nv_pass\":true") != std::string::npos);
  CHECK(verdict_json.find("\"kde_pass\":true") != std::string::npos);

  std::ostringstream os;
  report.write_csv(os);
  CHECK(os.str().rfind("z,rho_nv,rho_kde,env_lo,env_hi\n", 0) == 0);
}

TEST_CASE("power-law scaling is recovered exactly from synthetic extrema") {
  std::vector<density::ScalingPoint> pts;
  for (double t : {0.05, 0.1, 0.2, 0.35, 0.5})
    pts.push_back({t, 3.0 * std::sqrt(t), 5.0 * std::sqrt(t)});
  const auto rep = density::scaling_fit(pts, {0.4, 0.6}, {0.4, 0.6});
  CHECK(rep.slope_lo == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.slope_hi == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.slope_lo_se < 1e-12);
  CHECK(rep.pass);

  const auto outside = density::scaling_fit(pts, {0.6, 0.7}, {0.4, 0.6});
  CHECK(!outside.pass);

  std::vector<density::ScalingPoint> few(pts.begin(), pts.begin() + 4);
  CHECK_THROWS_AS(density::scaling_fit(few, {0.0, 1.0}, {0.0, 1.0}), std::invalid_argument);

  std::ostringstream os;
  rep.write_csv(os);
  CHECK(os.str().rfind("t,g_lo,g_hi\n", 0) == 0);
  const auto js = rep.slopes_json();
  CHECK(js.find("\"slope_lo\"") != std::string::npos);
  CHECK(js.find("\"pass\":true") != std::string::npos);
}
