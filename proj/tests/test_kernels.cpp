#include "spde/kernels.hpp"
#include "spde/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace spde;
using kernels::heat_dirichlet_green;
using kernels::heat_dirichlet_sq_norm;

TEST_CASE("interval Green function: eigen series and image method agree") {
  kernels::HeatDirichletKernel series;
  kernels::HeatDirichletKernel image;
  image.representation = kernels::HeatDirichletKernel::Representation::kImageMethod;
  for (double t : {1e-4, 1e-3, 0.01, 0.1, 0.5})
    for (double x : {0.1, 0.3, 0.5, 0.9})
      for (double y : {0.2, 0.5, 0.7}) {
        const double a = heat_dirichlet_green(t, x, y, series);
        const double b = heat_dirichlet_green(t, x, y, image);
        CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
      }
}

TEST_CASE("interval Green function: symmetry, boundary, mass deficit") {
  for (double t : {1e-3, 0.05, 0.3}) {
    for (double x : {0.2, 0.45, 0.8})
      for (double y : {0.1, 0.5, 0.9})
        CHECK(heat_dirichlet_green(t, x, y) ==
              doctest::Approx(heat_dirichlet_green(t, y, x)).epsilon(1e-12));
    CHECK(std::abs(heat_dirichlet_green(t, 0.0, 0.4)) < 1e-12);
    CHECK(std::abs(heat_dirichlet_green(t, 1.0, 0.4)) < 1e-12);
    // Dirichlet kernel loses mass through the boundary
    const double mass = quad::integrate_panels(
        [t](double y) { return heat_dirichlet_green(t, 0.5, y); }, 0.0, 1.0, 1.0 / 64);
    CHECK(mass > 0.0);
    CHECK(mass <= 1.0 + 1e-12);
  }
}

TEST_CASE("interval squared norm: closed form vs direct quadrature") {
  // independent route: integral of G_s(x, .)^2 over the interval, then over
  // s in (0, t) with s = tau^2 so the 1/sqrt(s) blowup integrates smoothly
  kernels::HeatDirichletKernel image;
  image.representation = kernels::HeatDirichletKernel::Representation::kImageMethod;
  for (double t : {0.01, 0.0625, 0.25})
    for (double x : {0.3, 0.5}) {
      auto slice = [&](double s) {
        // the squared kernel is a peak of width ~sqrt(s) at y = x; clip to
        // +-10 widths and size the panels to the peak so small s stays
        // resolved
        const double width = std::sqrt(s);
        const double lo = std::max(0.0, x - 10.0 * width);
        const double hi = std::min(1.0, x + 10.0 * width);
        return quad::integrate_panels(
            [&](double y) {
              const double g = heat_dirichlet_green(s, x, y, image);
              return g * g;
            },
            lo, hi, std::min(1.0 / 16, width / 2));
      };
      const double direct = quad::integrate_panels(
          [&](double tau) { return 2.0 * tau * slice(tau * tau); }, 0.0, std::sqrt(t),
          std::sqrt(t) / 24);
      const double closed = heat_dirichlet_sq_norm(0.0, t, x);
      CHECK(closed == doctest::Approx(direct).epsilon(1e-8));
    }
}

TEST_CASE("interval squared norm: time invariance and monotonicity") {
  CHECK(heat_dirichlet_sq_norm(0.1, 0.35, 0.5) ==
        doctest::Approx(heat_dirichlet_sq_norm(0.0, 0.25, 0.5)).epsilon(1e-12));
  CHECK(heat_dirichlet_sq_norm(0.02, 0.07, 0.3) ==
        doctest::Approx(heat_dirichlet_sq_norm(0.0, 0.05, 0.3)).epsilon(1e-12));
  double prev = 0.0;
  for (double t : {0.01, 0.05, 0.1, 0.5, 1.0, 2.0}) {
    const double v = heat_dirichlet_sq_norm(0.0, t, 0.5);
    CHECK(v > prev);
    prev = v;
  }
  // saturates at the stationary variance x(1 - x)/2
  CHECK(heat_dirichlet_sq_norm(0.0, 50.0, 0.5) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(heat_dirichlet_sq_norm(0.0, 50.0, 0.25) ==
        doctest::Approx(0.25 * 0.75 / 2.0).epsilon(1e-12));
}

TEST_CASE("square-root time envelope of the interval squared norm") {
  // integral / sqrt(t) stays in (0, 1/sqrt(2 pi)] and is not vacuous
  double max_ratio = 0.0;
  for (double t : {0.01, 0.05, 0.1, 0.5, 1.0}) {
    const double ratio = heat_dirichlet_sq_norm(0.0, t, 0.5) / std::sqrt(t);
    CHECK(ratio > 0.0);
    CHECK(ratio <= 1.0 / std::sqrt(kTwoPi) + 1e-12);
    max_ratio = std::max(max_ratio, ratio);
  }
  CHECK(max_ratio >= 0.15);
}

TEST_CASE("free-space heat kernel: normalization and Fourier transform") {
  for (int d : {1, 2, 3}) {
    kernels::FreeSpaceHeatKernel k{d};
    const double t = 0.07;
    const double R = 12.0 * std::sqrt(t);
    const double mass = quad::integrate_panels(
        [&](double r) { return sphere_surface(d) * std::pow(r, d - 1) * k.value(t, r); }, 0.0, R,
        R / 64);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
  }
  // d = 1: cosine transform matches the closed exponential
  kernels::FreeSpaceHeatKernel k1{1};
  for (double xi : {0.0, 0.3, 1.0, 2.0}) {
    const double t = 0.05;
    const double R = 14.0 * std::sqrt(t);
    const double ft = quad::integrate_panels(
        [&](double x) { return 2.0 * k1.value(t, x) * std::cos(kTwoPi * xi * x); }, 0.0, R,
        std::min(R / 64, 0.25 / std::max(xi, 1e-9)));
    CHECK(ft == doctest::Approx(k1.fourier(t, xi)).epsilon(1e-8));
  }
  // d = 3: radial sine transform
  kernels::FreeSpaceHeatKernel k3{3};
  for (double xi : {0.4, 1.3}) {
    const double t = 0.05;
    const double R = 14.0 * std::sqrt(t);
    const double ft = quad::integrate_panels(
        [&](double r) {
          return 4.0 * kPi * r * r * k3.value(t, r) * std::sin(kTwoPi * xi * r) /
                 (kTwoPi * xi * r);
        },
        0.0, R, std::min(R / 64, 0.25 / xi));
    CHECK(ft == doctest::Approx(k3.fourier(t, xi)).epsilon(1e-8));
  }
}

TEST_CASE("wave propagator transform: closed form, small-argument limit") {
  for (double t : {0.1, 0.7, 3.0}) {
    for (double r : {1e-3, 0.2, 1.0, 40.0})
      CHECK(kernels::wave_ft(t, r) ==
            doctest::Approx(std::sin(kTwoPi * t * r) / (kTwoPi * r)).epsilon(1e-14));
    CHECK(kernels::wave_ft(t, 0.0) == doctest::Approx(t).epsilon(1e-15));
    CHECK(kernels::wave_ft(t, 1e-9) == doctest::Approx(t).epsilon(1e-12));
  }
}

TEST_CASE("wave propagator transform matches the d=2 fundamental solution") {
  // 2 pi int_0^t r J0(2 pi xi r) value(t, r) dr with the sqrt singularity
  // absorbed by r = t sin(phi)
  kernels::WaveKernel k{2};
  for (double t : {0.3, 1.0})
    for (double xi : {0.2, 0.9, 2.0}) {
      const double ft = quad::integrate_panels(
          [&](double phi) {
            const double r = t * std::sin(phi);
            const double jac = t * std::cos(phi);
            return kTwoPi * r * std::cyl_bessel_j(0.0, kTwoPi * xi * r) * k.value(t, r) * jac;
          },
          0.0, kPi / 2, kPi / 2 / 48);
      CHECK(ft == doctest::Approx(kernels::wave_ft(t, xi)).epsilon(1e-7));
    }
}

TEST_CASE("wave propagator time integral: quadrature oracle and limits") {
  for (double t : {0.1, 1.0})
    for (double r : {0.0, 1e-4, 0.01, 1.0, 10.0}) {
      const double direct = quad::integrate_panels(
          [&](double s) {
            const double v = kernels::wave_ft(s, r);
            return v * v;
          },
          0.0, t, std::min(t / 32, 0.1 / std::max(r, 1e-9)));
      CHECK(kernels::wave_ft_time_integral(t, r) == doctest::Approx(direct).epsilon(1e-10));
    }
  CHECK(kernels::wave_ft_time_integral(1.0, 0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(kernels::wave_ft_time_integral(1.0, 1e-8) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // (sin(as)/a)^2 <= s^2 pointwise
  for (double r : {0.05, 0.5, 5.0})
    CHECK(kernels::wave_ft_time_integral(2.0, r) <= 8.0 / 3.0 * (1 + 1e-12));
}

TEST_CASE("wave mass integral is t^2/2 in every dimension") {
  for (int d : {1, 2, 3})
    for (double t : {0.1, 1.0, 10.0})
      CHECK(kernels::wave_mass_integral(d, t) == doctest::Approx(t * t / 2).epsilon(1e-12));
}

TEST_CASE("measure integrability thresholds and closed forms") {
  using noise::SpectralMeasure;
  using noise::hypothesis_eta;

  auto white1 = SpectralMeasure::white(1);
  // int (1 + xi^2)^{-eta} dxi over R = sqrt(pi) Gamma(eta - 1/2) / Gamma(eta)
  auto closed1 = [](double eta) {
    return std::sqrt(kPi) * std::tgamma(eta - 0.5) / std::tgamma(eta);
  };
  for (double eta : {0.8, 1.0, 1.5}) {
    auto v = hypothesis_eta(white1, eta);
    REQUIRE(v.has_value());
    CHECK(*v == doctest::Approx(closed1(eta)).epsilon(1e-6));
  }
  CHECK(*hypothesis_eta(white1, 1.0) == doctest::Approx(kPi).epsilon(1e-8));
  CHECK(!hypothesis_eta(white1, 0.5));
  CHECK(!hypothesis_eta(white1, 0.3));

  // Riesz density |xi|^{eps-d}: finite exactly when eps < 2 eta;
  // closed form S_d/2 * Gamma(eps/2) Gamma(eta - eps/2) / Gamma(eta)
  auto riesz_closed = [](int d, double eps, double eta) {
    return sphere_surface(d) / 2.0 * std::tgamma(eps / 2) * std::tgamma(eta - eps / 2) /
           std::tgamma(eta);
  };
  auto r15 = SpectralMeasure::riesz(1, 0.5);
  REQUIRE(hypothesis_eta(r15, 0.4));
  CHECK(*hypothesis_eta(r15, 0.4) == doctest::Approx(riesz_closed(1, 0.5, 0.4)).epsilon(1e-6));
  CHECK(!hypothesis_eta(r15, 0.25));  // eps = 2 eta is the divergent boundary
  CHECK(!hypothesis_eta(r15, 0.2));
  auto r21 = SpectralMeasure::riesz(2, 1.0);
  REQUIRE(hypothesis_eta(r21, 0.6));
  CHECK(*hypothesis_eta(r21, 0.6) == doctest::Approx(riesz_closed(2, 1.0, 0.6)).epsilon(1e-6));
  CHECK(!hypothesis_eta(r21, 0.5));

  // compactly supported tables are finite for every eta; at eta = 0 the
  // integral is the total mass
  ArrayXd radii(3), density(3);
  radii << 0.0, 1.0, 2.0;
  density << 1.0, 1.0, 0.0;
  auto tab = SpectralMeasure::tabulated(1, radii, density);
  REQUIRE(hypothesis_eta(tab, 0.0));
  CHECK(*hypothesis_eta(tab, 0.0) == doctest::Approx(3.0).epsilon(1e-8));

  CHECK(*noise::unit_eta_integral(r15) == *hypothesis_eta(r15, 1.0));
}

TEST_CASE("heat spectral variance integral: closed forms and divergence") {
  using noise::SpectralMeasure;
  for (double t : {0.05, 0.25, 1.0})
    CHECK(kernels::heat_rd_spectral_integral(t, SpectralMeasure::white(1)) ==
          doctest::Approx(std::sqrt(t / kTwoPi)).epsilon(1e-8));
  // |xi|^{-1} measure in d = 2 collapses to a radial white integral
  for (double t : {0.1, 0.5})
    CHECK(kernels::heat_rd_spectral_integral(t, SpectralMeasure::riesz(2, 1.0)) ==
          doctest::Approx(std::sqrt(kTwoPi * t) / 2.0).epsilon(1e-6));
  CHECK_THROWS_AS(kernels::heat_rd_spectral_integral(0.1, SpectralMeasure::white(2)),
                  std::domain_error);
}

TEST_CASE("named bound checks hold on their default grids") {
  kernels::BoundParams params;
  params.mu = noise::SpectralMeasure::riesz(1, 0.5);
  params.eta = 0.4;
  const auto names = kernels::bound_names();
  CHECK(names.size() == 6);
  for (const auto& name : names) {
    const auto rep = kernels::check_bound(name, params);
    INFO("bound ", name);
    CHECK(rep.pass);
    CHECK(!rep.points.empty());
    CHECK(std::isfinite(rep.ratio_min));
    CHECK(std::isfinite(rep.ratio_max));
    // ratio_min and ratio_max summarize the lower and upper point families;
    // they are ordered only when one family feeds both
    bool single_family = true;
    for (const auto& p : rep.points) single_family = single_family && p.family == 0;
    if (single_family) CHECK(rep.ratio_min <= rep.ratio_max);
  }
  CHECK_THROWS_AS(kernels::check_bound("no-such-bound", params), std::invalid_argument);
}

TEST_CASE("wave transform sandwich has bounded constant spread") {
  kernels::BoundParams params;
  const auto rep = kernels::check_bound("wave-xi-sandwich", params);
  CHECK(rep.pass);
  CHECK(rep.ratio_min > 0.0);
  CHECK(rep.ratio_max / rep.ratio_min < 1e3);
}

TEST_CASE("bound report serialization") {
  kernels::BoundParams params;
  auto rep = kernels::check_bound("wave-mass-quadratic", params);
  std::ostringstream os;
  kernels::BoundReport::write_csv_header(os);
  rep.write_csv_rows(os);
  const std::string csv = os.str();
  CHECK(csv.rfind("lemma,p1,p2,family,integral,envelope,ratio\n", 0) == 0);
  size_t rows = 0;
  for (char ch : csv)
    if (ch == '\n') ++rows;
  CHECK(rows == rep.points.size() + 1);
  const std::string js = rep.summary_json();
  CHECK(js.find("\"lemma\":\"wave-mass-quadratic\"") != std::string::npos);
  CHECK(js.find("\"pass\":true") != std::string::npos);
}
