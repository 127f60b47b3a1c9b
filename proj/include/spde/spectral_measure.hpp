#pragma once

#include "spde/types.hpp"

#include <functional>
#include <optional>
#include <string>

namespace spde::noise {

enum class MeasureKind { kWhite, kRiesz, kTabulated };

// Spatially homogeneous noise covariance in spectral form.  The measure is
// radial: mu(dxi) = radial_density(|xi|) dxi, with the white case density 1
// and the Riesz case |xi|^(eps - d) (the normalising constant is dropped,
// only the power matters for the scaling statements exercised here).
class SpectralMeasure {
 public:
  static SpectralMeasure white(int d);
  static SpectralMeasure riesz(int d, double epsilon);
  // Two-column radial table (radius, density), linearly interpolated,
  // density 0 beyond the last tabulated radius.
  static SpectralMeasure tabulated(int d, ArrayXd radii, ArrayXd density);
  static SpectralMeasure tabulated_from_csv(int d, const std::string& path);

  MeasureKind kind() const { return kind_; }
  int dimension() const { return d_; }
  double riesz_epsilon() const { return epsilon_; }
  double table_radius_max() const;

  // Radial density at r > 0 (Riesz diverges at 0; callers integrate cells).
  double radial_density(double r) const;

  // Power p such that radial_density(r) * r^(d-1) ~ C * r^p for large r,
  // C = tail_coefficient(); tabulated measures are compactly supported.
  double tail_power() const;
  double tail_coefficient() const;
  bool compact_support() const { return kind_ == MeasureKind::kTabulated; }

  std::string label() const;

 private:
  MeasureKind kind_ = MeasureKind::kWhite;
  int d_ = 1;
  double epsilon_ = 0.0;
  ArrayXd radii_;
  ArrayXd density_;
};

// integral over R^d of g(|xi|) mu(dxi), computed radially.  tail_power is the
// large-r power of g (g(r) ~ g_tail_coef * r^tail_power) used for the
// analytic tail beyond the quadrature cutoff; oscillation gives the length
// scale of any oscillatory component so panels resolve it.
double radial_mu_integral(const SpectralMeasure& mu,
                          const std::function<double(double)>& g,
                          double g_tail_power, double g_tail_coef,
                          double oscillation_scale = 0.0);

// Hypothesis H_eta: integral of (1 + |xi|^2)^(-eta) d mu.  nullopt when the
// integral diverges.
std::optional<double> hypothesis_eta(const SpectralMeasure& mu, double eta);

// Same integral at eta = 1; finiteness is the standing condition for the
// heat equation on R^d with this noise.
std::optional<double> unit_eta_integral(const SpectralMeasure& mu);

}  // namespace spde::noise
