#include "spde/spectral_measure.hpp"

#include "spde/quadrature.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace spde::noise {

SpectralMeasure SpectralMeasure::white(int d) {
  SpectralMeasure m;
  m.kind_ = MeasureKind::kWhite;
  m.d_ = d;
  return m;
}

SpectralMeasure SpectralMeasure::riesz(int d, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < d))
    throw std::invalid_argument("riesz exponent must lie in (0, d)");
  SpectralMeasure m;
  m.kind_ = MeasureKind::kRiesz;
  m.d_ = d;
  m.epsilon_ = epsilon;
  return m;
}

SpectralMeasure SpectralMeasure::tabulated(int d, ArrayXd radii, ArrayXd density) {
  if (radii.size() < 2 || radii.size() != density.size())
    throw std::invalid_argument("tabulated measure needs matching radius/density columns");
  for (Index i = 0; i + 1 < radii.size(); ++i)
    if (radii[i + 1] <= radii[i]) throw std::invalid_argument("table radii must increase");
  if ((density < 0.0).any()) throw std::invalid_argument("table density must be nonnegative");
  SpectralMeasure m;
  m.kind_ = MeasureKind::kTabulated;
  m.d_ = d;
  m.radii_ = std::move(radii);
  m.density_ = std::move(density);
  return m;
}

SpectralMeasure SpectralMeasure::tabulated_from_csv(int d, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open measure table: " + path);
  std::vector<double> r, rho;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (auto& c : line)
      if (c == ',' || c == ';') c = ' ';
    std::istringstream row(line);
    double a, b;
    if (row >> a >> b) {
      r.push_back(a);
      rho.push_back(b);
    }
  }
  ArrayXd ra = Eigen::Map<ArrayXd>(r.data(), static_cast<Index>(r.size()));
  ArrayXd da = Eigen::Map<ArrayXd>(rho.data(), static_cast<Index>(rho.size()));
  return tabulated(d, ra, da);
}

double SpectralMeasure::table_radius_max() const {
  return kind_ == MeasureKind::kTabulated ? radii_[radii_.size() - 1] : 0.0;
}

double SpectralMeasure::radial_density(double r) const {
  switch (kind_) {
    case MeasureKind::kWhite:
      return 1.0;
    case MeasureKind::kRiesz:
      return std::pow(r, epsilon_ - d_);
    case MeasureKind::kTabulated: {
      if (r <= radii_[0]) return density_[0];
      if (r >= radii_[radii_.size() - 1]) return 0.0;
      Index lo = 0, hi = radii_.size() - 1;
      while (hi - lo > 1) {
        Index mid = (lo + hi) / 2;
        (radii_[mid] <= r ? lo : hi) = mid;
      }
      const double w = (r - radii_[lo]) / (radii_[hi] - radii_[lo]);
      return (1.0 - w) * density_[lo] + w * density_[hi];
    }
  }
  return 0.0;
}

double SpectralMeasure::tail_power() const {
  return kind_ == MeasureKind::kRiesz ? epsilon_ - d_ : 0.0;
}

double SpectralMeasure::tail_coefficient() const { return 1.0; }

std::string SpectralMeasure::label() const {
  switch (kind_) {
    case MeasureKind::kWhite: return "white";
    case MeasureKind::kRiesz: return "riesz(" + std::to_string(epsilon_) + ")";
    case MeasureKind::kTabulated: return "tabulated";
  }
  return "unknown";
}

double radial_mu_integral(const SpectralMeasure& mu, const std::function<double(double)>& g,
                          double g_tail_power, double g_tail_coef, double oscillation_scale) {
  const int d = mu.dimension();
  const double surf = sphere_surface(d);
  auto f = [&](double r) { return surf * std::pow(r, d - 1) * mu.radial_density(r) * g(r); };

  const double r_cut = mu.compact_support() ? mu.table_radius_max() : 1000.0;

  // Quartic substitution r = r0 s^4 soaks up the integrable Riesz
  // singularity at the origin.
  double r0 = std::min(1.0, r_cut);
  if (oscillation_scale > 0.0) r0 = std::min(r0, std::max(oscillation_scale / 3.0, 1e-3));
  auto f_sub = [&](double s) {
    const double r = r0 * s * s * s * s;
    const double jac = 4.0 * r0 * s * s * s;
    return r > 0.0 ? f(r) * jac : 0.0;
  };
  double acc = quad::integrate_panels(f_sub, 0.0, 1.0, 0.05);

  double a = r0;
  while (a < r_cut) {
    double w = std::max(0.5 * a, r0);
    if (oscillation_scale > 0.0) w = std::min(w, oscillation_scale / 3.0);
    const double b = std::min(r_cut, a + w);
    acc += quad::integrate(f, a, b);
    a = b;
  }

  if (!mu.compact_support()) {
    const double p = (d - 1) + mu.tail_power() + g_tail_power;
    if (p >= -1.0) return std::numeric_limits<double>::infinity();
    const double c = surf * mu.tail_coefficient() * g_tail_coef;
    acc += c * std::pow(r_cut, p + 1.0) / (-(p + 1.0));
  }
  return acc;
}

std::optional<double> hypothesis_eta(const SpectralMeasure& mu, double eta) {
  if (!mu.compact_support()) {
    const double p = (mu.dimension() - 1) + mu.tail_power() - 2.0 * eta;
    if (p >= -1.0) return std::nullopt;
  }
  auto g = [eta](double r) { return std::pow(1.0 + r * r, -eta); };
  return radial_mu_integral(mu, g, -2.0 * eta, 1.0);
}

std::optional<double> unit_eta_integral(const SpectralMeasure& mu) {
  return hypothesis_eta(mu, 1.0);
}

}  // namespace spde::noise
