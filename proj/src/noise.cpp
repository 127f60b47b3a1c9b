#include "spde/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace spde::noise {

namespace {

double unit_ball_volume_coef(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return kPi;
    case 3: return 4.0 * kPi / 3.0;
    default: throw std::domain_error("dimension must be 1, 2 or 3");
  }
}

double zero_cell_mass(const SpectralMeasure& mu, const TorusGrid& grid) {
  const double h = grid.dxi();
  switch (mu.kind()) {
    case MeasureKind::kWhite:
      return std::pow(h, grid.d);
    case MeasureKind::kRiesz: {
      // integrate |xi|^(eps - d) over the ball of the same volume as the cell
      const double eps = mu.riesz_epsilon();
      const double rho = h * std::pow(unit_ball_volume_coef(grid.d), -1.0 / grid.d);
      return sphere_surface(grid.d) * std::pow(rho, eps) / eps;
    }
    case MeasureKind::kTabulated:
      return mu.radial_density(0.0) * std::pow(h, grid.d);
  }
  return 0.0;
}

void fill_hermitian(MatrixXcd& out, Index step, const TorusGrid& grid, const ArrayXd& sd,
                    std::mt19937_64& eng, std::normal_distribution<double>& gauss) {
  const Index m = grid.mode_count();
  for (Index k = 0; k < m; ++k) {
    const Index c = grid.conj_index(k);
    if (k == c) {
      out(step, k) = Complex(sd[k] * gauss(eng), 0.0);
    } else if (k < c) {
      const double s = sd[k] / std::sqrt(2.0);
      const Complex z(s * gauss(eng), s * gauss(eng));
      out(step, k) = z;
      out(step, c) = std::conj(z);
    }
  }
}

}  // namespace

ArrayXd mu_weights(const SpectralMeasure& mu, const TorusGrid& grid) {
  if (mu.dimension() != grid.d)
    throw std::invalid_argument("measure and grid dimensions disagree");
  const Index m = grid.mode_count();
  const double cell = std::pow(grid.dxi(), grid.d);
  ArrayXd w(m);
  for (Index k = 0; k < m; ++k) {
    const double r = grid.xi_norm(k);
    w[k] = (r == 0.0) ? zero_cell_mass(mu, grid) : mu.radial_density(r) * cell;
  }
  return w;
}

NoiseRealization sample_noise(const SpectralMeasure& mu, const TorusGrid& grid, int n_steps,
                              double dt, std::uint64_t seed, int stages) {
  if (n_steps <= 0 || dt <= 0.0) throw std::invalid_argument("need n_steps > 0 and dt > 0");
  if (stages < 1 || stages > 2) throw std::invalid_argument("stages must be 1 or 2");

  NoiseRealization w;
  w.kind = NoiseRealization::Kind::kSpectral;
  w.grid = grid;
  w.dt = dt;
  w.seed = seed;

  const Index m = grid.mode_count();
  const ArrayXd weights = mu_weights(mu, grid);
  const ArrayXd sd = (weights * dt).sqrt();

  w.increments.resize(n_steps, m);
  {
    auto eng = rng::engine(rng::mix(seed ^ 0x696e6372ULL));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Index s = 0; s < n_steps; ++s) fill_hermitian(w.increments, s, grid, sd, eng, gauss);
  }
  if (stages == 2) {
    const ArrayXd unit = ArrayXd::Ones(m);
    w.aux.resize(n_steps, m);
    auto eng = rng::engine(rng::mix(seed ^ 0x617578ULL));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Index s = 0; s < n_steps; ++s) fill_hermitian(w.aux, s, grid, unit, eng, gauss);
  }
  return w;
}

NoiseRealization sample_white_noise_1d(int n_x, int n_steps, double dt, std::uint64_t seed) {
  if (n_x < 2 || n_steps <= 0 || dt <= 0.0)
    throw std::invalid_argument("need n_x >= 2, n_steps > 0, dt > 0");
  NoiseRealization w;
  w.kind = NoiseRealization::Kind::kCell1d;
  w.n_x = n_x;
  w.dt = dt;
  w.seed = seed;
  const double dx = 1.0 / n_x;
  const double sd = std::sqrt(dt * dx);
  w.cells.resize(n_steps, n_x - 1);
  auto eng = rng::engine(rng::mix(seed ^ 0x63656c6cULL));
  std::normal_distribution<double> gauss(0.0, sd);
  for (Index s = 0; s < n_steps; ++s)
    for (Index i = 0; i < n_x - 1; ++i) w.cells(s, i) = gauss(eng);
  return w;
}

NoiseRealization mehler_shift(const NoiseRealization& w, const NoiseRealization& w_prime,
                              double theta) {
  if (theta < 0.0) throw std::invalid_argument("shift angle must be nonnegative");
  if (w.kind != w_prime.kind || w.dt != w_prime.dt ||
      w.increments.rows() != w_prime.increments.rows() ||
      w.increments.cols() != w_prime.increments.cols() ||
      w.cells.rows() != w_prime.cells.rows() || w.cells.cols() != w_prime.cells.cols() ||
      w.aux.rows() != w_prime.aux.rows())
    throw std::invalid_argument("mehler_shift needs two realizations of identical shape");

  const double a = std::exp(-theta);
  const double b = std::sqrt(-std::expm1(-2.0 * theta));

  NoiseRealization out = w;
  if (w.increments.size()) out.increments = a * w.increments + b * w_prime.increments;
  if (w.aux.size()) out.aux = a * w.aux + b * w_prime.aux;
  if (w.cells.size()) out.cells = a * w.cells + b * w_prime.cells;
  return out;
}

double h_inner(const HElement& phi, const HElement& psi, const ArrayXd& weights,
               const TorusGrid& grid) {
  if (phi.modes.size() != psi.modes.size() || phi.modes.size() != weights.size())
    throw std::invalid_argument("h_inner: size mismatch");
  const double box2 = std::pow(grid.box_volume(), 2);
  double acc = 0.0;
  for (Index k = 0; k < weights.size(); ++k)
    acc += weights[k] * (phi.modes[k] * std::conj(psi.modes[k])).real();
  return box2 * acc;
}

double h_inner(const HElement& phi, const HElement& psi, const SpectralMeasure& mu,
               const TorusGrid& grid) {
  return h_inner(phi, psi, mu_weights(mu, grid), grid);
}

}  // namespace spde::noise
