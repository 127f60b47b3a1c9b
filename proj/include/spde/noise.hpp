#pragma once

#include "spde/rng.hpp"
#include "spde/spectral_measure.hpp"
#include "spde/torus.hpp"
#include "spde/types.hpp"

namespace spde::noise {

// Mode weights w_k = mu(cell around xi_k): radial density at xi_k times the
// cell volume (2L)^{-d}.  The zero cell of a Riesz measure is integrated
// exactly (over the equal-volume ball for d >= 2) so the singularity stays
// finite.
ArrayXd mu_weights(const SpectralMeasure& mu, const TorusGrid& grid);

// One realization of the driving noise increments.
//   - spectral form: increments(step, k) complex, Hermitian in k, variance
//     w_k dt per mode; aux(step, k) is an optional second standardized
//     stage (unit variance) used by integrators that resolve the noise
//     inside a step.
//   - cell form (Dirichlet interval model): cells(step, i) iid
//     N(0, dt dx) over interior cells.
struct NoiseRealization {
  enum class Kind { kSpectral, kCell1d };
  Kind kind = Kind::kSpectral;
  MatrixXcd increments;
  MatrixXcd aux;
  MatrixXd cells;
  TorusGrid grid;
  int n_x = 0;  // cell form: subintervals of [0, 1]
  double dt = 0.0;
  std::uint64_t seed = 0;
};

NoiseRealization sample_noise(const SpectralMeasure& mu, const TorusGrid& grid, int n_steps,
                              double dt, std::uint64_t seed, int stages = 1);

NoiseRealization sample_white_noise_1d(int n_x, int n_steps, double dt, std::uint64_t seed);

// Ornstein-Uhlenbeck coupling at angle theta >= 0:
//   e^{-theta} w + sqrt(1 - e^{-2 theta}) w_prime,
// applied mode-wise (or cell-wise); theta = 0 returns w unchanged in law and
// in value.
NoiseRealization mehler_shift(const NoiseRealization& w, const NoiseRealization& w_prime,
                              double theta);

// Element of the noise Hilbert space in synthesis coordinates
// (phi(x) = sum_k modes_k e^{2 pi i xi_k . x}).
struct HElement {
  ArrayXcd modes;
};

// <phi, psi>_H = (2L)^{2d} sum_k w_k Re(phi_k conj(psi_k)); with a white
// measure this is the L^2 inner product on the box.
double h_inner(const HElement& phi, const HElement& psi, const ArrayXd& weights,
               const TorusGrid& grid);
double h_inner(const HElement& phi, const HElement& psi, const SpectralMeasure& mu,
               const TorusGrid& grid);

}  // namespace spde::noise
