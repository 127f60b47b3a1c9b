#pragma once

#include "spde/types.hpp"

#include <array>

namespace spde::noise {

// Periodic box [0, 2L)^d sampled on n points per axis.  Frequency lattice
// xi_k = k / (2L) with signed k in {-n/2, ..., n/2 - 1}; flat storage is
// row-major with axis 0 fastest, matching the FFT layout.
struct TorusGrid {
  int d = 1;
  double L = 1.0;
  int n = 64;

  Index mode_count() const {
    Index m = 1;
    for (int a = 0; a < d; ++a) m *= n;
    return m;
  }
  double dx() const { return 2.0 * L / n; }
  double dxi() const { return 1.0 / (2.0 * L); }
  double cell_volume() const { return std::pow(dx(), d); }
  double box_volume() const { return std::pow(2.0 * L, d); }

  int signed_freq(int k) const { return k < (n + 1) / 2 ? k : k - n; }

  std::array<int, 3> unflatten(Index flat) const {
    std::array<int, 3> k{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      k[a] = static_cast<int>(flat % n);
      flat /= n;
    }
    return k;
  }

  double xi_norm(Index flat) const {
    auto k = unflatten(flat);
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
      const double f = signed_freq(k[a]);
      s += f * f;
    }
    return std::sqrt(s) * dxi();
  }

  Index conj_index(Index flat) const {
    auto k = unflatten(flat);
    Index out = 0;
    for (int a = d - 1; a >= 0; --a) out = out * n + ((n - k[a]) % n);
    return out;
  }

  // Physical coordinate of grid point along one axis.
  double x_of(int j) const { return j * dx(); }
};

// Default box half-width for a run horizon T.
inline double default_box_halfwidth(double t_max) { return 4.0 * std::sqrt(2.0 * t_max); }

// In-place d-dimensional FFT bridging physical nodal values and synthesis
// coefficients: u_j = sum_k uhat_k e^{2 pi i j.k / n}.
class TorusFft {
 public:
  explicit TorusFft(const TorusGrid& grid);

  // physical nodal values -> synthesis coefficients
  void to_modes(ArrayXcd& field) const;
  // synthesis coefficients -> physical nodal values
  void to_physical(ArrayXcd& field) const;

 private:
  void transform(ArrayXcd& field, bool forward) const;
  TorusGrid grid_;
};

}  // namespace spde::noise
