#include "spde/torus.hpp"

#include <unsupported/Eigen/FFT>

#include <vector>

namespace spde::noise {

TorusFft::TorusFft(const TorusGrid& grid) : grid_(grid) {}

void TorusFft::transform(ArrayXcd& field, bool forward) const {
  const int n = grid_.n;
  const Index total = grid_.mode_count();
  Eigen::FFT<double> fft;
  std::vector<Complex> line(n), out(n);
  for (int axis = 0; axis < grid_.d; ++axis) {
    Index stride = 1;
    for (int a = 0; a < axis; ++a) stride *= n;
    const Index block = stride * n;
    for (Index base = 0; base < total; base += block) {
      for (Index off = 0; off < stride; ++off) {
        for (int j = 0; j < n; ++j) line[j] = field[base + off + j * stride];
        if (forward)
          fft.fwd(out, line);
        else
          fft.inv(out, line);
        for (int j = 0; j < n; ++j) field[base + off + j * stride] = out[j];
      }
    }
  }
}

void TorusFft::to_modes(ArrayXcd& field) const {
  // uhat_k = (1/n^d) sum_j u_j e^{-2 pi i j.k / n}; Eigen's fwd is the bare
  // sum, so divide by n per axis (inv already carries 1/n).
  transform(field, true);
  field /= static_cast<double>(grid_.mode_count());
}

void TorusFft::to_physical(ArrayXcd& field) const {
  transform(field, false);
  field *= static_cast<double>(grid_.mode_count());
}

}  // namespace spde::noise
