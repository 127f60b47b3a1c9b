#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>

namespace spde {

using Scalar = double;
using Complex = std::complex<double>;

using Eigen::Index;

using ArrayXd = Eigen::ArrayXd;
using ArrayXcd = Eigen::ArrayXcd;
using MatrixXd = Eigen::MatrixXd;
using MatrixXcd = Eigen::MatrixXcd;
using VectorXd = Eigen::VectorXd;
using Vector3d = Eigen::Vector3d;

template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Surface measure of the unit sphere in R^d, d = 1, 2, 3.
inline double sphere_surface(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return kTwoPi;
    case 3: return 4.0 * kPi;
    default: return 0.0;
  }
}

}  // namespace spde
