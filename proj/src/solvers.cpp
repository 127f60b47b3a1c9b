#include "spde/solvers.hpp"

#include "spde/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spde::solvers {

double Drift::operator()(double u) const {
  switch (kind) {
    case DriftKind::kZero: return 0.0;
    case DriftKind::kLinear: return param * u;
    case DriftKind::kAtan: return std::atan(param * u);
    case DriftKind::kTanh: return std::tanh(param * u);
  }
  return 0.0;
}

double Drift::deriv(double u) const {
  switch (kind) {
    case DriftKind::kZero: return 0.0;
    case DriftKind::kLinear: return param;
    case DriftKind::kAtan: return param / (1.0 + param * param * u * u);
    case DriftKind::kTanh: {
      const double th = std::tanh(param * u);
      return param * (1.0 - th * th);
    }
  }
  return 0.0;
}

double Drift::max_deriv() const { return kind == DriftKind::kZero ? 0.0 : std::abs(param); }

std::string Drift::label() const {
  switch (kind) {
    case DriftKind::kZero: return "zero";
    case DriftKind::kLinear: return "linear(" + std::to_string(param) + ")";
    case DriftKind::kAtan: return "atan(" + std::to_string(param) + ")";
    case DriftKind::kTanh: return "tanh(" + std::to_string(param) + ")";
  }
  return "zero";
}

int ModelSpec::n_steps() const {
  if (!(t_eval > 0.0) || !(dt_target > 0.0))
    throw std::invalid_argument("need t_eval > 0 and dt_target > 0");
  return std::max<int>(1, static_cast<int>(std::llround(t_eval / dt_target)));
}

noise::NoiseRealization ModelSpec::sample_noise_for(std::uint64_t seed) const {
  if (model == ModelKind::kHeatDirichlet1d)
    return noise::sample_white_noise_1d(n_x, n_steps(), dt(), seed);
  return noise::sample_noise(mu, grid, n_steps(), dt(), seed, noise_stages());
}

namespace {

// Constant-coefficient Thomas factorization of (I - dt A_h) with A_h the
// Dirichlet Laplacian; an M-matrix, so the solve never subtracts positives
// from positives and nonnegative inputs stay nonnegative.
struct Tridiag {
  ArrayXd cp;
  ArrayXd inv_den;
  double a;

  Tridiag(int n, double mu) : cp(n), inv_den(n), a(-mu) {
    const double b = 1.0 + 2.0 * mu;
    double den = b;
    inv_den[0] = 1.0 / den;
    cp[0] = a / den;
    for (int i = 1; i < n; ++i) {
      den = b - a * cp[i - 1];
      inv_den[i] = 1.0 / den;
      cp[i] = a / den;
    }
  }

  void solve(ArrayXd& d) const {
    const int n = static_cast<int>(d.size());
    d[0] *= inv_den[0];
    for (int i = 1; i < n; ++i) d[i] = (d[i] - a * d[i - 1]) * inv_den[i];
    for (int i = n - 2; i >= 0; --i) d[i] -= cp[i] * d[i + 1];
  }
};

ArrayXd interval_eval_weights(int n_x, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("x_eval must lie in [0, 1]");
  ArrayXd w = ArrayXd::Zero(n_x - 1);
  const double pos = x * n_x;
  int j = std::clamp(static_cast<int>(std::floor(pos)), 0, n_x - 1);
  const double frac = pos - j;
  if (j >= 1) w[j - 1] += 1.0 - frac;  // node j
  if (j + 1 <= n_x - 1) w[j] += frac;  // node j + 1
  return w;
}

ArrayXd interval_initial(const ModelSpec& spec) {
  const int n = spec.n_x - 1;
  ArrayXd u(n);
  switch (spec.u0.kind) {
    case InitialKind::kZero: u.setZero(); break;
    case InitialKind::kConstant: u.setConstant(spec.u0.amplitude); break;
    case InitialKind::kSineMode:
      for (int i = 0; i < n; ++i)
        u[i] = spec.u0.amplitude * std::sin(spec.u0.param * kPi * (i + 1) / spec.n_x);
      break;
    case InitialKind::kBump:
      throw std::invalid_argument("bump initial data is a torus profile");
  }
  return u;
}

void check_cell_noise(const ModelSpec& spec, const noise::NoiseRealization& w) {
  if (w.kind != noise::NoiseRealization::Kind::kCell1d)
    throw std::invalid_argument("interval model needs cell noise");
  if (w.n_x != spec.n_x || w.cells.rows() != spec.n_steps())
    throw std::invalid_argument("noise shape does not match the model discretization");
  if (std::abs(w.dt - spec.dt()) > 1e-12 * spec.dt())
    throw std::invalid_argument("noise step size does not match the model");
}

// Shared torus-side context.
struct TorusCtx {
  noise::TorusGrid grid;
  noise::TorusFft fft;
  ArrayXd weights;
  ArrayXd xi;    // |xi_k|
  ArrayXcd eval; // e^{2 pi i xi_k . x*}

  TorusCtx(const ModelSpec& spec) : grid(spec.grid), fft(spec.grid) {
    if (spec.mu.dimension() != grid.d)
      throw std::invalid_argument("measure dimension does not match the grid");
    weights = noise::mu_weights(spec.mu, grid);
    const Index m = grid.mode_count();
    xi.resize(m);
    eval.resize(m);
    for (Index k = 0; k < m; ++k) {
      xi[k] = grid.xi_norm(k);
      auto idx = grid.unflatten(k);
      double dot = 0.0;
      for (int a = 0; a < grid.d; ++a)
        dot += grid.signed_freq(idx[a]) * spec.x_eval[a];
      const double phase = kTwoPi * dot * grid.dxi();
      eval[k] = Complex(std::cos(phase), std::sin(phase));
    }
  }
};

ArrayXcd torus_initial(const TorusCtx& ctx, const InitialData& id) {
  const Index m = ctx.grid.mode_count();
  ArrayXcd out = ArrayXcd::Zero(m);
  switch (id.kind) {
    case InitialKind::kZero:
      break;
    case InitialKind::kConstant:
      out[0] = id.amplitude;
      break;
    case InitialKind::kBump: {
      const int n = ctx.grid.n;
      const double dx = ctx.grid.dx();
      for (Index j = 0; j < m; ++j) {
        auto idx = ctx.grid.unflatten(j);
        double r2 = 0.0;
        for (int a = 0; a < ctx.grid.d; ++a) {
          const double z = idx[a] * dx - ctx.grid.L;
          r2 += z * z;
        }
        out[j] = id.amplitude * std::exp(-r2 / (2.0 * id.param * id.param));
      }
      (void)n;
      ctx.fft.to_modes(out);
      break;
    }
    case InitialKind::kSineMode:
      throw std::invalid_argument("sine initial data is an interval profile");
  }
  return out;
}

void check_spectral_noise(const ModelSpec& spec, const noise::NoiseRealization& w) {
  if (w.kind != noise::NoiseRealization::Kind::kSpectral)
    throw std::invalid_argument("torus model needs spectral noise");
  if (w.grid.d != spec.grid.d || w.grid.n != spec.grid.n || w.grid.L != spec.grid.L)
    throw std::invalid_argument("noise grid does not match the model grid");
  if (w.increments.rows() != spec.n_steps())
    throw std::invalid_argument("noise step count does not match the model");
  if (std::abs(w.dt - spec.dt()) > 1e-12 * spec.dt())
    throw std::invalid_argument("noise step size does not match the model");
  if (spec.noise_stages() == 2 && w.aux.size() == 0)
    throw std::invalid_argument("wave model needs two-stage noise");
}

void ensure_finite(double v) {
  if (!std::isfinite(v)) throw std::runtime_error("solver produced a non-finite value");
}

ArrayXcd drift_modes(const TorusCtx& ctx, const Drift& drift, const ArrayXd& phys) {
  ArrayXcd b(phys.size());
  for (Index i = 0; i < phys.size(); ++i) b[i] = Complex(drift(phys[i]), 0.0);
  ctx.fft.to_modes(b);
  return b;
}

// adjoint of the drift linearization: synthesize, scale by b'(u), analyze
ArrayXcd mult_by_deriv(const TorusCtx& ctx, const Drift& drift, const ArrayXd& phys_state,
                       const ArrayXcd& v) {
  ArrayXcd tmp = v;
  ctx.fft.to_physical(tmp);
  for (Index i = 0; i < tmp.size(); ++i) tmp[i] *= drift.deriv(phys_state[i]);
  ctx.fft.to_modes(tmp);
  return tmp;
}

}  // namespace

TrajectoryResult solve_heat_dirichlet(const ModelSpec& spec, const noise::NoiseRealization& w,
                                      MatrixXd* path) {
  check_cell_noise(spec, w);
  const int n = spec.n_x - 1;
  const int N = spec.n_steps();
  const double dtv = spec.dt();
  const double dx = 1.0 / spec.n_x;

  Tridiag solver(n, dtv / (dx * dx));
  ArrayXd u = interval_initial(spec);
  if (path) path->resize(N, n);

  const double nscale = spec.sigma / dx;
  for (int step = 0; step < N; ++step) {
    if (path) path->row(step) = u.matrix().transpose();
    if (!spec.drift.is_zero())
      for (int i = 0; i < n; ++i) u[i] += dtv * spec.drift(u[i]);
    u += nscale * w.cells.row(step).transpose().array();
    solver.solve(u);
  }

  TrajectoryResult res;
  res.seed = w.seed;
  res.f_value = (interval_eval_weights(spec.n_x, spec.x_eval[0]) * u).sum();
  ensure_finite(res.f_value);
  res.final_field = ArrayXd::Zero(spec.n_x + 1);
  res.final_field.segment(1, n) = u;
  return res;
}

TrajectoryResult solve_heat_torus(const ModelSpec& spec, const noise::NoiseRealization& w,
                                  MatrixXd* path) {
  check_spectral_noise(spec, w);
  TorusCtx ctx(spec);
  const Index m = ctx.grid.mode_count();
  const int N = spec.n_steps();
  const double dtv = spec.dt();

  ArrayXcd decay(m), nscale(m);
  for (Index k = 0; k < m; ++k) {
    const double lam = 4.0 * kPi * kPi * ctx.xi[k] * ctx.xi[k];
    decay[k] = std::exp(-lam * dtv);
    const double u = 2.0 * lam * dtv;
    const double factor = u < 1e-12 ? 1.0 : -std::expm1(-u) / u;
    nscale[k] = spec.sigma * std::sqrt(factor);
  }

  ArrayXcd uh = torus_initial(ctx, spec.u0);
  const bool need_phys = !spec.drift.is_zero() || path != nullptr;
  if (path) path->resize(N, m);

  ArrayXcd tmp;
  ArrayXd phys;
  for (int step = 0; step < N; ++step) {
    if (need_phys) {
      tmp = uh;
      ctx.fft.to_physical(tmp);
      phys = tmp.real();
      if (path) path->row(step) = phys.matrix().transpose();
    }
    ArrayXcd next = decay * uh;
    if (!spec.drift.is_zero()) next += dtv * drift_modes(ctx, spec.drift, phys);
    next += nscale * w.increments.row(step).transpose().array();
    uh = std::move(next);
  }

  TrajectoryResult res;
  res.seed = w.seed;
  res.f_value = (uh * ctx.eval).real().sum();
  ensure_finite(res.f_value);
  tmp = uh;
  ctx.fft.to_physical(tmp);
  res.final_field = tmp.real();
  return res;
}

TrajectoryResult solve_wave_torus(const ModelSpec& spec, const noise::NoiseRealization& w,
                                  MatrixXd* path) {
  check_spectral_noise(spec, w);
  TorusCtx ctx(spec);
  const Index m = ctx.grid.mode_count();
  const int N = spec.n_steps();
  const double dtv = spec.dt();

  ArrayXcd cosd(m), sincd(m), asind(m), phi_u(m), phi_v(m), nu(m), nv1(m), nv2(m);
  for (Index k = 0; k < m; ++k) {
    const double a = kTwoPi * ctx.xi[k];
    const double ad = a * dtv;
    cosd[k] = std::cos(ad);
    sincd[k] = ad < 1e-9 ? dtv : std::sin(ad) / a;
    asind[k] = -a * std::sin(ad);
    const double sh = std::sin(0.5 * ad);
    phi_u[k] = ad < 1e-9 ? 0.5 * dtv * dtv : 2.0 * sh * sh / (a * a);
    phi_v[k] = sincd[k];

    // exact one-step covariance of the stochastic convolution
    const double cuu = kernels::wave_ft_time_integral(dtv, ctx.xi[k]);
    const double cvv = ad < 1e-8 ? dtv : 0.5 * dtv + std::sin(2.0 * ad) / (4.0 * a);
    const double s1 = std::sin(ad);
    const double cuv = ad < 1e-8 ? 0.5 * dtv * dtv : s1 * s1 / (2.0 * a * a);
    const double l11 = std::sqrt(cuu);
    const double l21 = cuv / l11;
    const double l22 = std::sqrt(std::max(0.0, cvv - l21 * l21));
    nu[k] = spec.sigma * l11 / std::sqrt(dtv);
    nv1[k] = spec.sigma * l21 / std::sqrt(dtv);
    nv2[k] = spec.sigma * l22 * std::sqrt(ctx.weights[k]);
  }

  ArrayXcd uh = torus_initial(ctx, spec.u0);
  ArrayXcd vh = torus_initial(ctx, spec.v0);
  const bool need_phys = !spec.drift.is_zero() || path != nullptr;
  if (path) path->resize(N, m);

  ArrayXcd tmp;
  ArrayXd phys;
  for (int step = 0; step < N; ++step) {
    if (need_phys) {
      tmp = uh;
      ctx.fft.to_physical(tmp);
      phys = tmp.real();
      if (path) path->row(step) = phys.matrix().transpose();
    }
    ArrayXcd bh;
    const bool with_drift = !spec.drift.is_zero();
    if (with_drift) bh = drift_modes(ctx, spec.drift, phys);
    const auto dW = w.increments.row(step).transpose().array();
    const auto dZ = w.aux.row(step).transpose().array();
    ArrayXcd next_u = cosd * uh + sincd * vh + nu * dW;
    ArrayXcd next_v = asind * uh + cosd * vh + nv1 * dW + nv2 * dZ;
    if (with_drift) {
      next_u += phi_u * bh;
      next_v += phi_v * bh;
    }
    uh = std::move(next_u);
    vh = std::move(next_v);
  }

  TrajectoryResult res;
  res.seed = w.seed;
  res.f_value = (uh * ctx.eval).real().sum();
  ensure_finite(res.f_value);
  tmp = uh;
  ctx.fft.to_physical(tmp);
  res.final_field = tmp.real();
  return res;
}

TrajectoryResult solve(const ModelSpec& spec, const noise::NoiseRealization& w, MatrixXd* path) {
  switch (spec.model) {
    case ModelKind::kHeatDirichlet1d: return solve_heat_dirichlet(spec, w, path);
    case ModelKind::kHeatTorus: return solve_heat_torus(spec, w, path);
    case ModelKind::kWaveTorus: return solve_wave_torus(spec, w, path);
  }
  throw std::invalid_argument("unknown model");
}

namespace {

TangentField tangent_heat_dirichlet(const ModelSpec& spec, const MatrixXd& path) {
  const int n = spec.n_x - 1;
  const int N = spec.n_steps();
  const double dtv = spec.dt();
  const double dx = 1.0 / spec.n_x;
  if (!spec.drift.is_zero() && (path.rows() != N || path.cols() != n))
    throw std::invalid_argument("path shape does not match the discretization");

  Tridiag solver(n, dtv / (dx * dx));
  ArrayXd w = interval_eval_weights(spec.n_x, spec.x_eval[0]);

  TangentField tf;
  tf.dt = dtv;
  tf.dx = dx;
  tf.grid_slices.resize(N, n);
  const double s = spec.sigma / dx;
  for (int step = N - 1; step >= 0; --step) {
    solver.solve(w);
    tf.grid_slices.row(step) = (s * w).matrix().transpose();
    if (!spec.drift.is_zero())
      for (int i = 0; i < n; ++i) w[i] *= 1.0 + dtv * spec.drift.deriv(path(step, i));
  }
  return tf;
}

TangentField tangent_heat_torus(const ModelSpec& spec, const MatrixXd& path) {
  TorusCtx ctx(spec);
  const Index m = ctx.grid.mode_count();
  const int N = spec.n_steps();
  const double dtv = spec.dt();
  const bool with_drift = !spec.drift.is_zero();
  if (with_drift && (path.rows() != N || path.cols() != m))
    throw std::invalid_argument("path shape does not match the discretization");

  ArrayXcd decay(m);
  for (Index k = 0; k < m; ++k)
    decay[k] = std::exp(-4.0 * kPi * kPi * ctx.xi[k] * ctx.xi[k] * dtv);

  ArrayXcd wbar = ctx.eval.conjugate();
  TangentField tf;
  tf.dt = dtv;
  tf.mode_slices.resize(N, m);
  const double scale = spec.sigma / ctx.grid.box_volume();
  for (int step = N - 1; step >= 0; --step) {
    if (with_drift) {
      ArrayXcd coupled = mult_by_deriv(ctx, spec.drift, path.row(step).transpose().array(), wbar);
      wbar = decay * wbar + dtv * coupled;
    } else {
      wbar = decay * wbar;
    }
    tf.mode_slices.row(step) = (scale * wbar).matrix().transpose();
  }
  return tf;
}

TangentField tangent_wave_torus(const ModelSpec& spec, const MatrixXd& path) {
  TorusCtx ctx(spec);
  const Index m = ctx.grid.mode_count();
  const int N = spec.n_steps();
  const double dtv = spec.dt();
  const bool with_drift = !spec.drift.is_zero();
  if (with_drift && (path.rows() != N || path.cols() != m))
    throw std::invalid_argument("path shape does not match the discretization");

  ArrayXcd cosd(m), sincd(m), asind(m), phi_u(m), phi_v(m);
  for (Index k = 0; k < m; ++k) {
    const double a = kTwoPi * ctx.xi[k];
    const double ad = a * dtv;
    cosd[k] = std::cos(ad);
    sincd[k] = ad < 1e-9 ? dtv : std::sin(ad) / a;
    asind[k] = -a * std::sin(ad);
    const double sh = std::sin(0.5 * ad);
    phi_u[k] = ad < 1e-9 ? 0.5 * dtv * dtv : 2.0 * sh * sh / (a * a);
    phi_v[k] = sincd[k];
  }

  ArrayXcd wu = ctx.eval.conjugate();
  ArrayXcd wv = ArrayXcd::Zero(m);
  TangentField tf;
  tf.dt = dtv;
  tf.mode_slices.resize(N, m);
  const double scale = spec.sigma / ctx.grid.box_volume();
  for (int step = N - 1; step >= 0; --step) {
    ArrayXcd coupled;
    if (with_drift)
      coupled = mult_by_deriv(ctx, spec.drift, path.row(step).transpose().array(),
                              phi_u * wu + phi_v * wv);
    ArrayXcd new_u = cosd * wu + asind * wv;
    ArrayXcd new_v = sincd * wu + cosd * wv;
    if (with_drift) new_u += coupled;
    wu = std::move(new_u);
    wv = std::move(new_v);
    tf.mode_slices.row(step) = (scale * wv).matrix().transpose();
  }
  return tf;
}

}  // namespace

TangentField tangent_adjoint(const ModelSpec& spec, const MatrixXd& path) {
  switch (spec.model) {
    case ModelKind::kHeatDirichlet1d: return tangent_heat_dirichlet(spec, path);
    case ModelKind::kHeatTorus: return tangent_heat_torus(spec, path);
    case ModelKind::kWaveTorus: return tangent_wave_torus(spec, path);
  }
  throw std::invalid_argument("unknown model");
}

double tangent_inner(const ModelSpec& spec, const TangentField& a, const TangentField& b) {
  if (spec.model == ModelKind::kHeatDirichlet1d) {
    if (a.grid_slices.rows() != b.grid_slices.rows() ||
        a.grid_slices.cols() != b.grid_slices.cols())
      throw std::invalid_argument("tangent fields have mismatched shapes");
    return a.dt * a.dx * a.grid_slices.cwiseProduct(b.grid_slices).sum();
  }
  if (a.mode_slices.rows() != b.mode_slices.rows() ||
      a.mode_slices.cols() != b.mode_slices.cols())
    throw std::invalid_argument("tangent fields have mismatched shapes");
  const ArrayXd w = noise::mu_weights(spec.mu, spec.grid);
  const double box2 = std::pow(spec.grid.box_volume(), 2);
  const VectorXd col =
      a.mode_slices.conjugate().cwiseProduct(b.mode_slices).real().colwise().sum().transpose();
  return a.dt * box2 * col.dot(w.matrix());
}

double htnorm_tangent(const ModelSpec& spec, const TangentField& tf) {
  return tangent_inner(spec, tf, tf);
}

double heat_dirichlet_scheme_variance(int n_x, double dt, int n_steps, double x, double sigma) {
  const double dx = 1.0 / n_x;
  double acc = 0.0;
  for (int k = 1; k <= n_x - 1; ++k) {
    const double s = std::sin(0.5 * k * kPi * dx);
    const double lam = 4.0 * s * s / (dx * dx);
    const double q = 1.0 / (1.0 + dt * lam);
    const double q2 = q * q;
    const double geom = q2 * (1.0 - std::pow(q2, n_steps)) / (1.0 - q2);
    const double v = std::sin(k * kPi * x);
    acc += 2.0 * dt * v * v * geom;
  }
  return sigma * sigma * acc;
}

double heat_torus_variance(const ModelSpec& spec) {
  TorusCtx ctx(spec);
  double acc = 0.0;
  for (Index k = 0; k < ctx.weights.size(); ++k) {
    const double lam = 4.0 * kPi * kPi * ctx.xi[k] * ctx.xi[k];
    const double u = 2.0 * lam * spec.t_eval;
    const double factor = u < 1e-12 ? spec.t_eval : -std::expm1(-u) / (2.0 * lam);
    acc += ctx.weights[k] * factor;
  }
  return spec.sigma * spec.sigma * acc;
}

double wave_torus_variance(const ModelSpec& spec) {
  TorusCtx ctx(spec);
  double acc = 0.0;
  for (Index k = 0; k < ctx.weights.size(); ++k)
    acc += ctx.weights[k] * kernels::wave_ft_time_integral(spec.t_eval, ctx.xi[k]);
  return spec.sigma * spec.sigma * acc;
}

}  // namespace spde::solvers
