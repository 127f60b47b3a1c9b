#include "spde/quadrature.hpp"

#include <cmath>

namespace spde::quad {

GaussRule::GaussRule(int n) : nodes(n), weights(n) {
  // Newton iteration on Legendre P_n, symmetric roots.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
}

const GaussRule& default_rule() {
  static const GaussRule rule(20);
  return rule;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const GaussRule& rule) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (Index i = 0; i < rule.nodes.size(); ++i)
    acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return acc * half;
}

double integrate_panels(const std::function<double(double)>& f, double a, double b,
                        double max_panel, const GaussRule& rule) {
  if (b <= a) return 0.0;
  const int n_panels = std::max(1, static_cast<int>(std::ceil((b - a) / max_panel)));
  const double h = (b - a) / n_panels;
  double acc = 0.0;
  for (int i = 0; i < n_panels; ++i) acc += integrate(f, a + i * h, a + (i + 1) * h, rule);
  return acc;
}

}  // namespace spde::quad
