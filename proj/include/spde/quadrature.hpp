#pragma once

#include "spde/types.hpp"

#include <functional>

namespace spde::quad {

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  ArrayXd nodes;
  ArrayXd weights;
  explicit GaussRule(int n);
};

// Shared default rule (20 points covers all integrands used here once the
// panels are small enough).
const GaussRule& default_rule();

double integrate(const std::function<double(double)>& f, double a, double b,
                 const GaussRule& rule = default_rule());

// Composite rule with a fixed panel width cap; panels never exceed max_panel.
double integrate_panels(const std::function<double(double)>& f, double a, double b,
                        double max_panel, const GaussRule& rule = default_rule());

}  // namespace spde::quad
