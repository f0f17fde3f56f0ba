#pragma once

#include <vector>

#include "metaselect/design.hpp"

namespace metaselect {

// True per-condition outcome means plus the shared within-condition noise
// variance (homoscedastic across all conditions).
struct GroundTruth {
  std::vector<double> means;
  double sigma2 = 1.0;
};

// Arithmetic mean of the true condition means.
double grand_mean(const GroundTruth& truth);

// Synthetic response surface for a two-factor grid with default encodings:
//   mu(x1, x2) = base + slope1*x1 + slope2*x2 + curvature*x1^2
// Scaled like county-level death counts; stands in for simulator output that
// cannot be shipped.
GroundTruth preset_oud_like(const ConditionGrid& grid, double base, double slope1,
                            double slope2, double curvature, double sigma2);

}  // namespace metaselect
