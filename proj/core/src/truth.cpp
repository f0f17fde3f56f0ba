#include "metaselect/truth.hpp"

#include <numeric>

#include "metaselect/errors.hpp"

namespace metaselect {

double grand_mean(const GroundTruth& truth) {
  if (truth.means.empty()) {
    throw ConfigError("ground truth has no condition means");
  }
  const double sum = std::accumulate(truth.means.begin(), truth.means.end(), 0.0);
  return sum / static_cast<double>(truth.means.size());
}

GroundTruth preset_oud_like(const ConditionGrid& grid, double base, double slope1,
                            double slope2, double curvature, double sigma2) {
  if (grid.factors.size() != 2) {
    throw ConfigError("preset truth needs a two-factor grid, got " +
                      std::to_string(grid.factors.size()) + " factor(s)");
  }
  for (const Factor& factor : grid.factors) {
    if (!factor.has_default_encoding()) {
      throw ConfigError("preset truth needs default 1..L encodings (factor '" + factor.name +
                        "' differs)");
    }
  }
  if (!(sigma2 > 0.0)) {
    throw ConfigError("sigma2 must be positive");
  }

  GroundTruth truth;
  truth.sigma2 = sigma2;
  truth.means.reserve(grid.conditions.size());
  for (const std::vector<double>& condition : grid.conditions) {
    const double x1 = condition[0];
    const double x2 = condition[1];
    truth.means.push_back(base + slope1 * x1 + slope2 * x2 + curvature * x1 * x1);
  }
  return truth;
}

}  // namespace metaselect
