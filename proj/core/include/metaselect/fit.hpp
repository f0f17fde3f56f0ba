#pragma once

#include <span>
#include <string>
#include <vector>

#include "metaselect/simulate.hpp"

namespace metaselect {

// Regression basis over condition covariates. A monomial basis lists one
// exponent tuple per feature (one exponent per factor; shorter tuples imply
// zero exponents for trailing factors). The saturated basis has one
// indicator per condition and reproduces per-condition sample means exactly.
struct ModelSpec {
  std::string name;
  bool saturated = false;
  std::vector<std::vector<int>> terms;  // ignored when saturated

  int feature_count(int condition_count) const {
    return saturated ? condition_count : static_cast<int>(terms.size());
  }
};

// Canonical estimator names: model1..model5 and direct.
const std::vector<std::string>& builtin_model_names();

// model1 = {1, x1}
// model2 = {1, x1, x2, x1*x2}
// model3 = model2 + {x1^2}
// model4 = model3 + {x2^2}
// model5 = model4 + {x1^3}
// direct = saturated (one indicator per condition)
ModelSpec builtin_model(const std::string& name);

struct FitResult {
  std::string model_name;
  std::vector<double> coefficients;     // beta-hat, length p
  std::vector<double> predicted_means;  // y-hat per condition, length L
};

// Least-squares fit of the basis to all samples. Balanced allocation makes
// the full n-row problem algebraically identical to fitting the L
// per-condition means, which is what gets solved: column-pivoted Householder
// QR, rank detected at relative pivot threshold 1e-10. Throws RankError on a
// rank-deficient basis and FitError when n < p.
FitResult fit_ols(const Dataset& data, const ModelSpec& model);

// Per-condition sample means: the model-free estimator.
FitResult direct_estimate(const Dataset& data);

// Sum over conditions of squared error against the true means.
double empirical_sq_loss(std::span<const double> predicted, const GroundTruth& truth);

}  // namespace metaselect
