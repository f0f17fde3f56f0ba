#include "metaselect/analytic.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>

#include "metaselect/errors.hpp"
#include "metaselect/simulate.hpp"

namespace metaselect {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kPivotThreshold = 1e-10;

// bias_sq below this fraction of ||mu||^2 is projection round-off, not bias.
constexpr double kZeroBiasRelTol = 1e-18;

double inf() { return std::numeric_limits<double>::infinity(); }

void require_balanced(int condition_count, double sigma2, int n) {
  if (condition_count < 1) {
    throw ConfigError("condition count must be positive");
  }
  if (!(sigma2 > 0.0)) {
    throw ConfigError("sigma2 must be positive");
  }
  if (n <= 0 || n % condition_count != 0) {
    throw ConfigError("n must be divisible by L: n=" + std::to_string(n) +
                      ", L=" + std::to_string(condition_count));
  }
}

// Thin orthonormal basis of the level-design column space.
Eigen::MatrixXd thin_q(const LevelDesign& design, const std::string& model_name) {
  const Eigen::Map<const RowMatrix> z(design.values.data(), design.rows, design.cols);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  qr.setThreshold(kPivotThreshold);
  if (qr.rank() < design.cols) {
    throw RankError("design for model '" + model_name + "' is rank deficient (rank " +
                    std::to_string(qr.rank()) + " < p=" + std::to_string(design.cols) + ")");
  }
  return qr.householderQ() * Eigen::MatrixXd::Identity(design.rows, design.cols);
}

// First printed bracket of the one-factor total: 2*(L^2/3 + L/2 + 1/6)
// over (1/12)(L^2 - 1), plus 1.
double theorem1_bracket(int levels) {
  const double l = static_cast<double>(levels);
  const double numerator = 2.0 * (l * l / 3.0 + l / 2.0 + 1.0 / 6.0);
  const double denominator = (l * l - 1.0) / 12.0;
  return numerator / denominator + 1.0;
}

double centered_weighted_sum(std::span<const double> level_means) {
  const double l = static_cast<double>(level_means.size());
  double mean = 0.0;
  for (double value : level_means) mean += value;
  mean /= l;
  double sum = 0.0;
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < level_means.size(); ++i) {
    const double x = static_cast<double>(i + 1) - (l + 1.0) / 2.0;
    sum += x * (level_means[i] - mean);
    abs_sum += std::abs(x * (level_means[i] - mean));
  }
  // A sum drowned in cancellation round-off is an exact zero (symmetric
  // patterns must hit the rho^2 = 0 sentinel, not a ~1e-30 residue).
  if (std::abs(sum) <= 1e-14 * abs_sum) return 0.0;
  return sum;
}

}  // namespace

LevelDesign build_level_design(const ModelSpec& model, const ConditionGrid& grid) {
  const int conditions = grid.condition_count();
  LevelDesign design;
  design.rows = conditions;

  if (model.saturated) {
    design.cols = conditions;
    design.values.assign(static_cast<std::size_t>(conditions) * conditions, 0.0);
    for (int l = 0; l < conditions; ++l) {
      design.values[static_cast<std::size_t>(l) * conditions + l] = 1.0;
    }
    return design;
  }

  if (model.terms.empty()) {
    throw ConfigError("model '" + model.name + "' has no features");
  }
  const std::size_t factors = grid.factors.size();
  for (const std::vector<int>& term : model.terms) {
    for (std::size_t j = 0; j < term.size(); ++j) {
      if (term[j] != 0 && j >= factors) {
        throw ConfigError("model '" + model.name + "' references factor " +
                          std::to_string(j + 1) + " but the grid has " +
                          std::to_string(factors) + " factor(s)");
      }
      if (term[j] < 0) {
        throw ConfigError("model '" + model.name + "' has a negative exponent");
      }
    }
  }

  design.cols = static_cast<int>(model.terms.size());
  design.values.reserve(static_cast<std::size_t>(conditions) * design.cols);
  for (const std::vector<double>& condition : grid.conditions) {
    for (const std::vector<int>& term : model.terms) {
      double feature = 1.0;
      for (std::size_t j = 0; j < term.size(); ++j) {
        for (int e = 0; e < term[j]; ++e) feature *= condition[j];
      }
      design.values.push_back(feature);
    }
  }
  return design;
}

MseBreakdown modelfree_mse(int condition_count, double sigma2, int n) {
  require_balanced(condition_count, sigma2, n);
  const double l = static_cast<double>(condition_count);
  MseBreakdown breakdown;
  breakdown.variance = l * l * sigma2 / static_cast<double>(n);
  breakdown.bias_sq = 0.0;
  breakdown.total = breakdown.variance;
  return breakdown;
}

MseBreakdown exact_linear_mse(const ModelSpec& model, const ConditionGrid& grid,
                              const GroundTruth& truth, int n) {
  const int conditions = grid.condition_count();
  require_balanced(conditions, truth.sigma2, n);
  if (truth.means.size() != static_cast<std::size_t>(conditions)) {
    throw ConfigError("truth has " + std::to_string(truth.means.size()) + " means for " +
                      std::to_string(conditions) + " conditions");
  }

  const LevelDesign design = build_level_design(model, grid);
  const Eigen::MatrixXd q = thin_q(design, model.name);
  const Eigen::Map<const Eigen::VectorXd> mu(truth.means.data(), conditions);

  MseBreakdown breakdown;
  // tr(P_Z) = ||Q||_F^2; exact value is p, computed rather than assumed.
  breakdown.variance =
      truth.sigma2 * (static_cast<double>(conditions) / n) * q.squaredNorm();
  const Eigen::VectorXd residual = q * (q.transpose() * mu) - mu;
  breakdown.bias_sq = residual.squaredNorm();
  breakdown.total = breakdown.variance + breakdown.bias_sq;
  return breakdown;
}

double theorem1_mse_paper(int levels, double sigma2, int n,
                          std::span<const double> level_means) {
  if (levels < 2) {
    throw ConfigError("printed closed forms need at least 2 levels");
  }
  if (static_cast<int>(level_means.size()) != levels) {
    throw ConfigError("level means length does not match L");
  }
  require_balanced(levels, sigma2, n);
  const double l = static_cast<double>(levels);
  const double variance_term =
      l * sigma2 / static_cast<double>(n) * theorem1_bracket(levels);
  const double ratio = centered_weighted_sum(level_means) / ((l * l - 1.0) / 12.0);
  const double bias_term = (2.0 * l * l + 3.0 * l + 1.0) / (6.0 * l) * ratio * ratio;
  return variance_term + bias_term;
}

double theorem1_variance_paper(int levels, double sigma2, int n) {
  if (levels < 2) {
    throw ConfigError("printed closed forms need at least 2 levels");
  }
  require_balanced(levels, sigma2, n);
  return static_cast<double>(levels) * sigma2 / static_cast<double>(n) *
         theorem1_bracket(levels);
}

double longform_variance_paper(int levels, double sigma2, int n) {
  if (levels < 2) {
    throw ConfigError("printed closed forms need at least 2 levels");
  }
  require_balanced(levels, sigma2, n);
  const double l = static_cast<double>(levels);
  const double numerator = 2.0 * l * (l * l / 3.0 + l / 2.0 + 1.0 / 6.0);
  const double denominator = 7.0 * l * l / 12.0 + 1.0 / 12.0;
  return sigma2 / static_cast<double>(n) * numerator / denominator;
}

double rho_squared(std::span<const double> level_means) {
  const int levels = static_cast<int>(level_means.size());
  if (levels < 2) {
    throw ConfigError("rho_squared needs at least 2 levels");
  }
  const double l = static_cast<double>(levels);
  const double ratio = centered_weighted_sum(level_means) / ((l * l - 1.0) / 12.0);
  return ratio * ratio;
}

double nstar_paper(int levels, double sigma2, std::span<const double> level_means) {
  if (levels < 2) {
    throw ConfigError("printed closed forms need at least 2 levels");
  }
  if (!(sigma2 > 0.0)) {
    throw ConfigError("sigma2 must be positive");
  }
  const double rho2 = rho_squared(level_means);
  if (rho2 == 0.0) {
    return inf();  // unbiased linear trend; no finite crossover
  }
  const double l = static_cast<double>(levels);
  const double bracket = l - 1.0 -
                         2.0 * (l * l / 3.0 + l / 2.0 + 1.0 / 6.0) / ((l * l - 1.0) / 12.0);
  return sigma2 * bracket * (6.0 * l * l / (2.0 * l * l + 3.0 * l + 1.0)) / rho2;
}

double nstar_exact(const ModelSpec& model, const ConditionGrid& grid,
                   const GroundTruth& truth) {
  const int conditions = grid.condition_count();
  const int p = model.feature_count(conditions);
  if (p >= conditions) {
    throw ConfigError("model '" + model.name + "' has p=" + std::to_string(p) +
                      " >= L=" + std::to_string(conditions) +
                      "; direct estimation never overtakes it on variance");
  }
  // bias_sq is n-free; evaluate the breakdown at the smallest balanced n.
  const MseBreakdown breakdown = exact_linear_mse(model, grid, truth, conditions);

  double scale = 1.0;
  for (double mean : truth.means) scale += mean * mean;
  if (breakdown.bias_sq <= kZeroBiasRelTol * scale) {
    return inf();
  }
  const double l = static_cast<double>(conditions);
  return l * truth.sigma2 * (l - static_cast<double>(p)) / breakdown.bias_sq;
}

CovCheck cov_grandmean_beta_check(const ModelSpec& slope_model, const ConditionGrid& grid,
                                  const GroundTruth& truth, int n, int reps,
                                  const SeedSpec& seed) {
  if (grid.factors.size() != 1) {
    throw ConfigError("covariance check needs a one-factor grid");
  }
  if (reps < 2) {
    throw ConfigError("covariance check needs at least 2 replications");
  }
  const Allocation allocation = allocate_equal(n, grid);

  std::vector<double> grand_means(reps);
  std::vector<double> slopes(reps);
  for (int r = 0; r < reps; ++r) {
    const SeedSpec rep_seed{seed.base_seed, seed.replication_index + static_cast<std::uint64_t>(r)};
    const Dataset data = generate_dataset(truth, grid, allocation, rep_seed);
    double sum = 0.0;
    for (const std::vector<double>& draws : data.samples) {
      for (double value : draws) sum += value;
    }
    grand_means[r] = sum / static_cast<double>(n);
    const FitResult fit = fit_ols(data, slope_model);
    if (fit.coefficients.size() < 2) {
      throw ConfigError("covariance check needs an intercept-plus-slope model");
    }
    slopes[r] = fit.coefficients[1];
  }

  double mean_a = 0.0, mean_b = 0.0;
  for (int r = 0; r < reps; ++r) {
    mean_a += grand_means[r];
    mean_b += slopes[r];
  }
  mean_a /= reps;
  mean_b /= reps;

  // Covariance as the mean of centered products; its standard error from the
  // spread of those products.
  double sum_w = 0.0, sum_w2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    const double w = (grand_means[r] - mean_a) * (slopes[r] - mean_b);
    sum_w += w;
    sum_w2 += w * w;
  }
  CovCheck check;
  check.reps = reps;
  check.value = sum_w / (reps - 1);
  const double w_mean = sum_w / reps;
  const double w_var = (sum_w2 - static_cast<double>(reps) * w_mean * w_mean) /
                       (reps - 1);
  check.std_error = std::sqrt(w_var / reps);
  return check;
}

}  // namespace metaselect
