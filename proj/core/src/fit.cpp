#include "metaselect/fit.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "metaselect/analytic.hpp"
#include "metaselect/errors.hpp"

namespace metaselect {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kPivotThreshold = 1e-10;

std::vector<double> condition_means(const Dataset& data) {
  std::vector<double> means;
  means.reserve(data.samples.size());
  for (std::size_t l = 0; l < data.samples.size(); ++l) {
    const std::vector<double>& draws = data.samples[l];
    if (draws.empty()) {
      throw FitError("condition " + std::to_string(l) + " has no samples");
    }
    double sum = 0.0;
    for (double value : draws) sum += value;
    means.push_back(sum / static_cast<double>(draws.size()));
  }
  return means;
}

}  // namespace

const std::vector<std::string>& builtin_model_names() {
  static const std::vector<std::string> names = {"model1", "model2", "model3",
                                                 "model4", "model5", "direct"};
  return names;
}

ModelSpec builtin_model(const std::string& name) {
  ModelSpec spec;
  spec.name = name;
  if (name == "direct") {
    spec.saturated = true;
    return spec;
  }
  if (name == "model1") {
    spec.terms = {{0}, {1}};
    return spec;
  }
  spec.terms = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  if (name == "model2") return spec;
  spec.terms.push_back({2, 0});
  if (name == "model3") return spec;
  spec.terms.push_back({0, 2});
  if (name == "model4") return spec;
  spec.terms.push_back({3, 0});
  if (name == "model5") return spec;
  throw ConfigError("unknown model '" + name + "'");
}

FitResult fit_ols(const Dataset& data, const ModelSpec& model) {
  const LevelDesign design = build_level_design(model, data.grid);
  const int conditions = design.rows;
  const int p = design.cols;
  if (data.total_samples() < p) {
    throw FitError("insufficient samples for model '" + model.name +
                   "': n=" + std::to_string(data.total_samples()) +
                   " < p=" + std::to_string(p));
  }

  // Balanced allocation: the n-row least-squares problem reduces exactly to
  // OLS of the per-condition means on the level design.
  const std::vector<double> means = condition_means(data);
  const Eigen::Map<const RowMatrix> z(design.values.data(), conditions, p);
  const Eigen::Map<const Eigen::VectorXd> rhs(means.data(), conditions);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  qr.setThreshold(kPivotThreshold);
  if (qr.rank() < p) {
    throw RankError("design for model '" + model.name + "' is rank deficient (rank " +
                    std::to_string(qr.rank()) + " < p=" + std::to_string(p) + ")");
  }

  FitResult result;
  result.model_name = model.name;
  const Eigen::VectorXd beta = qr.solve(rhs);
  const Eigen::VectorXd predicted = z * beta;
  result.coefficients.assign(beta.data(), beta.data() + beta.size());
  result.predicted_means.assign(predicted.data(), predicted.data() + predicted.size());
  return result;
}

FitResult direct_estimate(const Dataset& data) {
  FitResult result;
  result.model_name = "direct";
  result.predicted_means = condition_means(data);
  result.coefficients = result.predicted_means;
  return result;
}

double empirical_sq_loss(std::span<const double> predicted, const GroundTruth& truth) {
  if (predicted.size() != truth.means.size()) {
    throw ConfigError("predicted means (" + std::to_string(predicted.size()) +
                      ") and truth (" + std::to_string(truth.means.size()) +
                      ") differ in length");
  }
  double loss = 0.0;
  for (std::size_t l = 0; l < predicted.size(); ++l) {
    const double diff = predicted[l] - truth.means[l];
    loss += diff * diff;
  }
  return loss;
}

}  // namespace metaselect
