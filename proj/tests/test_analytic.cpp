#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "metaselect/analytic.hpp"
#include "metaselect/errors.hpp"
#include "metaselect/harness.hpp"

using namespace metaselect;

namespace {

ConditionGrid line_grid(int levels) {
  return build_grid({Factor::integer_levels("x", levels)});
}

ConditionGrid grid_5x5() {
  return build_grid({Factor::integer_levels("a", 5), Factor::integer_levels("b", 5)});
}

GroundTruth truth_of(std::vector<double> means, double sigma2) {
  GroundTruth truth;
  truth.means = std::move(means);
  truth.sigma2 = sigma2;
  return truth;
}

std::vector<double> random_means(int count, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> spread(100.0, 25.0);
  std::vector<double> means(count);
  for (double& value : means) value = spread(rng);
  return means;
}

}  // namespace

TEST_CASE("model-free closed form") {
  CHECK(modelfree_mse(5, 4.0, 100).total == doctest::Approx(1.0));
  CHECK(modelfree_mse(1, 7.0, 10).total == doctest::Approx(0.7));
  CHECK(modelfree_mse(25, 1.0, 100).total == doctest::Approx(6.25));
  CHECK(modelfree_mse(5, 4.0, 100).bias_sq == 0.0);
  CHECK_THROWS_AS(modelfree_mse(5, 4.0, 101), ConfigError);
  CHECK_THROWS_AS(modelfree_mse(5, -1.0, 100), ConfigError);
}

TEST_CASE("exact decomposition on small hand cases") {
  SUBCASE("two points fit a line exactly") {
    const ConditionGrid grid = line_grid(2);
    const MseBreakdown breakdown =
        exact_linear_mse(builtin_model("model1"), grid, truth_of({10, 20}, 1.0), 10);
    CHECK(breakdown.variance == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(breakdown.bias_sq < 1e-12);
    CHECK(breakdown.total == doctest::Approx(0.4).epsilon(1e-12));
  }

  SUBCASE("tent truth on three levels leaves bias 2/3") {
    // Hand OLS: the fitted line is flat at 1/3; residuals (1/3, -2/3, 1/3).
    const ConditionGrid grid = line_grid(3);
    const MseBreakdown breakdown =
        exact_linear_mse(builtin_model("model1"), grid, truth_of({0, 1, 0}, 1.0), 30);
    CHECK(breakdown.bias_sq == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }

  SUBCASE("saturated projection is the identity") {
    const ConditionGrid grid = line_grid(5);
    const MseBreakdown breakdown =
        exact_linear_mse(builtin_model("direct"), grid, truth_of({5, 1, 4, 2, 3}, 1.0), 100);
    CHECK(breakdown.variance == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(breakdown.bias_sq < 1e-12);
    CHECK(breakdown.total == doctest::Approx(modelfree_mse(5, 1.0, 100).total).epsilon(1e-12));
  }
}

TEST_CASE("a curvature-free preset is unbiased for every basis spanning {1, x1, x2}") {
  const ConditionGrid grid = grid_5x5();
  const GroundTruth truth = preset_oud_like(grid, 2400.0, -12.0, -4.0, 0.0, 100.0);
  for (const char* name : {"model2", "model3", "model4", "model5", "direct"}) {
    CHECK(exact_linear_mse(builtin_model(name), grid, truth, 100).bias_sq < 1e-10);
  }
  // model1 omits x2 and keeps a bias.
  CHECK(exact_linear_mse(builtin_model("model1"), grid, truth, 100).bias_sq > 1.0);
}

TEST_CASE("variance equals p L sigma^2 / n for every built-in basis") {
  const ConditionGrid grid = grid_5x5();
  const GroundTruth truth = truth_of(random_means(25, 5), 3.0);
  for (const std::string& name : builtin_model_names()) {
    const ModelSpec model = builtin_model(name);
    for (int n : {100, 1000}) {
      const double expected = model.feature_count(25) * 25 * truth.sigma2 / n;
      const double got = exact_linear_mse(model, grid, truth, n).variance;
      CHECK(std::abs(got - expected) / expected < 1e-9);
    }
  }
  // One-factor linear metamodel: 2 L sigma^2 / n.
  const ConditionGrid line = line_grid(5);
  const GroundTruth line_truth = truth_of({1, 2, 3, 4, 5}, 1.0);
  const double got = exact_linear_mse(builtin_model("model1"), line, line_truth, 100).variance;
  CHECK(std::abs(got - 0.1) < 1e-10);
}

TEST_CASE("bias is non-increasing along the nested bases and n-free") {
  const ConditionGrid grid = grid_5x5();
  for (unsigned seed : {21u, 22u, 23u}) {
    const GroundTruth truth = truth_of(random_means(25, seed), 2.0);
    double previous = std::numeric_limits<double>::infinity();
    for (const std::string& name : builtin_model_names()) {
      const ModelSpec model = builtin_model(name);
      const double bias = exact_linear_mse(model, grid, truth, 100).bias_sq;
      CHECK(bias <= previous + 1e-9);
      previous = bias;

      const double bias_1k = exact_linear_mse(model, grid, truth, 1000).bias_sq;
      const double bias_10k = exact_linear_mse(model, grid, truth, 10000).bias_sq;
      CHECK(std::abs(bias - bias_1k) < 1e-12 * std::max(1.0, bias));
      CHECK(std::abs(bias - bias_10k) < 1e-12 * std::max(1.0, bias));
    }
    CHECK(exact_linear_mse(builtin_model("direct"), grid, truth, 100).bias_sq < 1e-10);
  }
}

TEST_CASE("printed total reproduces the hand evaluation") {
  const std::vector<double> means = {1, 2, 3, 4, 5};
  // First term (5/100)*12 = 0.6; second term (66/30)*(10/2)^2 = 55.
  CHECK(std::abs(theorem1_mse_paper(5, 1.0, 100, means) - 55.6) < 1e-9);
  CHECK(std::abs(theorem1_variance_paper(5, 1.0, 100) - 0.6) < 1e-12);

  // Centered weighted sum cancels on a symmetric pattern.
  const std::vector<double> symmetric = {0, 1, 0, 1, 0};
  CHECK(std::abs(theorem1_mse_paper(5, 1.0, 100, symmetric) - 0.6) < 1e-12);

  // The long-form derivation ends at a different variance constant: at L=5
  // the ratio is 110/14.666... = 7.5.
  CHECK(std::abs(longform_variance_paper(5, 1.0, 100) - 0.075) < 1e-12);

  CHECK_THROWS_AS(theorem1_mse_paper(1, 1.0, 100, std::vector<double>{1.0}), ConfigError);
  CHECK_THROWS_AS(theorem1_variance_paper(1, 1.0, 100), ConfigError);

  // L=2 is the smallest case with a nonsingular denominator (L^2-1 = 3).
  CHECK(std::isfinite(theorem1_mse_paper(2, 1.0, 100, std::vector<double>{1.0, 2.0})));
}

TEST_CASE("rho_squared hand values and invariances") {
  CHECK(rho_squared(std::vector<double>{0, 1, 0}) == doctest::Approx(0.0));
  CHECK(rho_squared(std::vector<double>{0, 1, 2}) == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(rho_squared(std::vector<double>{4, 4, 4, 4}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(rho_squared(std::vector<double>{1.0}), ConfigError);

  std::mt19937 rng(31);
  std::normal_distribution<double> spread(0.0, 10.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> means(6);
    for (double& value : means) value = spread(rng);
    const double reference = rho_squared(means);

    std::vector<double> shifted = means;
    for (double& value : shifted) value += 123.0;
    CHECK(rho_squared(shifted) == doctest::Approx(reference).epsilon(1e-9));

    std::vector<double> scaled = means;
    for (double& value : scaled) value *= 3.0;
    CHECK(rho_squared(scaled) == doctest::Approx(9.0 * reference).epsilon(1e-9));
  }
}

TEST_CASE("printed crossover evaluates negative at L=5") {
  const std::vector<double> means = {1, 2, 3, 4, 5};
  // bracket 5-1-11 = -7, factor 150/66, rho^2 = 25.
  CHECK(std::abs(nstar_paper(5, 1.0, means) - (-7.0 / 11.0)) < 1e-9);
  CHECK(std::isinf(nstar_paper(5, 1.0, std::vector<double>{2, 2, 2, 2, 2})));

  // Symmetric patterns cancel exactly despite round-off in the centered sum.
  const std::vector<double> tent = {0, 0, 1, 0, 0};
  CHECK(rho_squared(tent) == 0.0);
  CHECK(std::isinf(nstar_paper(5, 1.0, tent)));
  CHECK(nstar_paper(5, 1.0, tent) > 0.0);
}

TEST_CASE("exact crossover") {
  const ConditionGrid grid = line_grid(5);

  SUBCASE("hand case lands at 1875") {
    const GroundTruth truth = truth_of({0, 0, 1, 0, 0}, 100.0);
    // Flat fit at 0.2, residual norm^2 = 0.8, n* = 5*100*3/0.8.
    const double nstar = nstar_exact(builtin_model("model1"), grid, truth);
    CHECK(nstar == doctest::Approx(1875.0).epsilon(1e-9));
  }

  SUBCASE("unbiased model never gets overtaken") {
    const GroundTruth truth = truth_of({1, 2, 3, 4, 5}, 100.0);
    CHECK(std::isinf(nstar_exact(builtin_model("model1"), grid, truth)));
  }

  SUBCASE("scales linearly in sigma2") {
    for (double factor : {0.5, 2.0, 10.0}) {
      const GroundTruth base = truth_of({0, 0, 1, 0, 0}, 100.0);
      const GroundTruth scaled = truth_of({0, 0, 1, 0, 0}, 100.0 * factor);
      CHECK(nstar_exact(builtin_model("model1"), grid, scaled) ==
            doctest::Approx(factor * nstar_exact(builtin_model("model1"), grid, base))
                .epsilon(1e-9));
    }
  }

  SUBCASE("saturated basis is rejected") {
    const GroundTruth truth = truth_of({0, 0, 1, 0, 0}, 100.0);
    CHECK_THROWS_AS(nstar_exact(builtin_model("direct"), grid, truth), ConfigError);
  }
}

TEST_CASE("grand-mean/slope covariance vanishes") {
  const ConditionGrid grid = line_grid(5);
  const GroundTruth truth = truth_of({1, 2, 3, 4, 5}, 4.0);
  const CovCheck check =
      cov_grandmean_beta_check(builtin_model("model1"), grid, truth, 100, 10000, SeedSpec{42, 0});
  CHECK(std::abs(check.value) < 4.0 * check.std_error);

  // Degenerate noise pins the covariance to zero outright.
  const GroundTruth quiet = truth_of({1, 2, 3, 4, 5}, 1e-12);
  const CovCheck quiet_check =
      cov_grandmean_beta_check(builtin_model("model1"), grid, quiet, 100, 200, SeedSpec{43, 0});
  CHECK(std::abs(quiet_check.value) < 1e-12);

  const ConditionGrid two = grid_5x5();
  CHECK_THROWS_AS(cov_grandmean_beta_check(builtin_model("model1"), two,
                                           truth_of(random_means(25, 3), 1.0), 100, 100,
                                           SeedSpec{}),
                  ConfigError);
}

TEST_CASE("exact totals agree with the Monte-Carlo oracle") {
  const ConditionGrid grid = grid_5x5();
  const GroundTruth linear = preset_oud_like(grid, 2400.0, -12.0, -4.0, 0.0, 100.0);
  const GroundTruth curved = preset_oud_like(grid, 2400.0, -12.0, -4.0, 0.5, 100.0);
  const int reps = 4000;
  int cell = 0;
  for (const GroundTruth& truth : {linear, curved}) {
    for (const char* name : {"model1", "model3", "direct"}) {
      for (int n : {100, 500}) {
        const ModelSpec model = builtin_model(name);
        const MseBreakdown exact = exact_linear_mse(model, grid, truth, n);
        const McEstimate mc = mc_mse(model, grid, truth, n, reps,
                                     SeedSpec{9000 + static_cast<std::uint64_t>(cell++), 0});
        CAPTURE(name);
        CAPTURE(n);
        CHECK(std::abs(mc.mean - exact.total) <= 4.0 * mc.std_error);
      }
    }
  }
}
