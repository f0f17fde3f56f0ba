#pragma once

#include <span>

#include "metaselect/fit.hpp"

namespace metaselect {

// Exact MSE split for one (model, n) pair. bias_sq does not depend on n;
// variance scales as 1/n under balanced allocation.
struct MseBreakdown {
  double variance = 0.0;
  double bias_sq = 0.0;
  double total = 0.0;
};

// A basis evaluated on the grid: row l holds the features of condition l.
struct LevelDesign {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // row-major

  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

// Binds a model to a grid. A term referencing a factor the grid does not
// have is a configuration error, caught here before any fitting.
LevelDesign build_level_design(const ModelSpec& model, const ConditionGrid& grid);

// Direct estimation: variance L^2 sigma^2 / n, zero bias.
MseBreakdown modelfree_mse(int condition_count, double sigma2, int n);

// Exact OLS decomposition under balanced allocation n/L:
//   variance = sigma^2 * (L/n) * tr(P_Z)   (equals p*L*sigma^2/n)
//   bias_sq  = ||(P_Z - I) mu||^2
// with P_Z the orthogonal projection onto the basis columns in condition
// space. Throws RankError if the level design is rank deficient.
MseBreakdown exact_linear_mse(const ModelSpec& model, const ConditionGrid& grid,
                              const GroundTruth& truth, int n);

// --- Single-factor closed forms, evaluated exactly as printed in the ---
// --- source derivation. Kept verbatim for side-by-side comparison; they --
// --- disagree with the exact engine above, and the verify report records -
// --- the gap instead of silently correcting it. Levels are encoded 1..L. -

// Printed total MSE of the one-factor linear metamodel.
double theorem1_mse_paper(int levels, double sigma2, int n,
                          std::span<const double> level_means);

// The printed variance term of the same total, on its own.
double theorem1_variance_paper(int levels, double sigma2, int n);

// The variance term as printed at the end of the long-form derivation,
// which simplifies to yet another constant.
double longform_variance_paper(int levels, double sigma2, int n);

// Between-group variation: squared weighted sum of centered level means,
// normalized as printed.
double rho_squared(std::span<const double> level_means);

// Printed critical sample size; can come out nonpositive for some L, which
// is reported as-is. +infinity when rho_squared is zero.
double nstar_paper(int levels, double sigma2, std::span<const double> level_means);

// Exact critical sample size where direct estimation overtakes the model:
//   n* = L * sigma^2 * (L - p) / bias_sq
// +infinity when the model is unbiased. Requires p < L.
double nstar_exact(const ModelSpec& model, const ConditionGrid& grid,
                   const GroundTruth& truth);

struct CovCheck {
  double value = 0.0;
  double std_error = 0.0;
  int reps = 0;
};

// Monte-Carlo estimate of Cov(grand sample mean, fitted slope) on a
// one-factor grid; the exact algebra says it is zero.
CovCheck cov_grandmean_beta_check(const ModelSpec& slope_model, const ConditionGrid& grid,
                                  const GroundTruth& truth, int n, int reps,
                                  const SeedSpec& seed);

}  // namespace metaselect
