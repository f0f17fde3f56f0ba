#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "metaselect/analytic.hpp"

namespace metaselect {

// Monte-Carlo estimate of an expected squared loss.
struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sd of per-replication losses / sqrt(reps)
  int reps = 0;
};

struct SweepCell {
  MseBreakdown analytic;
  McEstimate mc;
};

struct CrossoverScan {
  double nstar = 0.0;                             // exact crossover vs direct
  std::optional<std::pair<int, int>> mc_bracket;  // adjacent grid pair, if detected
};

// The (n-grid x model) matrix of analytic and empirical MSEs with best-model
// and crossover annotations.
struct SweepReport {
  std::vector<int> n_grid;
  std::vector<std::string> models;
  std::vector<int> model_p;
  std::vector<std::vector<SweepCell>> cells;  // [n index][model index]
  std::vector<std::string> best_analytic;    // per n; ties: smaller p, then name
  std::vector<std::string> best_mc;          // per n, from MC means
  std::map<std::string, CrossoverScan> crossover_vs_direct;
};

struct SweepOptions {
  int reps = 10000;
  std::uint64_t base_seed = kDefaultBaseSeed;
  int workers = 0;  // 0 = hardware concurrency; never changes output bytes
  bool common_random_numbers = false;
};

// Mean of empirical_sq_loss over reps independently seeded replications.
// Deterministic given the seed.
McEstimate mc_mse(const ModelSpec& model, const ConditionGrid& grid, const GroundTruth& truth,
                  int n, int reps, const SeedSpec& seed);

// Populates every (n, model) cell, analytic and Monte-Carlo, plus best-model
// rows and crossovers against direct. Cell randomness is keyed by
// (base_seed, model index, n, replication); with common_random_numbers the
// model index is dropped so all models see the same datasets.
SweepReport run_sweep(const std::vector<ModelSpec>& models, const ConditionGrid& grid,
                      const GroundTruth& truth, std::vector<int> n_grid,
                      const SweepOptions& options);

// First adjacent grid pair where the sign of (mc_a - mc_b) flips and both
// endpoint gaps exceed twice the combined standard error.
std::optional<std::pair<int, int>> detect_crossover(const SweepReport& report,
                                                    const std::string& model_a,
                                                    const std::string& model_b);

}  // namespace metaselect
