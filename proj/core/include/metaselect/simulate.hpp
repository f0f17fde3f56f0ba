#pragma once

#include <vector>

#include "metaselect/design.hpp"
#include "metaselect/rng.hpp"
#include "metaselect/truth.hpp"

namespace metaselect {

// One simulation batch: per-condition outcome samples under a balanced
// allocation. Stand-in for a batch of costly simulator runs.
struct Dataset {
  ConditionGrid grid;
  Allocation allocation;
  std::vector<std::vector<double>> samples;  // samples[l].size() == allocation.per_condition[l]

  int total_samples() const { return allocation.total; }
};

// count iid draws from Normal(mean, sigma2) on the (seed, condition) stream.
// Identical output for identical arguments regardless of thread count or
// call order.
std::vector<double> sample_condition(double mean, double sigma2, int count,
                                     const SeedSpec& seed, int condition_index);

// Draws allocation.per_condition[l] samples per condition l from
// Normal(means[l], sigma2).
Dataset generate_dataset(const GroundTruth& truth, const ConditionGrid& grid,
                         const Allocation& allocation, const SeedSpec& seed);

}  // namespace metaselect
