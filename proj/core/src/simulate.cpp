#include "metaselect/simulate.hpp"

#include <cmath>
#include <string>

#include "metaselect/errors.hpp"

namespace metaselect {

std::vector<double> sample_condition(double mean, double sigma2, int count,
                                     const SeedSpec& seed, int condition_index) {
  if (!(sigma2 > 0.0)) {
    throw ConfigError("sigma2 must be positive, got " + std::to_string(sigma2));
  }
  if (count < 1) {
    throw ConfigError("sample count must be at least 1, got " + std::to_string(count));
  }
  NormalStream stream(stream_seed(seed, static_cast<std::uint64_t>(condition_index)));
  const double sd = std::sqrt(sigma2);
  std::vector<double> draws(count);
  for (double& value : draws) {
    value = stream.next_normal(mean, sd);
  }
  return draws;
}

Dataset generate_dataset(const GroundTruth& truth, const ConditionGrid& grid,
                         const Allocation& allocation, const SeedSpec& seed) {
  const std::size_t conditions = grid.conditions.size();
  if (truth.means.size() != conditions || allocation.per_condition.size() != conditions) {
    throw ConfigError("truth (" + std::to_string(truth.means.size()) + "), allocation (" +
                      std::to_string(allocation.per_condition.size()) + ") and grid (" +
                      std::to_string(conditions) + ") disagree on the condition count");
  }

  Dataset data;
  data.grid = grid;
  data.allocation = allocation;
  data.samples.reserve(conditions);
  for (std::size_t l = 0; l < conditions; ++l) {
    data.samples.push_back(sample_condition(truth.means[l], truth.sigma2,
                                            allocation.per_condition[l], seed,
                                            static_cast<int>(l)));
  }
  return data;
}

}  // namespace metaselect
