#include "metaselect/design.hpp"

#include <numeric>

#include "metaselect/errors.hpp"

namespace metaselect {

namespace {

void validate_factor(const Factor& factor) {
  if (factor.num_levels < 2) {
    throw ConfigError("factor '" + factor.name + "' needs at least 2 levels, got " +
                      std::to_string(factor.num_levels));
  }
  if (static_cast<int>(factor.encoding.size()) != factor.num_levels) {
    throw ConfigError("factor '" + factor.name + "' has " +
                      std::to_string(factor.encoding.size()) + " encoding values for " +
                      std::to_string(factor.num_levels) + " levels");
  }
  for (std::size_t i = 1; i < factor.encoding.size(); ++i) {
    if (!(factor.encoding[i - 1] < factor.encoding[i])) {
      throw ConfigError("factor '" + factor.name + "' encoding must be strictly increasing");
    }
  }
}

}  // namespace

Factor Factor::integer_levels(std::string name, int num_levels) {
  Factor factor;
  factor.name = std::move(name);
  factor.num_levels = num_levels;
  factor.encoding.reserve(num_levels > 0 ? num_levels : 0);
  for (int level = 1; level <= num_levels; ++level) {
    factor.encoding.push_back(static_cast<double>(level));
  }
  return factor;
}

bool Factor::has_default_encoding() const {
  for (int level = 0; level < num_levels; ++level) {
    if (encoding[level] != static_cast<double>(level + 1)) return false;
  }
  return true;
}

ConditionGrid build_grid(const std::vector<Factor>& factors) {
  if (factors.empty()) {
    throw ConfigError("grid needs at least one factor");
  }
  long long total = 1;
  for (const Factor& factor : factors) {
    validate_factor(factor);
    total *= factor.num_levels;
  }

  ConditionGrid grid;
  grid.factors = factors;
  grid.conditions.reserve(static_cast<std::size_t>(total));

  // Odometer over level indices, last factor fastest.
  std::vector<int> index(factors.size(), 0);
  for (long long k = 0; k < total; ++k) {
    std::vector<double> tuple(factors.size());
    for (std::size_t j = 0; j < factors.size(); ++j) {
      tuple[j] = factors[j].encoding[index[j]];
    }
    grid.conditions.push_back(std::move(tuple));
    for (int j = static_cast<int>(factors.size()) - 1; j >= 0; --j) {
      if (++index[j] < factors[j].num_levels) break;
      index[j] = 0;
    }
  }
  return grid;
}

Allocation allocate_equal(int n, const ConditionGrid& grid) {
  if (n <= 0) {
    throw ConfigError("sample budget must be positive, got " + std::to_string(n));
  }
  const int conditions = grid.condition_count();
  if (n % conditions != 0) {
    throw ConfigError("n must be divisible by L: n=" + std::to_string(n) +
                      ", L=" + std::to_string(conditions));
  }
  Allocation allocation;
  allocation.total = n;
  allocation.per_condition.assign(conditions, n / conditions);
  return allocation;
}

}  // namespace metaselect
