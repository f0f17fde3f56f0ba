#pragma once

#include <string>
#include <vector>

namespace metaselect {

// One intervention applied at num_levels intensities. Levels carry numeric
// encodings, strictly increasing; the default encoding of level l is the
// integer l (1-based).
struct Factor {
  std::string name;
  int num_levels = 0;
  std::vector<double> encoding;

  // Factor with the default 1..num_levels encoding.
  static Factor integer_levels(std::string name, int num_levels);

  bool has_default_encoding() const;
};

// The full factorial set of treatment conditions: Cartesian product of the
// factor encodings in lexicographic order of level indices, first factor
// slowest. Immutable after construction.
struct ConditionGrid {
  std::vector<Factor> factors;
  std::vector<std::vector<double>> conditions;  // one covariate tuple per condition

  int condition_count() const { return static_cast<int>(conditions.size()); }
};

ConditionGrid build_grid(const std::vector<Factor>& factors);

// Balanced split of the sample budget: exactly n/L samples per condition.
struct Allocation {
  int total = 0;
  std::vector<int> per_condition;
};

// Rejects n not divisible by the condition count; every closed form here
// assumes exact balance.
Allocation allocate_equal(int n, const ConditionGrid& grid);

}  // namespace metaselect
