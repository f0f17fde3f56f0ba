#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metaselect/design.hpp"
#include "metaselect/fit.hpp"
#include "metaselect/rng.hpp"
#include "metaselect/truth.hpp"

namespace metaselect {

struct FactorConfig {
  std::string name;
  int levels = 0;
  std::vector<double> encoding;  // empty = default 1..levels

  friend bool operator==(const FactorConfig&, const FactorConfig&) = default;
};

struct PresetTruthConfig {
  double base = 2400.0;
  double slope1 = -12.0;
  double slope2 = -4.0;
  double curvature = 0.5;

  friend bool operator==(const PresetTruthConfig&, const PresetTruthConfig&) = default;
};

// Everything one run needs, as declared in the JSON config. Sections:
// grid / truth / models / run.
struct RunConfig {
  std::vector<FactorConfig> factors;
  std::optional<std::vector<double>> truth_means;    // explicit means, or
  std::optional<PresetTruthConfig> preset;           // the preset surface
  double sigma2 = 100.0;
  std::vector<std::string> models;
  std::vector<int> n_grid;
  int reps = 10000;
  std::uint64_t base_seed = kDefaultBaseSeed;
  int workers = 0;
  bool common_random_numbers = false;
  std::string output_path = "sweep.csv";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// The two-intervention 5x5 setup with the preset truth and the
// 100..6000 sample-size grid.
RunConfig default_config();

RunConfig parse_config(const std::string& json_text);
RunConfig load_config_file(const std::string& path);
std::string serialize_config(const RunConfig& config);

// Validated, materialized problem. Throws ConfigError naming the offending
// field before any computation starts.
struct BoundProblem {
  ConditionGrid grid;
  GroundTruth truth;
  std::vector<ModelSpec> models;
};

BoundProblem bind_config(const RunConfig& config);

}  // namespace metaselect
