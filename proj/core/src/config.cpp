#include "metaselect/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "metaselect/analytic.hpp"
#include "metaselect/errors.hpp"

namespace metaselect {

namespace {

using Json = nlohmann::ordered_json;

void reject_unknown_keys(const Json& object, const std::string& section,
                         std::initializer_list<const char*> known) {
  for (const auto& item : object.items()) {
    bool ok = false;
    for (const char* key : known) {
      if (item.key() == key) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ConfigError("unknown key '" + item.key() + "' in " + section);
    }
  }
}

template <typename T>
T get_field(const Json& object, const std::string& section, const char* key, T fallback) {
  if (!object.contains(key)) return fallback;
  try {
    return object.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("field '" + section + "." + key + "' has the wrong type");
  }
}

template <typename T>
T require_field(const Json& object, const std::string& section, const char* key) {
  if (!object.contains(key)) {
    throw ConfigError("missing field '" + section + "." + key + "'");
  }
  try {
    return object.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("field '" + section + "." + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig default_config() {
  RunConfig config;
  config.factors = {{"bup", 5, {}}, {"nal", 5, {}}};
  config.preset = PresetTruthConfig{};
  config.sigma2 = 100.0;
  config.models = builtin_model_names();
  config.n_grid = {100, 200, 300, 400, 500, 1000, 2000, 3000, 4000, 5000, 6000};
  config.reps = 10000;
  config.base_seed = kDefaultBaseSeed;
  config.workers = 0;
  config.common_random_numbers = false;
  config.output_path = "sweep.csv";
  return config;
}

RunConfig parse_config(const std::string& json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) {
    throw ConfigError("config root must be a JSON object");
  }
  reject_unknown_keys(root, "config", {"grid", "truth", "models", "run"});

  RunConfig config;
  config.models.clear();

  const Json grid = root.value("grid", Json::object());
  reject_unknown_keys(grid, "grid", {"factors"});
  if (!grid.contains("factors") || !grid.at("factors").is_array() ||
      grid.at("factors").empty()) {
    throw ConfigError("grid.factors must be a nonempty array");
  }
  for (const Json& item : grid.at("factors")) {
    if (!item.is_object()) {
      throw ConfigError("each grid.factors entry must be an object");
    }
    reject_unknown_keys(item, "grid.factors[]", {"name", "levels", "encoding"});
    FactorConfig factor;
    factor.name = require_field<std::string>(item, "grid.factors[]", "name");
    factor.levels = require_field<int>(item, "grid.factors[]", "levels");
    factor.encoding = get_field<std::vector<double>>(item, "grid.factors[]", "encoding", {});
    config.factors.push_back(std::move(factor));
  }

  if (!root.contains("truth") || !root.at("truth").is_object()) {
    throw ConfigError("config needs a 'truth' section");
  }
  const Json& truth = root.at("truth");
  reject_unknown_keys(truth, "truth", {"sigma2", "means", "preset"});
  config.sigma2 = require_field<double>(truth, "truth", "sigma2");
  if (truth.contains("means") && truth.contains("preset")) {
    throw ConfigError("truth takes either 'means' or 'preset', not both");
  }
  if (truth.contains("means")) {
    config.truth_means = require_field<std::vector<double>>(truth, "truth", "means");
  } else if (truth.contains("preset")) {
    const Json& preset = truth.at("preset");
    if (!preset.is_object()) {
      throw ConfigError("truth.preset must be an object");
    }
    reject_unknown_keys(preset, "truth.preset", {"base", "slope1", "slope2", "curvature"});
    PresetTruthConfig values;
    values.base = get_field<double>(preset, "truth.preset", "base", values.base);
    values.slope1 = get_field<double>(preset, "truth.preset", "slope1", values.slope1);
    values.slope2 = get_field<double>(preset, "truth.preset", "slope2", values.slope2);
    values.curvature = get_field<double>(preset, "truth.preset", "curvature", values.curvature);
    config.preset = values;
  } else {
    throw ConfigError("truth needs 'means' or 'preset'");
  }

  if (!root.contains("models") || !root.at("models").is_array() || root.at("models").empty()) {
    throw ConfigError("config needs a nonempty 'models' array");
  }
  for (const Json& item : root.at("models")) {
    if (!item.is_string()) {
      throw ConfigError("models entries must be strings");
    }
    config.models.push_back(item.get<std::string>());
  }

  if (!root.contains("run") || !root.at("run").is_object()) {
    throw ConfigError("config needs a 'run' section");
  }
  const Json& run = root.at("run");
  reject_unknown_keys(run, "run",
                      {"n_grid", "reps", "base_seed", "workers", "common_random_numbers",
                       "output"});
  config.n_grid = require_field<std::vector<int>>(run, "run", "n_grid");
  config.reps = get_field<int>(run, "run", "reps", config.reps);
  config.base_seed = get_field<std::uint64_t>(run, "run", "base_seed", config.base_seed);
  config.workers = get_field<int>(run, "run", "workers", config.workers);
  config.common_random_numbers =
      get_field<bool>(run, "run", "common_random_numbers", config.common_random_numbers);
  config.output_path = get_field<std::string>(run, "run", "output", config.output_path);
  return config;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const RunConfig& config) {
  Json root = Json::object();

  Json factors = Json::array();
  for (const FactorConfig& factor : config.factors) {
    Json item = Json::object();
    item["name"] = factor.name;
    item["levels"] = factor.levels;
    if (!factor.encoding.empty()) {
      item["encoding"] = factor.encoding;
    }
    factors.push_back(std::move(item));
  }
  root["grid"] = Json::object();
  root["grid"]["factors"] = std::move(factors);

  Json truth = Json::object();
  truth["sigma2"] = config.sigma2;
  if (config.truth_means) {
    truth["means"] = *config.truth_means;
  }
  if (config.preset) {
    Json preset = Json::object();
    preset["base"] = config.preset->base;
    preset["slope1"] = config.preset->slope1;
    preset["slope2"] = config.preset->slope2;
    preset["curvature"] = config.preset->curvature;
    truth["preset"] = std::move(preset);
  }
  root["truth"] = std::move(truth);

  root["models"] = config.models;

  Json run = Json::object();
  run["n_grid"] = config.n_grid;
  run["reps"] = config.reps;
  run["base_seed"] = config.base_seed;
  run["workers"] = config.workers;
  run["common_random_numbers"] = config.common_random_numbers;
  run["output"] = config.output_path;
  root["run"] = std::move(run);

  return root.dump(2) + "\n";
}

BoundProblem bind_config(const RunConfig& config) {
  if (config.factors.empty()) {
    throw ConfigError("grid.factors must be nonempty");
  }
  std::vector<Factor> factors;
  factors.reserve(config.factors.size());
  for (const FactorConfig& declared : config.factors) {
    if (declared.encoding.empty()) {
      factors.push_back(Factor::integer_levels(declared.name, declared.levels));
    } else {
      factors.push_back(Factor{declared.name, declared.levels, declared.encoding});
    }
  }

  BoundProblem problem;
  problem.grid = build_grid(factors);
  const int conditions = problem.grid.condition_count();

  if (!(config.sigma2 > 0.0)) {
    throw ConfigError("truth.sigma2 must be positive");
  }
  if (config.truth_means && config.preset) {
    throw ConfigError("truth takes either 'means' or 'preset', not both");
  }
  if (config.truth_means) {
    if (static_cast<int>(config.truth_means->size()) != conditions) {
      throw ConfigError("truth.means has " + std::to_string(config.truth_means->size()) +
                        " entries for L=" + std::to_string(conditions) + " conditions");
    }
    problem.truth.means = *config.truth_means;
    problem.truth.sigma2 = config.sigma2;
  } else if (config.preset) {
    problem.truth = preset_oud_like(problem.grid, config.preset->base, config.preset->slope1,
                                    config.preset->slope2, config.preset->curvature,
                                    config.sigma2);
  } else {
    throw ConfigError("truth needs 'means' or 'preset'");
  }

  if (config.models.empty()) {
    throw ConfigError("models must be nonempty");
  }
  for (const std::string& name : config.models) {
    ModelSpec spec = builtin_model(name);
    build_level_design(spec, problem.grid);  // binding check against the grid
    problem.models.push_back(std::move(spec));
  }

  if (config.n_grid.empty()) {
    throw ConfigError("run.n_grid must be nonempty");
  }
  for (int n : config.n_grid) {
    allocate_equal(n, problem.grid);
  }
  if (config.reps < 2) {
    throw ConfigError("run.reps must be at least 2");
  }
  if (config.workers < 0) {
    throw ConfigError("run.workers must be nonnegative");
  }
  return problem;
}

}  // namespace metaselect
