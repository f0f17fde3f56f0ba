#include "metaselect/harness.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "metaselect/errors.hpp"
#include "metaselect/simulate.hpp"

namespace metaselect {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kPivotThreshold = 1e-10;

// Replications are accumulated in fixed-size chunks and the chunk partials
// reduced in index order, so the estimate is bit-identical for any worker
// count.
constexpr int kRepChunk = 512;

struct BoundModel {
  bool saturated = false;
  int p = 0;
  Eigen::MatrixXd z;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
};

BoundModel bind_model(const ModelSpec& model, const ConditionGrid& grid) {
  BoundModel bound;
  bound.saturated = model.saturated;
  bound.p = model.feature_count(grid.condition_count());
  if (!model.saturated) {
    const LevelDesign design = build_level_design(model, grid);
    bound.z = Eigen::Map<const RowMatrix>(design.values.data(), design.rows, design.cols);
    bound.qr.setThreshold(kPivotThreshold);
    bound.qr.compute(bound.z);
    if (bound.qr.rank() < design.cols) {
      throw RankError("design for model '" + model.name + "' is rank deficient (rank " +
                      std::to_string(bound.qr.rank()) + " < p=" + std::to_string(design.cols) +
                      ")");
    }
  } else {
    build_level_design(model, grid);  // keeps the validation path uniform
  }
  return bound;
}

// One replication: draw the batch, fit, score. Pure function of the seed.
double replicate_loss(const BoundModel& model, const GroundTruth& truth, int per_condition,
                      const SeedSpec& seed, Eigen::VectorXd& means_scratch) {
  const int conditions = static_cast<int>(truth.means.size());
  const double sd = std::sqrt(truth.sigma2);
  for (int l = 0; l < conditions; ++l) {
    NormalStream stream(stream_seed(seed, static_cast<std::uint64_t>(l)));
    double sum = 0.0;
    for (int i = 0; i < per_condition; ++i) {
      sum += stream.next_normal(truth.means[l], sd);
    }
    means_scratch[l] = sum / static_cast<double>(per_condition);
  }

  double loss = 0.0;
  if (model.saturated) {
    for (int l = 0; l < conditions; ++l) {
      const double diff = means_scratch[l] - truth.means[l];
      loss += diff * diff;
    }
  } else {
    const Eigen::VectorXd beta = model.qr.solve(means_scratch);
    const Eigen::VectorXd predicted = model.z * beta;
    for (int l = 0; l < conditions; ++l) {
      const double diff = predicted[l] - truth.means[l];
      loss += diff * diff;
    }
  }
  return loss;
}

struct ChunkPartial {
  double sum = 0.0;
  double sum_sq = 0.0;
};

ChunkPartial accumulate_chunk(const BoundModel& model, const GroundTruth& truth,
                              int per_condition, std::uint64_t rep_base_seed,
                              std::uint64_t rep_offset, int rep_begin, int rep_end,
                              Eigen::VectorXd& means_scratch) {
  ChunkPartial partial;
  for (int r = rep_begin; r < rep_end; ++r) {
    const SeedSpec seed{rep_base_seed, rep_offset + static_cast<std::uint64_t>(r)};
    double loss;
    try {
      loss = replicate_loss(model, truth, per_condition, seed, means_scratch);
    } catch (const std::exception& e) {
      throw FitError(std::string(e.what()) + " (replication " + std::to_string(r) + ")");
    }
    partial.sum += loss;
    partial.sum_sq += loss * loss;
  }
  return partial;
}

McEstimate reduce_chunks(const std::vector<ChunkPartial>& partials, int reps) {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const ChunkPartial& partial : partials) {
    sum += partial.sum;
    sum_sq += partial.sum_sq;
  }
  McEstimate estimate;
  estimate.reps = reps;
  estimate.mean = sum / reps;
  const double variance =
      (sum_sq - static_cast<double>(reps) * estimate.mean * estimate.mean) / (reps - 1);
  estimate.std_error = std::sqrt(std::max(variance, 0.0) / reps);
  return estimate;
}

int chunk_count(int reps) { return (reps + kRepChunk - 1) / kRepChunk; }

// Smaller p wins ties, then name order.
template <typename Value>
int argmin_model(const std::vector<Value>& values, const std::vector<int>& p,
                 const std::vector<std::string>& names) {
  int best = 0;
  for (int m = 1; m < static_cast<int>(values.size()); ++m) {
    if (values[m] < values[best] ||
        (values[m] == values[best] &&
         (p[m] < p[best] || (p[m] == p[best] && names[m] < names[best])))) {
      best = m;
    }
  }
  return best;
}

}  // namespace

McEstimate mc_mse(const ModelSpec& model, const ConditionGrid& grid, const GroundTruth& truth,
                  int n, int reps, const SeedSpec& seed) {
  if (reps < 2) {
    throw ConfigError("Monte-Carlo estimation needs reps >= 2, got " + std::to_string(reps));
  }
  const Allocation allocation = allocate_equal(n, grid);
  if (truth.means.size() != static_cast<std::size_t>(grid.condition_count())) {
    throw ConfigError("truth and grid disagree on the condition count");
  }
  const BoundModel bound = bind_model(model, grid);
  if (n < bound.p) {
    throw FitError("insufficient samples for model '" + model.name + "': n=" +
                   std::to_string(n) + " < p=" + std::to_string(bound.p));
  }

  Eigen::VectorXd scratch(grid.condition_count());
  std::vector<ChunkPartial> partials(chunk_count(reps));
  for (int c = 0; c < static_cast<int>(partials.size()); ++c) {
    const int begin = c * kRepChunk;
    const int end = std::min(reps, begin + kRepChunk);
    partials[c] = accumulate_chunk(bound, truth, allocation.per_condition[0], seed.base_seed,
                                   seed.replication_index, begin, end, scratch);
  }
  return reduce_chunks(partials, reps);
}

SweepReport run_sweep(const std::vector<ModelSpec>& models, const ConditionGrid& grid,
                      const GroundTruth& truth, std::vector<int> n_grid,
                      const SweepOptions& options) {
  if (models.empty()) {
    throw ConfigError("sweep needs at least one model");
  }
  if (n_grid.empty()) {
    throw ConfigError("sweep needs a nonempty n grid");
  }
  if (options.reps < 2) {
    throw ConfigError("sweep needs reps >= 2, got " + std::to_string(options.reps));
  }
  std::sort(n_grid.begin(), n_grid.end());
  n_grid.erase(std::unique(n_grid.begin(), n_grid.end()), n_grid.end());

  const int conditions = grid.condition_count();
  SweepReport report;
  report.n_grid = n_grid;
  for (const ModelSpec& model : models) {
    report.models.push_back(model.name);
    report.model_p.push_back(model.feature_count(conditions));
  }

  std::vector<BoundModel> bound;
  bound.reserve(models.size());
  for (const ModelSpec& model : models) {
    bound.push_back(bind_model(model, grid));
  }

  const int n_count = static_cast<int>(n_grid.size());
  const int model_count = static_cast<int>(models.size());
  report.cells.assign(n_count, std::vector<SweepCell>(model_count));

  // Analytic cells and per-cell replication seeds.
  struct CellJob {
    int n_index = 0;
    int model_index = 0;
    int per_condition = 0;
    std::uint64_t rep_base = 0;
    std::vector<ChunkPartial> partials;
  };
  std::vector<CellJob> jobs;
  jobs.reserve(static_cast<std::size_t>(n_count) * model_count);
  for (int ni = 0; ni < n_count; ++ni) {
    const int n = n_grid[ni];
    for (int mi = 0; mi < model_count; ++mi) {
      try {
        const Allocation allocation = allocate_equal(n, grid);
        if (n < bound[mi].p) {
          throw FitError("insufficient samples: n=" + std::to_string(n) +
                         " < p=" + std::to_string(bound[mi].p));
        }
        report.cells[ni][mi].analytic = exact_linear_mse(models[mi], grid, truth, n);
        CellJob job;
        job.n_index = ni;
        job.model_index = mi;
        job.per_condition = allocation.per_condition[0];
        std::uint64_t key = options.base_seed;
        if (!options.common_random_numbers) {
          key = fold_seed(key, static_cast<std::uint64_t>(mi));
        }
        job.rep_base = fold_seed(key, static_cast<std::uint64_t>(n));
        job.partials.resize(chunk_count(options.reps));
        jobs.push_back(std::move(job));
      } catch (const std::exception& e) {
        throw ConfigError(std::string(e.what()) + " (n=" + std::to_string(n) + ", model=" +
                          models[mi].name + ")");
      }
    }
  }

  // Monte-Carlo cells: (job, chunk) tasks over a worker pool. Each task
  // writes one preassigned slot, so scheduling never affects the result.
  const int chunks_per_job = chunk_count(options.reps);
  const std::size_t task_count = jobs.size() * static_cast<std::size_t>(chunks_per_job);
  int workers = options.workers > 0
                    ? options.workers
                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = static_cast<int>(
      std::min(static_cast<std::size_t>(std::max(workers, 1)), task_count));

  std::atomic<std::size_t> next_task{0};
  std::atomic<bool> failed{false};
  std::mutex failure_mutex;
  std::exception_ptr failure;

  auto work = [&]() {
    Eigen::VectorXd scratch(conditions);
    for (;;) {
      const std::size_t t = next_task.fetch_add(1);
      if (t >= task_count || failed.load()) break;
      CellJob& job = jobs[t / chunks_per_job];
      const int chunk = static_cast<int>(t % chunks_per_job);
      const int begin = chunk * kRepChunk;
      const int end = std::min(options.reps, begin + kRepChunk);
      try {
        job.partials[chunk] = accumulate_chunk(bound[job.model_index], truth,
                                               job.per_condition, job.rep_base, 0, begin, end,
                                               scratch);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        failed.store(true);
        break;
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& thread : pool) thread.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (CellJob& job : jobs) {
    report.cells[job.n_index][job.model_index].mc = reduce_chunks(job.partials, options.reps);
  }

  // Best-model rows.
  report.best_analytic.resize(n_count);
  report.best_mc.resize(n_count);
  for (int ni = 0; ni < n_count; ++ni) {
    std::vector<double> analytic(model_count);
    std::vector<double> mc(model_count);
    for (int mi = 0; mi < model_count; ++mi) {
      analytic[mi] = report.cells[ni][mi].analytic.total;
      mc[mi] = report.cells[ni][mi].mc.mean;
    }
    report.best_analytic[ni] = report.models[argmin_model(analytic, report.model_p, report.models)];
    report.best_mc[ni] = report.models[argmin_model(mc, report.model_p, report.models)];
  }

  // Crossovers of each metamodel against direct estimation.
  const bool has_direct =
      std::find(report.models.begin(), report.models.end(), "direct") != report.models.end();
  if (has_direct) {
    for (int mi = 0; mi < model_count; ++mi) {
      if (report.model_p[mi] >= conditions) continue;
      CrossoverScan scan;
      scan.nstar = nstar_exact(models[mi], grid, truth);
      scan.mc_bracket = detect_crossover(report, report.models[mi], "direct");
      report.crossover_vs_direct.emplace(report.models[mi], scan);
    }
  }
  return report;
}

std::optional<std::pair<int, int>> detect_crossover(const SweepReport& report,
                                                    const std::string& model_a,
                                                    const std::string& model_b) {
  const auto find_model = [&](const std::string& name) {
    const auto it = std::find(report.models.begin(), report.models.end(), name);
    if (it == report.models.end()) {
      throw ConfigError("model '" + name + "' is not part of the sweep");
    }
    return static_cast<int>(it - report.models.begin());
  };
  const int a = find_model(model_a);
  const int b = find_model(model_b);

  const auto gap_ok = [&](int ni) {
    const McEstimate& ea = report.cells[ni][a].mc;
    const McEstimate& eb = report.cells[ni][b].mc;
    const double combined = std::sqrt(ea.std_error * ea.std_error +
                                      eb.std_error * eb.std_error);
    return std::abs(ea.mean - eb.mean) > 2.0 * combined;
  };

  for (int ni = 0; ni + 1 < static_cast<int>(report.n_grid.size()); ++ni) {
    const double d0 = report.cells[ni][a].mc.mean - report.cells[ni][b].mc.mean;
    const double d1 = report.cells[ni + 1][a].mc.mean - report.cells[ni + 1][b].mc.mean;
    if (d0 * d1 < 0.0 && gap_ok(ni) && gap_ok(ni + 1)) {
      return std::make_pair(report.n_grid[ni], report.n_grid[ni + 1]);
    }
  }
  return std::nullopt;
}

}  // namespace metaselect
