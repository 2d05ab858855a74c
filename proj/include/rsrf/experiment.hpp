#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <chrono>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "rsrf/config.hpp"
#include "rsrf/grower.hpp"
#include "rsrf/oracle.hpp"

namespace rsrf {

struct ExperimentRow {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::string splitter;
  int k = 0;
  int n_trees = 0;
  double train_mse = 0.0;
  double test_mse = 0.0;
  long long wall_time_ms = 0;
};

inline constexpr const char* kExperimentCsvHeader =
    "seed,n,splitter,k,n_trees,train_mse,test_mse,wall_time_ms";

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string to_csv(const std::vector<ExperimentRow>& rows) {
  std::string out = kExperimentCsvHeader;
  out += '\n';
  for (const auto& row : rows) {
    out += std::to_string(row.seed);
    out += ',';
    out += std::to_string(row.n);
    out += ',';
    out += row.splitter;
    out += ',';
    out += std::to_string(row.k);
    out += ',';
    out += std::to_string(row.n_trees);
    out += ',';
    out += format_double(row.train_mse);
    out += ',';
    out += format_double(row.test_mse);
    out += ',';
    out += std::to_string(row.wall_time_ms);
    out += '\n';
  }
  return out;
}

/// One experiment cell: sample a training set, fit the forest, score it on the
/// training responses and on noiseless regression values at fresh test points.
inline ExperimentRow run_experiment_cell(const PopulationModel& model,
                                         const SplitterConfig& splitter,
                                         const ExperimentConfig& config,
                                         std::uint64_t seed, std::size_t n,
                                         bool fixed_timing) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentRow row;
  row.seed = seed;
  row.n = n;
  row.splitter = splitter_name(splitter);
  row.k = config.depth_for(n);
  row.n_trees = config.n_trees;

  RandomStream run(seed);
  const Dataset train = model.sample_dataset(n, run.derive(stream_tag::kData).derive(n));

  GrowConfig grow;
  grow.depth = row.k;
  grow.min_samples = config.min_samples;
  grow.splitter = splitter;
  const Forest forest = fit_forest(train, grow, config.n_trees, seed ^ (n * 0x9E37u));

  double train_acc = 0.0;
  for (std::size_t i = 0; i < train.n(); ++i) {
    const double d = forest.predict(train.row(i)) - train.y(i);
    train_acc += d * d;
  }
  row.train_mse = train_acc / static_cast<double>(train.n());

  auto test_stream = run.derive(stream_tag::kTest).derive(n);
  std::vector<double> x(model.dim());
  double test_acc = 0.0;
  for (std::size_t i = 0; i < config.test_size; ++i) {
    for (auto& v : x) v = test_stream.uniform01();
    const double d = forest.predict(x) - model.regression()(x);
    test_acc += d * d;
  }
  row.test_mse = test_acc / static_cast<double>(config.test_size);

  if (!fixed_timing) {
    const auto elapsed = std::chrono::steady_clock::now() - start;
    row.wall_time_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
  }
  return row;
}

/// Runs the seeds x n-schedule grid, optionally on a worker pool. Rows are
/// gathered in schedule order, so the output bytes do not depend on the
/// number of jobs.
inline std::vector<ExperimentRow> run_experiment(const PopulationModel& model,
                                                 const SplitterConfig& splitter,
                                                 const ExperimentConfig& config,
                                                 int jobs = 1,
                                                 bool fixed_timing = false) {
  struct Task {
    std::uint64_t seed;
    std::size_t n;
  };
  std::vector<Task> tasks;
  for (std::uint64_t seed : config.seeds)
    for (std::size_t n : config.n_schedule) tasks.push_back({seed, n});
  std::vector<ExperimentRow> rows(tasks.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      rows[i] = run_experiment_cell(model, splitter, config, tasks[i].seed,
                                    tasks[i].n, fixed_timing);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        rows[i] = run_experiment_cell(model, splitter, config, tasks[i].seed,
                                      tasks[i].n, fixed_timing);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return rows;
}

}  // namespace rsrf
