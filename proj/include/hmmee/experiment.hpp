#pragma once

#include "hmmee/asymptotics.hpp"
#include "hmmee/estimator.hpp"
#include "hmmee/hypotest.hpp"
#include "hmmee/io.hpp"
#include "hmmee/model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace hmmee {

/// Everything one run of the pipeline needs. Parsed from
///   {"model": {...} | "path.json",
///    "simulation": {"n", "nu", "seed"},
///    "estimator": {"step", "max_iters", "stop_tol", "window", "series_terms",
///                  "record_every", "line_search", "start": {"P", "beta"}},
///    "asymptotics": {"gh_order", "max_lag", "poisson_tail", "n0_max"},
///    "test": {"alpha", "method", "samples", "seed", "max_lag", "bins", "theta1": {...}},
///    "report_iterations": [...]}
struct ExperimentConfig {
  HmmModel model;
  Vector nu;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  EstimatorConfig estimator;
  std::optional<HmmModel> start;
  GammaOptions gamma;
  int n0_max = 10;
  double alpha = 0.95;
  EntropyTestOptions test;
  std::vector<double> bins;           // discretization edges for continuous signals
  std::optional<HmmModel> theta1;     // alternative for the type-II bound
  std::vector<int> report_iterations;
  io::json raw;
};

ExperimentConfig experiment_from_json(const io::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Built-in configuration of the two worked examples (1: Poisson, 2: Gaussian).
io::json example_config(int example);

/// Threads from an explicit value (> 0), else HMM_MEE_THREADS, else 1.
int resolve_threads(int requested);

}  // namespace hmmee
