#include "hmmee/experiment.hpp"

#include "hmmee/errors.hpp"

#include <cstdlib>

namespace hmmee {

namespace {

const io::json& section(const io::json& j, const char* key) {
  static const io::json empty = io::json::object();
  return j.contains(key) ? j.at(key) : empty;
}

}  // namespace

ExperimentConfig experiment_from_json(const io::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  if (!j.contains("model")) throw UsageError("config: missing key 'model'");
  ExperimentConfig cfg;
  cfg.raw = j;
  try {
    const io::json& jm = j.at("model");
    cfg.model = jm.is_string() ? io::model_from_json(io::read_json(base_dir / jm.get<std::string>()))
                               : io::model_from_json(jm);
    const int m = cfg.model.num_states();

    const io::json& sim = section(j, "simulation");
    cfg.n = sim.value("n", std::int64_t{0});
    cfg.seed = sim.value("seed", std::uint64_t{0});
    cfg.nu = sim.contains("nu") ? io::vector_from_json(sim.at("nu")) : Vector::Constant(m, 1.0 / m);

    const io::json& est = section(j, "estimator");
    EstimatorConfig& e = cfg.estimator;
    e.step = est.value("step", e.step);
    e.max_iters = est.value("max_iters", e.max_iters);
    e.stop_tol = est.value("stop_tol", e.stop_tol);
    e.window = est.value("window", e.window);
    e.series_terms = est.value("series_terms", e.series_terms);
    e.record_every = est.value("record_every", e.record_every);
    e.line_search = est.value("line_search", e.line_search);
    if (est.contains("start")) cfg.start = io::start_from_json(est.at("start"), cfg.model);

    const io::json& as = section(j, "asymptotics");
    cfg.gamma.quadrature.gh_order = as.value("gh_order", cfg.gamma.quadrature.gh_order);
    cfg.gamma.quadrature.poisson_tail = as.value("poisson_tail", cfg.gamma.quadrature.poisson_tail);
    cfg.gamma.quadrature.series_terms = e.series_terms;
    cfg.gamma.max_lag = as.value("max_lag", cfg.gamma.max_lag);
    cfg.n0_max = as.value("n0_max", cfg.n0_max);

    const io::json& t = section(j, "test");
    cfg.alpha = t.value("alpha", cfg.alpha);
    cfg.test.method = quantile_method_from_string(t.value("method", std::string("sampled")));
    cfg.test.samples = t.value("samples", cfg.test.samples);
    cfg.test.seed = t.value("seed", cfg.test.seed);
    cfg.test.max_lag = t.value("max_lag", cfg.test.max_lag);
    if (t.contains("bins")) cfg.bins = t.at("bins").get<std::vector<double>>();
    if (t.contains("theta1")) cfg.theta1 = io::start_from_json(t.at("theta1"), cfg.model);

    if (j.contains("report_iterations")) cfg.report_iterations = j.at("report_iterations").get<std::vector<int>>();
  } catch (const io::json::exception& ex) {
    throw UsageError(std::string("config: ") + ex.what());
  }
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  return experiment_from_json(io::read_json(path), path.parent_path());
}

io::json example_config(int example) {
  if (example == 1) {
    return io::json::parse(R"({
      "model": {"family": {"kind": "poisson"},
                "P": [[0.3, 0.7], [0.6, 0.4]], "beta": [2.5, 0.5],
                "domain": {"beta_lo": [0.01], "beta_hi": [50.0], "order": "descending"}},
      "simulation": {"n": 100000, "nu": [0.5, 0.5], "seed": 20240601},
      "estimator": {"step": 0.001, "max_iters": 10000, "stop_tol": 1e-8, "series_terms": 30,
                    "record_every": 50,
                    "start": {"P": [[0.5, 0.5], [0.5, 0.5]], "beta": [3.0, 0.1]}},
      "asymptotics": {"max_lag": 200, "n0_max": 10},
      "test": {"alpha": 0.95, "method": "sampled", "samples": 100000, "seed": 7,
               "theta1": {"P": [[0.3, 0.7], [0.6, 0.4]], "beta": [2.0, 0.5]}},
      "report_iterations": [5000, 10000]
    })");
  }
  if (example == 2) {
    return io::json::parse(R"({
      "model": {"family": {"kind": "gaussian_known_var", "sigma2": 1.0},
                "P": [[0.2, 0.8], [0.7, 0.3]], "beta": [0.0, 3.0],
                "domain": {"beta_lo": [-20.0], "beta_hi": [20.0], "order": "ascending"}},
      "simulation": {"n": 5000, "nu": [0.5, 0.5], "seed": 20240602},
      "estimator": {"step": 0.1, "max_iters": 200, "stop_tol": 1e-8, "series_terms": 30,
                    "record_every": 10,
                    "start": {"P": [[0.5, 0.5], [0.5, 0.5]], "beta": [0.0, 1.0]}},
      "asymptotics": {"gh_order": 40, "max_lag": 200, "n0_max": 10},
      "test": {"alpha": 0.95, "method": "sampled", "samples": 100000, "seed": 7,
               "bins": [-1.0, 0.0, 1.0, 2.0, 3.0, 4.0]},
      "report_iterations": [100, 200]
    })");
  }
  throw UsageError("unknown example " + std::to_string(example) + " (expected 1 or 2)");
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HMM_MEE_THREADS")) {
    try {
      const int t = std::stoi(env);
      if (t > 0) return t;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("HMM_MEE_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

}  // namespace hmmee
