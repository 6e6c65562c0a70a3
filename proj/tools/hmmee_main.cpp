// hmmee: simulate, estimate, analyse and test hidden Markov models with the
// two-dimensional maximum entropy estimator.

#include "hmmee/asymptotics.hpp"
#include "hmmee/errors.hpp"
#include "hmmee/estimator.hpp"
#include "hmmee/experiment.hpp"
#include "hmmee/hypotest.hpp"
#include "hmmee/io.hpp"
#include "hmmee/markov.hpp"
#include "hmmee/simulate.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using hmmee::io::json;

namespace {

constexpr const char* kVersion = "1.0.0";

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

struct Common {
  std::string config;
  std::string data;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::optional<double> alpha;
  std::string quantile_method;
  int example = 0;
};

hmmee::ExperimentConfig load(const Common& c) {
  if (c.config.empty()) throw hmmee::UsageError("--config is required");
  auto cfg = hmmee::load_experiment(c.config);
  if (c.seed) cfg.seed = *c.seed;
  cfg.estimator.threads = hmmee::resolve_threads(c.threads);
  return cfg;
}

json metadata(const std::string& command, const hmmee::ExperimentConfig& cfg) {
  return {{"command", command},
          {"version", kVersion},
          {"rng", {{"name", "xoshiro256**"}, {"version", hmmee::Rng::kVersion}}},
          {"seed", cfg.seed},
          {"threads", cfg.estimator.threads},
          {"model_hash", hmmee::io::model_hash(cfg.model)},
          {"config", cfg.raw}};
}

hmmee::PairEmpirical as_pairs(const hmmee::HmmModel& model, std::vector<double> y) {
  return model.family.discrete() ? hmmee::pair_counts(y) : hmmee::pair_stream(std::move(y));
}

hmmee::Trajectory simulate_from(const hmmee::ExperimentConfig& cfg) {
  if (cfg.n < 1) throw hmmee::UsageError("simulation.n must be at least 1");
  if (const auto v = hmmee::validate(cfg.model); !v.empty()) throw hmmee::InputError("model: " + v.front().message);
  return hmmee::simulate({cfg.model, cfg.nu, cfg.n, cfg.seed});
}

hmmee::EstimationTrace estimate_from(const hmmee::ExperimentConfig& cfg, std::vector<double> y) {
  if (!cfg.start) throw hmmee::UsageError("estimator.start is required");
  return hmmee::run_2re(as_pairs(cfg.model, std::move(y)), *cfg.start, cfg.estimator);
}

void write_table(const fs::path& path, const hmmee::EstimationTrace& tr, const std::vector<int>& ks,
                 const hmmee::HmmModel& shape) {
  std::ofstream out(path);
  if (!out) throw hmmee::InputError("cannot write " + path.string());
  const int m = shape.num_states();
  out << std::setprecision(17) << "k";
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) out << ",p" << i + 1 << j + 1;
  for (int i = 0; i < m; ++i)
    for (int d = 0; d < shape.family.beta_dim(); ++d) out << ",beta" << i + 1 << (shape.family.beta_dim() > 1 ? "_" + std::to_string(d + 1) : "");
  out << ",objective\n";
  for (int k : ks) {
    // The row for k is the last recorded iterate at or before k.
    const hmmee::TraceRecord* rec = nullptr;
    for (const auto& r : tr.iterates)
      if (r.k <= k) rec = &r;
    if (!rec) continue;
    const hmmee::HmmModel mk = hmmee::theta_unpack(rec->theta, tr.model_hat);
    out << k;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) out << ',' << mk.P(i, j);
    for (const auto& b : mk.betas)
      for (Eigen::Index d = 0; d < b.size(); ++d) out << ',' << b[d];
    out << ',' << rec->objective << '\n';
  }
}

json asymptotics_json(const hmmee::ExperimentConfig& cfg) {
  return hmmee::io::to_json(hmmee::asymptotics_report(cfg.model, cfg.gamma, cfg.n0_max));
}

json test_json(const hmmee::ExperimentConfig& cfg, const std::vector<double>& y) {
  hmmee::HmmModel model0 = cfg.model;
  std::vector<double> symbols = y;
  if (!cfg.model.family.discrete()) {
    if (cfg.bins.empty()) throw hmmee::UsageError("test.bins is required for continuous signals");
    model0 = hmmee::discretize(cfg.model, cfg.bins);
    symbols = hmmee::discretize_signals(y, cfg.bins);
  }
  const auto data = hmmee::pair_counts(symbols);
  const auto spec = hmmee::zeta_covariance(model0, cfg.test.max_lag);
  const double c_alpha = hmmee::critical_value(spec, cfg.alpha, cfg.test);
  auto rep = hmmee::entropy_test(data, spec, cfg.alpha, c_alpha, cfg.test.method);
  if (cfg.theta1) {
    hmmee::HmmModel m1 = *cfg.theta1;
    if (!cfg.model.family.discrete()) m1 = hmmee::discretize(m1, cfg.bins);
    if (const auto cert = hmmee::doeblin_search(m1.P, cfg.n0_max)) {
      rep.type2 = hmmee::type2_bound(model0, m1, data.n(), c_alpha, *cert, 20, cfg.test.seed);
    }
  }
  json j = hmmee::io::to_json(rep);
  j["limit_law"] = {{"cells", spec.cells.size()},
                    {"symbols", spec.symbols.size()},
                    {"lambda_max", spec.lambda_max},
                    {"trace", spec.trace},
                    {"lags_used", spec.lags_used},
                    {"warnings", spec.warnings}};
  return j;
}

int run_simulate(const Common& c) {
  const auto cfg = load(c);
  const auto tr = simulate_from(cfg);
  const fs::path out = c.out;
  hmmee::io::write_series_csv(out / "data.csv", tr);
  json meta = metadata("simulate", cfg);
  meta["n"] = cfg.n;
  meta["observations"] = tr.signals.size();
  hmmee::io::write_json(out / "simulate.json", meta);
  std::cout << "wrote " << tr.signals.size() << " observations to " << (out / "data.csv").string() << '\n';
  return kOk;
}

int run_estimate(const Common& c) {
  const auto cfg = load(c);
  if (c.data.empty()) throw hmmee::UsageError("--data is required");
  auto series = hmmee::io::read_series_csv(c.data);
  const auto tr = estimate_from(cfg, std::move(series.y));
  const fs::path out = c.out;
  json j = hmmee::io::to_json(tr, false);
  j["metadata"] = metadata("estimate", cfg);
  j["metadata"]["data"] = c.data;
  hmmee::io::write_json(out / "result.json", j);
  hmmee::io::write_trace_csv(out / "trace.csv", tr);
  std::cout << "theta_hat = " << tr.theta_hat.transpose() << "\nstop: " << hmmee::to_string(tr.stop_reason)
            << " after " << tr.iterations << " iterations\n";
  return tr.stop_reason == hmmee::StopReason::non_finite ? kNumerical : kOk;
}

int run_asymptotics(const Common& c) {
  const auto cfg = load(c);
  json j = asymptotics_json(cfg);
  j["metadata"] = metadata("asymptotics", cfg);
  hmmee::io::write_json(fs::path(c.out) / "asymptotics.json", j);
  std::cout << "I2 = " << j["I2"].dump() << '\n';
  return kOk;
}

int run_test(const Common& c) {
  auto cfg = load(c);
  if (c.alpha) cfg.alpha = *c.alpha;
  if (!c.quantile_method.empty()) cfg.test.method = hmmee::quantile_method_from_string(c.quantile_method);
  if (c.data.empty()) throw hmmee::UsageError("--data is required");
  const auto series = hmmee::io::read_series_csv(c.data);
  json j = test_json(cfg, series.y);
  j["metadata"] = metadata("test", cfg);
  j["metadata"]["data"] = c.data;
  hmmee::io::write_json(fs::path(c.out) / "test.json", j);
  std::cout << "decision: " << j["decision"].get<std::string>() << " (n·H = " << j["statistic"].get<double>()
            << ", c_alpha = " << j["critical_value"].get<double>() << ")\n";
  return kOk;
}

int run_example(const Common& c) {
  json raw = hmmee::example_config(c.example);
  auto cfg = c.config.empty() ? hmmee::experiment_from_json(raw) : hmmee::load_experiment(c.config);
  if (c.seed) cfg.seed = *c.seed;
  cfg.estimator.threads = hmmee::resolve_threads(c.threads);
  const fs::path out = c.out;
  fs::create_directories(out);
  const auto traj = simulate_from(cfg);
  hmmee::io::write_series_csv(out / "data.csv", traj);
  const auto tr = estimate_from(cfg, traj.signals);
  hmmee::io::write_trace_csv(out / "trace.csv", tr);
  write_table(out / "table.csv", tr, cfg.report_iterations, cfg.model);
  json est = hmmee::io::to_json(tr, false);
  json report = {{"metadata", metadata("example", cfg)},
                 {"example", c.example},
                 {"theta0", hmmee::io::to_json(hmmee::theta_pack(cfg.model))},
                 {"estimate", est},
                 {"asymptotics", asymptotics_json(cfg)}};
  hmmee::io::write_json(out / "report.json", report);
  std::ifstream table(out / "table.csv");
  std::cout << table.rdbuf();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximum entropy estimation and testing for hidden Markov models"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Common c;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", c.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", c.seed, "Override the master seed");
    sub->add_option("--threads", c.threads, "Worker threads (default: HMM_MEE_THREADS or 1)")->check(CLI::PositiveNumber);
  };

  auto* sim = app.add_subcommand("simulate", "Simulate a trajectory from the configured model");
  sim->add_option("--config", c.config, "Experiment config JSON")->required();
  add_common(sim);

  auto* est = app.add_subcommand("estimate", "Run the 2RE gradient descent on a data file");
  est->add_option("--config", c.config, "Experiment config JSON")->required();
  est->add_option("--data", c.data, "Signal CSV ('y' or 'y,x' header)")->required();
  add_common(est);

  auto* asy = app.add_subcommand("asymptotics", "Fisher information, Γ, sandwich and bound matrices");
  asy->add_option("--config", c.config, "Experiment config JSON")->required();
  add_common(asy);

  auto* tst = app.add_subcommand("test", "Relative-entropy goodness-of-fit test");
  tst->add_option("--config", c.config, "Experiment config JSON")->required();
  tst->add_option("--data", c.data, "Signal CSV")->required();
  tst->add_option("--alpha", c.alpha, "Acceptance level in (1/2, 1)");
  tst->add_option("--quantile-method", c.quantile_method, "sampled or bound")
      ->check(CLI::IsMember({"sampled", "bound"}));
  add_common(tst);

  auto* exm = app.add_subcommand("example", "Reproduce a worked example end to end");
  exm->add_option("example", c.example, "1 (Poisson) or 2 (Gaussian)")->required()->check(CLI::IsMember({1, 2}));
  exm->add_option("--config", c.config, "Override the built-in config");
  add_common(exm);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) return run_simulate(c);
    if (*est) return run_estimate(c);
    if (*asy) return run_asymptotics(c);
    if (*tst) return run_test(c);
    if (*exm) return run_example(c);
  } catch (const hmmee::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const hmmee::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const hmmee::EvaluationError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const hmmee::Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
