#include "hmmee/io.hpp"

#include "hmmee/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace hmmee::io {

namespace {

template <class T>
T get(const json& j, const char* key, const char* where) {
  if (!j.contains(key)) throw UsageError(std::string(where) + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError(std::string(where) + ": bad value for '" + key + "': " + e.what());
  }
}

json eigen_summary(const Matrix& A) {
  if (A.size() == 0) return nullptr;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
  return {{"min", es.eigenvalues().minCoeff()}, {"max", es.eigenvalues().maxCoeff()}};
}

std::vector<Vector> betas_from_json(const json& jb, const SignalFamily& fam) {
  std::vector<Vector> betas;
  if (!jb.is_array()) throw UsageError("model: 'beta' must be an array");
  for (const auto& b : jb) {
    if (b.is_number()) {
      betas.push_back(Vector::Constant(1, b.get<double>()));
    } else {
      betas.push_back(vector_from_json(b));
    }
  }
  for (auto& b : betas) {
    if (fam.kind() == FamilyKind::categorical && b.size() == fam.num_symbols() - 1) b = fam.beta_from_coords(b);
    if (b.size() != fam.beta_dim()) {
      throw UsageError("model: β has " + std::to_string(b.size()) + " coordinates, " + std::string(fam.name()) +
                       " needs " + std::to_string(fam.beta_dim()));
    }
  }
  return betas;
}

}  // namespace

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) throw UsageError("expected a matrix (array of rows)");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols) throw UsageError("ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw UsageError("expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  return v;
}

json to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v[k]);
  return out;
}

HmmModel model_from_json(const json& j) {
  if (!j.is_object()) throw UsageError("model must be a JSON object");
  HmmModel model;
  const json& jf = j.contains("family") ? j.at("family") : json::object();
  const std::string kind = jf.is_string() ? jf.get<std::string>() : jf.value("kind", std::string("poisson"));
  if (kind == "poisson") {
    model.family = SignalFamily::poisson();
  } else if (kind == "gaussian_known_var") {
    const json s = jf.is_object() && jf.contains("sigma2") ? jf.at("sigma2") : json(1.0);
    model.family = s.is_array() ? SignalFamily::gaussian_known_var(s.get<std::vector<double>>())
                                : SignalFamily::gaussian_known_var(s.get<double>());
  } else if (kind == "gaussian_full") {
    model.family = SignalFamily::gaussian_full();
  } else if (kind == "categorical") {
    model.family = SignalFamily::categorical(get<int>(jf, "symbols", "family"));
  } else {
    throw UsageError("model: unknown family kind '" + kind + "'");
  }
  if (!j.contains("P")) throw UsageError("model: missing key 'P'");
  model.P = matrix_from_json(j.at("P"));
  if (model.P.rows() != model.P.cols()) throw UsageError("model: P must be square");
  if (j.contains("m") && j.at("m").get<int>() != model.P.rows()) throw UsageError("model: 'm' disagrees with P");
  if (!j.contains("beta")) throw UsageError("model: missing key 'beta'");
  model.betas = betas_from_json(j.at("beta"), model.family);
  if (static_cast<Eigen::Index>(model.betas.size()) != model.P.rows()) throw UsageError("model: need one β per state");

  if (j.contains("domain")) {
    const json& d = j.at("domain");
    ParameterDomain& dom = model.domain;
    if (d.contains("beta_lo")) dom.beta_lo = vector_from_json(d.at("beta_lo"));
    if (d.contains("beta_hi")) dom.beta_hi = vector_from_json(d.at("beta_hi"));
    dom.delta_sep = d.value("delta_sep", 0.0);
    dom.p_floor = d.value("p_floor", 0.0);
    dom.order = state_order_from_string(d.value("order", std::string("ascending")));
    if (d.contains("beta_free")) dom.beta_free = d.at("beta_free").get<std::vector<bool>>();
  }
  ThetaLayout check(model);  // validates the beta_free mask
  (void)check;
  return model;
}

json model_to_json(const HmmModel& model) {
  const SignalFamily& fam = model.family;
  json jf = {{"kind", std::string(fam.name())}};
  if (fam.kind() == FamilyKind::gaussian_known_var) {
    if (fam.sigma2().size() == 1) {
      jf["sigma2"] = fam.sigma2().front();
    } else {
      jf["sigma2"] = fam.sigma2();
    }
  }
  if (fam.kind() == FamilyKind::categorical) jf["symbols"] = fam.num_symbols();
  json betas = json::array();
  for (const auto& b : model.betas) betas.push_back(to_json(b));
  const ParameterDomain& dom = model.domain;
  json jd = {{"delta_sep", dom.delta_sep}, {"p_floor", dom.p_floor}, {"order", std::string(to_string(dom.order))}};
  if (dom.beta_lo.size() > 0) jd["beta_lo"] = to_json(dom.beta_lo);
  if (dom.beta_hi.size() > 0) jd["beta_hi"] = to_json(dom.beta_hi);
  if (!dom.beta_free.empty()) jd["beta_free"] = dom.beta_free;
  return {{"m", model.num_states()}, {"family", jf}, {"P", to_json(model.P)}, {"beta", betas}, {"domain", jd}};
}

HmmModel start_from_json(const json& j, const HmmModel& shape) {
  HmmModel out = shape;
  if (!j.contains("P") || !j.contains("beta")) throw UsageError("start point needs 'P' and 'beta'");
  out.P = matrix_from_json(j.at("P"));
  out.betas = betas_from_json(j.at("beta"), shape.family);
  if (out.P.rows() != shape.P.rows() || out.betas.size() != shape.betas.size()) {
    throw UsageError("start point has a different number of states than the model");
  }
  return out;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string model_hash(const HmmModel& model) {
  const std::string s = model_to_json(model).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Series read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  Series s;
  std::string line;
  std::size_t lineno = 0;
  bool has_x = false;
  auto fail = [&](const std::string& what) {
    throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line == "y") continue;
      if (line == "y,x") {
        has_x = true;
        continue;
      }
      fail("expected header 'y' or 'y,x', got '" + line + "'");
    }
    const auto comma = line.find(',');
    const std::string ys = line.substr(0, comma);
    std::size_t used = 0;
    double y = 0.0;
    try {
      y = std::stod(ys, &used);
    } catch (const std::exception&) {
      fail("cannot parse signal '" + ys + "'");
    }
    if (used != ys.size() || !std::isfinite(y)) fail("cannot parse signal '" + ys + "'");
    s.y.push_back(y);
    if (has_x) {
      if (comma == std::string::npos) fail("missing state column");
      const std::string xs = line.substr(comma + 1);
      try {
        std::size_t u = 0;
        const int x = std::stoi(xs, &u);
        if (u != xs.size()) fail("cannot parse state '" + xs + "'");
        s.x.push_back(x);
      } catch (const ParseError&) {
        throw;
      } catch (const std::exception&) {
        fail("cannot parse state '" + xs + "'");
      }
    } else if (comma != std::string::npos) {
      fail("unexpected extra column");
    }
  }
  if (lineno == 0) throw ParseError(path.string() + ": empty file");
  return s;
}

void write_series_csv(const std::filesystem::path& path, const Trajectory& tr) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << std::setprecision(17) << "y,x\n";
  for (std::size_t k = 0; k < tr.signals.size(); ++k) out << tr.signals[k] << ',' << tr.states[k] + 1 << '\n';
}

void write_trace_csv(const std::filesystem::path& path, const EstimationTrace& trace) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << std::setprecision(17) << "k";
  const auto M = trace.theta_hat.size();
  for (Eigen::Index i = 0; i < M; ++i) out << ",theta" << i + 1;
  out << ",objective,grad_norm,projected\n";
  for (const auto& r : trace.iterates) {
    out << r.k;
    for (Eigen::Index i = 0; i < M; ++i) out << ',' << r.theta[i];
    out << ',' << r.objective << ',' << r.grad_norm << ',' << (r.projected ? 1 : 0) << '\n';
  }
}

json to_json(const EstimationTrace& trace, bool with_iterates) {
  json j = {{"theta_hat", to_json(trace.theta_hat)},
            {"model_hat", model_to_json(trace.model_hat)},
            {"objective", trace.objective},
            {"iterations", trace.iterations},
            {"stop_reason", std::string(to_string(trace.stop_reason))},
            {"monotone", trace.monotone}};
  if (!trace.error.empty()) j["error"] = trace.error;
  json it = json::array();
  if (with_iterates) {
    for (const auto& r : trace.iterates) {
      it.push_back({{"k", r.k}, {"theta", to_json(r.theta)}, {"objective", r.objective}, {"grad_norm", r.grad_norm},
                    {"projected", r.projected}});
    }
  }
  j["trace"] = it;
  return j;
}

json to_json(const DoeblinCertificate& cert) {
  return {{"n0", cert.n0}, {"kappa", cert.kappa}, {"nu0", to_json(cert.nu0)}, {"factor", cert.covariance_factor()}};
}

json to_json(const AsymptoticsReport& rep) {
  json j = {{"I2", to_json(rep.I2)},
            {"I2_inv", to_json(rep.I2_inv)},
            {"Gamma", to_json(rep.Gamma)},
            {"sandwich", to_json(rep.sandwich)},
            {"method",
             {{"support", rep.exact_support ? "exact" : "gauss_hermite"},
              {"gh_order", rep.gh_order},
              {"nodes", rep.support_size},
              {"lags_used", rep.lags_used},
              {"last_lag_norm", rep.last_lag_norm},
              {"gamma_truncated", rep.gamma_truncated}}},
            {"eigenvalues",
             {{"I2", eigen_summary(rep.I2)}, {"Gamma", eigen_summary(rep.Gamma)}, {"sandwich", eigen_summary(rep.sandwich)}}}};
  if (rep.certificate) {
    j["certificate"] = to_json(*rep.certificate);
    j["bound_matrix"] = to_json(rep.bound_matrix);
    j["eigenvalues"]["bound_minus_sandwich"] = eigen_summary(rep.bound_matrix - rep.sandwich);
  } else {
    j["certificate"] = nullptr;
    j["bound_matrix"] = nullptr;
  }
  return j;
}

json to_json(const TestReport& rep) {
  json j = {{"statistic", rep.statistic},
            {"entropy", rep.entropy},
            {"n", rep.n},
            {"critical_value", rep.critical_value},
            {"threshold", rep.critical_value / rep.n},
            {"decision", rep.accept ? "accept" : "reject"},
            {"alpha", rep.alpha},
            {"method", std::string(to_string(rep.method))}};
  if (rep.type2) {
    j["type2"] = {{"bound", rep.type2->bound},
                  {"separation", rep.type2->separation},
                  {"expected_tv", rep.type2->expected_tv},
                  {"applicable", rep.type2->applicable}};
  }
  return j;
}

}  // namespace hmmee::io
