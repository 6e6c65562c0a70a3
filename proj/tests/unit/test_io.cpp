#include <doctest.h>

#include "../oracles.hpp"
#include "hmmee/errors.hpp"
#include "hmmee/experiment.hpp"
#include "hmmee/io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace hmmee;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hmmee_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("model JSON round trip") {
  for (const HmmModel& m : {oracle::example1(), oracle::example2(), oracle::small_categorical()}) {
    const auto j = io::model_to_json(m);
    const HmmModel back = io::model_from_json(j);
    CHECK(back.family == m.family);
    CHECK(oracle::max_abs(back.P - m.P) == 0.0);
    for (std::size_t a = 0; a < m.betas.size(); ++a) CHECK(back.betas[a] == m.betas[a]);
    CHECK(back.domain.order == m.domain.order);
    CHECK(io::model_hash(back) == io::model_hash(m));
  }
  CHECK(io::model_hash(oracle::example1()) != io::model_hash(oracle::example2()));
}

TEST_CASE("model JSON errors") {
  CHECK_THROWS_AS(io::model_from_json(io::json::parse(R"({"beta": [1, 2]})")), UsageError);
  CHECK_THROWS_AS(io::model_from_json(io::json::parse(R"({"P": [[1]], "beta": [1, 2]})")), UsageError);
  CHECK_THROWS_AS(io::model_from_json(io::json::parse(R"({"family": {"kind": "cauchy"}, "P": [[1]], "beta": [1]})")),
                  UsageError);
  const auto cat = io::model_from_json(
      io::json::parse(R"({"family": {"kind": "categorical", "symbols": 3}, "P": [[1]], "beta": [[0.2, 0.3]]})"));
  CHECK(cat.betas[0][2] == doctest::Approx(0.5));
}

TEST_CASE("series CSV round trip and parse errors") {
  const fs::path dir = temp_dir("csv");
  Trajectory tr{{0, 1, 1}, {2.0, 0.125, 7.0}};
  io::write_series_csv(dir / "d.csv", tr);
  const auto s = io::read_series_csv(dir / "d.csv");
  CHECK(s.y == tr.signals);
  CHECK(s.x == std::vector<int>{1, 2, 2});
  {
    std::ofstream out(dir / "bad.csv");
    out << "y\n1\n2\nx3\n";
  }
  try {
    io::read_series_csv(dir / "bad.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":4:") != std::string::npos);
  }
  CHECK_THROWS_AS(io::read_series_csv(dir / "missing.csv"), InputError);
}

TEST_CASE("experiment configs") {
  const auto e1 = experiment_from_json(example_config(1));
  CHECK(e1.n == 100000);
  CHECK(e1.estimator.step == 0.001);
  REQUIRE(e1.start);
  CHECK(e1.start->betas[1][0] == doctest::Approx(0.1));
  CHECK(validate(e1.model).empty());
  const auto e2 = experiment_from_json(example_config(2));
  CHECK(e2.model.family.kind() == FamilyKind::gaussian_known_var);
  CHECK(e2.bins.size() == 6);
  CHECK_THROWS_AS(example_config(3), UsageError);
  CHECK_THROWS_AS(experiment_from_json(io::json::parse("{}")), UsageError);
}

TEST_CASE("thread resolution") {
  CHECK(resolve_threads(3) == 3);
  ::setenv("HMM_MEE_THREADS", "5", 1);
  CHECK(resolve_threads(0) == 5);
  ::setenv("HMM_MEE_THREADS", "many", 1);
  CHECK_THROWS_AS(resolve_threads(0), UsageError);
  ::unsetenv("HMM_MEE_THREADS");
  CHECK(resolve_threads(0) == 1);
}

TEST_CASE("report JSON shapes") {
  const auto rep = asymptotics_report(oracle::example1());
  const auto j = io::to_json(rep);
  CHECK(j["I2"].size() == 4);
  CHECK(j["certificate"]["kappa"].get<double>() == doctest::Approx(0.6));
  CHECK(j["eigenvalues"]["bound_minus_sandwich"]["min"].get<double>() >= -1e-8);
}
