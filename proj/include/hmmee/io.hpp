#pragma once

#include "hmmee/asymptotics.hpp"
#include "hmmee/estimator.hpp"
#include "hmmee/hypotest.hpp"
#include "hmmee/model.hpp"
#include "hmmee/simulate.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hmmee::io {

using json = nlohmann::json;

// Model schema:
//   {"family": {"kind": "poisson" | "gaussian_known_var" | "gaussian_full" | "categorical",
//               "sigma2": s | [s_1, ...], "symbols": K},
//    "P": [[...], ...], "beta": [b_1, ...] or [[...], ...],
//    "domain": {"beta_lo": [...], "beta_hi": [...], "delta_sep": d, "p_floor": f,
//               "order": "ascending" | "descending" | "none", "beta_free": [...]}}
HmmModel model_from_json(const json& j);
json model_to_json(const HmmModel& model);
// A start point: P and beta only, on the family and domain of `shape`.
HmmModel start_from_json(const json& j, const HmmModel& shape);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

/// 64-bit FNV-1a hash of the canonical model JSON, as 16 hex digits.
std::string model_hash(const HmmModel& model);

struct Series {
  std::vector<double> y;
  std::vector<int> x;  // hidden states when the file has an x column
};

// "y" or "y,x" header; errors name the offending line.
Series read_series_csv(const std::filesystem::path& path);
void write_series_csv(const std::filesystem::path& path, const Trajectory& tr);

void write_trace_csv(const std::filesystem::path& path, const EstimationTrace& trace);

json to_json(const Matrix& m);
json to_json(const Vector& v);
json to_json(const EstimationTrace& trace, bool with_iterates = true);
json to_json(const AsymptoticsReport& rep);
json to_json(const TestReport& rep);
json to_json(const DoeblinCertificate& cert);

Matrix matrix_from_json(const json& j);
Vector vector_from_json(const json& j);

}  // namespace hmmee::io
