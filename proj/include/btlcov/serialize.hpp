// Copyright 2026 The btlcov Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BTLCOV_SERIALIZE_HPP_
#define BTLCOV_SERIALIZE_HPP_

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "btlcov/inference.hpp"
#include "btlcov/solver.hpp"
#include "btlcov/types.hpp"

namespace btlcov {

inline constexpr int kSchemaVersion = 1;

inline std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Vector from_std(const std::vector<double>& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

// Extra context echoed into every report so a run is reproducible from its
// output alone.
struct RunEcho {
  std::string covariates_path;
  std::string comparisons_path;
  bool lcc_applied = false;
  std::vector<int> new_to_old;  // populated when lcc_applied
};

inline nlohmann::json fit_result_to_json(const FitResult& result,
                                         const RunEcho& echo) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "fit";
  j["config"] = {
      {"lambda", result.lambda},
      {"tau", result.tau},
      {"eta_used", result.eta_used},
      {"grad_tol_used", result.grad_tol_used},
      {"covariates", echo.covariates_path},
      {"comparisons", echo.comparisons_path},
  };
  j["result"] = {
      {"alpha", to_std(result.params.alpha)},
      {"beta", to_std(result.params.beta)},
      {"support", result.support},
      {"iterations", result.iterations},
      {"residual", result.residual},
      {"converged", result.converged},
  };
  if (echo.lcc_applied) {
    j["lcc"] = {{"applied", true}, {"new_to_old", echo.new_to_old}};
  }
  if (!result.objective_trace.empty()) {
    j["result"]["objective_trace"] = result.objective_trace;
  }
  return j;
}

// Advisory condition-number and spectrum diagnostics attached to a fit
// report; reported, never enforced.
inline nlohmann::json diagnostics_to_json(const ModelDiagnostics& diag,
                                          const IdentifiabilityVerdict& v) {
  return nlohmann::json{
      {"kappa1", diag.kappa1},
      {"kappa2", diag.kappa2},
      {"kappa3", diag.kappa3},
      {"incoherence", diag.incoherence},
      {"sigma_min_perp", diag.sigma_min_perp},
      {"sigma_max", diag.sigma_max},
      {"identifiable_at_support_size", v.pass},
      {"identifiability_detail", v.detail},
  };
}

inline FitResult fit_result_from_json(const nlohmann::json& j,
                                      RunEcho* echo = nullptr) {
  if (!j.contains("schema_version") ||
      j.at("schema_version").get<int>() != kSchemaVersion) {
    throw ParseError("fit json: missing or unsupported schema_version");
  }
  if (j.at("kind").get<std::string>() != "fit") {
    throw ParseError("fit json: kind is not 'fit'");
  }
  FitResult result;
  const auto& r = j.at("result");
  result.params.alpha = from_std(r.at("alpha").get<std::vector<double>>());
  result.params.beta = from_std(r.at("beta").get<std::vector<double>>());
  if (!result.params.all_finite()) {
    throw ParseError("fit json: parameters must be finite");
  }
  result.support = r.at("support").get<std::vector<int>>();
  result.iterations = r.at("iterations").get<long>();
  result.residual = r.at("residual").get<double>();
  result.converged = r.at("converged").get<bool>();
  const auto& c = j.at("config");
  result.lambda = c.at("lambda").get<double>();
  result.tau = c.at("tau").get<double>();
  result.eta_used = c.at("eta_used").get<double>();
  result.grad_tol_used = c.at("grad_tol_used").get<double>();
  if (echo) {
    echo->covariates_path = c.at("covariates").get<std::string>();
    echo->comparisons_path = c.at("comparisons").get<std::string>();
    if (j.contains("lcc")) {
      echo->lcc_applied = j.at("lcc").at("applied").get<bool>();
      echo->new_to_old = j.at("lcc").at("new_to_old").get<std::vector<int>>();
    }
  }
  return result;
}

inline nlohmann::json gof_report_to_json(const GofReport& report,
                                         bool include_replicates = false) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "gof";
  j["statistic"] = report.statistic;
  j["critical_value"] = report.critical_value;
  j["p_value"] = report.p_value;
  j["reject"] = report.reject;
  j["alpha"] = report.alpha_level;
  j["B"] = report.B;
  j["seed"] = report.seed;
  j["support_size"] = report.support_size;
  if (include_replicates) j["replicates"] = report.replicates;
  return j;
}

inline nlohmann::json rank_interval_to_json(const RankInterval& interval) {
  return nlohmann::json{
      {"item", interval.item},
      {"lower", interval.lower},
      {"upper", interval.upper},
      {"kind", interval.kind == IntervalKind::kTwoSided ? "two-sided"
                                                        : "one-sided-lower"},
  };
}

inline nlohmann::json rank_ci_report_to_json(const RankCiReport& report,
                                             const BootstrapSpec& spec,
                                             const std::string& stage,
                                             bool include_pairwise = false) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "rank_ci";
  j["stage"] = stage;
  j["critical_value"] = report.critical_value;
  j["alpha"] = spec.alpha_level;
  j["B"] = spec.B;
  j["seed"] = spec.seed;
  j["intervals"] = nlohmann::json::array();
  for (const auto& interval : report.intervals) {
    j["intervals"].push_back(rank_interval_to_json(interval));
  }
  if (include_pairwise) {
    j["pairwise"] = nlohmann::json::array();
    for (std::size_t mi = 0; mi < report.pairwise.size(); ++mi) {
      nlohmann::json per_item = nlohmann::json::array();
      for (const auto& ci : report.pairwise[mi]) {
        per_item.push_back({{"k", ci.k}, {"lower", ci.lower},
                            {"upper", ci.upper}});
      }
      j["pairwise"].push_back(
          {{"item", report.intervals[mi].item}, {"cis", per_item}});
    }
  }
  return j;
}

inline void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write file: " + path);
  out << j.dump(2) << "\n";
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace btlcov

#endif  // BTLCOV_SERIALIZE_HPP_
