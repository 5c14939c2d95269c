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

// Command-line front end for the sparse-score pairwise ranking pipeline:
// data simulation, penalized fitting, debiased inference, goodness-of-fit
// testing, rank confidence intervals, top-K screening, and the Monte Carlo
// benchmark drivers.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "btlcov/btlcov.hpp"
#include "btlcov/serialize.hpp"

namespace {

using btlcov::BootstrapSpec;
using btlcov::ComparisonDataset;
using btlcov::DatasetLoad;
using btlcov::FitConfig;
using btlcov::FitResult;
using btlcov::Matrix;
using btlcov::RunEcho;
using btlcov::Scenario;
using btlcov::Vector;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitSolver = 2;

struct LoadedRun {
  ComparisonDataset data;
  double scale = 1.0;
  RunEcho echo;
};

// Loads and validates a dataset, optionally restricting to the largest
// connected component. Estimation on a disconnected graph is refused
// unless the restriction is requested, since scores are only comparable
// within a component.
LoadedRun load_run(const std::string& covariates,
                   const std::string& comparisons, bool allow_lcc) {
  DatasetLoad load = btlcov::load_dataset(covariates, comparisons);
  LoadedRun run{std::move(load.data), load.covariate_scale, {}};
  run.echo.covariates_path = covariates;
  run.echo.comparisons_path = comparisons;
  if (!btlcov::is_connected(run.data)) {
    if (!allow_lcc) {
      throw btlcov::InvalidInputError(
          "comparison graph is disconnected; rerun with --allow-lcc to "
          "restrict to the largest connected component");
    }
    auto restricted = btlcov::largest_component_restrict(run.data);
    std::cerr << "note: restricted to largest connected component ("
              << restricted.data.n() << " of " << run.data.n()
              << " items kept)\n";
    run.echo.lcc_applied = true;
    run.echo.new_to_old = restricted.new_to_old;
    run.data = std::move(restricted.data);
  }
  return run;
}

// Reloads the dataset recorded in a fit report, re-applying the same
// component restriction so item indices line up with the stored estimate.
LoadedRun reload_from_echo(const RunEcho& echo,
                           const std::string& covariates_override,
                           const std::string& comparisons_override) {
  const std::string covariates = covariates_override.empty()
                                     ? echo.covariates_path
                                     : covariates_override;
  const std::string comparisons = comparisons_override.empty()
                                      ? echo.comparisons_path
                                      : comparisons_override;
  return load_run(covariates, comparisons, echo.lcc_applied);
}

std::uint64_t parse_seed(long seed) {
  return static_cast<std::uint64_t>(seed);
}

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void write_csv_header(std::ofstream& out, const std::string& header) {
  out << header << "\n";
}

std::string fmt(double value) { return btlcov::detail::format_double(value); }

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  int n = 100;
  int d = 3;
  int k = 5;
  double p = 0.5;
  long trials = 160;
  std::string alpha_law = "signed-uniform";
  double rho = 0.0;
  long seed = 1;
  std::string out_covariates = "covariates.csv";
  std::string out_comparisons = "comparisons.csv";
  std::string out_truth = "truth.json";
};

int run_simulate(const SimulateArgs& args) {
  Scenario scenario;
  scenario.n = args.n;
  scenario.d = args.d;
  scenario.k = args.k;
  scenario.p = args.p;
  scenario.trials = args.trials;
  scenario.seed = parse_seed(args.seed);
  scenario.rho = args.rho;
  scenario.alpha_law = args.alpha_law == "profile"
                           ? Scenario::AlphaLaw::kSignalProfile
                           : Scenario::AlphaLaw::kSignedUniform;
  const btlcov::Truth truth = btlcov::generate_truth(scenario);
  const btlcov::ComparisonGraph graph = btlcov::sample_er_graph(
      scenario.n, scenario.p, btlcov::derive_seed(scenario.seed, 1));
  if (graph.edges.empty()) {
    throw btlcov::InvalidInputError(
        "simulated graph has no edges; increase --p or --n");
  }
  const ComparisonDataset data = btlcov::simulate_comparisons(
      truth, graph, scenario.trials, btlcov::derive_seed(scenario.seed, 2));
  btlcov::write_dataset(data, args.out_covariates, args.out_comparisons);

  nlohmann::json j;
  j["schema_version"] = btlcov::kSchemaVersion;
  j["kind"] = "truth";
  j["alpha"] = btlcov::to_std(truth.params.alpha);
  j["beta"] = btlcov::to_std(truth.params.beta);
  j["support"] = truth.params.support();
  j["scenario"] = {{"n", scenario.n},     {"d", scenario.d},
                   {"k", scenario.k},     {"p", scenario.p},
                   {"L", scenario.trials}, {"rho", scenario.rho},
                   {"alpha_law", args.alpha_law}, {"seed", args.seed}};
  btlcov::write_json(j, args.out_truth);
  std::cout << "simulated n=" << data.n() << " d=" << data.d()
            << " edges=" << data.num_edges() << " L=" << scenario.trials
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string covariates;
  std::string comparisons;
  std::string config_path;
  double lambda = 0.0;
  double tau = 0.0;
  double eta = 0.0;
  long max_iter = 50000;
  double grad_tol = 0.0;
  bool auto_tuning = false;
  double c_lambda = 0.05;
  double c_tau = 1.0;
  double pilot_lambda = -1.0;
  bool allow_lcc = false;
  std::string out = "fit.json";
};

int run_fit(const FitArgs& args_in, const CLI::App* cmd) {
  FitArgs args = args_in;
  if (!args.config_path.empty()) {
    const btlcov::RunConfig config = btlcov::read_config(args.config_path);
    auto fill = [&](const char* flag, auto& target, const auto& source) {
      if (source && cmd->count(flag) == 0) {
        target = static_cast<std::remove_reference_t<decltype(target)>>(
            *source);
      }
    };
    fill("--covariates", args.covariates, config.covariates);
    fill("--comparisons", args.comparisons, config.comparisons);
    fill("--lambda", args.lambda, config.lambda);
    fill("--tau", args.tau, config.tau);
    fill("--eta", args.eta, config.eta);
    fill("--max-iter", args.max_iter, config.max_iter);
    fill("--grad-tol", args.grad_tol, config.grad_tol);
  }
  if (args.covariates.empty() || args.comparisons.empty()) {
    throw btlcov::InvalidInputError(
        "fit: --covariates and --comparisons are required (directly or via "
        "--config)");
  }

  LoadedRun run = load_run(args.covariates, args.comparisons, args.allow_lcc);
  std::cout << "loaded n=" << run.data.n() << " d=" << run.data.d()
            << " edges=" << run.data.num_edges()
            << " L_ref=" << run.data.l_ref()
            << " covariate_scale=" << run.scale << "\n";

  FitConfig config;
  config.lambda = args.lambda;
  config.tau = args.tau;
  config.eta = args.eta;
  config.max_iter = args.max_iter;
  config.grad_tol = args.grad_tol;

  if (args.auto_tuning) {
    // Pilot fit with a small penalty supplies plug-in condition numbers
    // for the default tuning formulas.
    FitConfig pilot = config;
    pilot.lambda = args.pilot_lambda >= 0.0
                       ? args.pilot_lambda
                       : 0.1 * std::sqrt(std::log(std::max(run.data.n(), 2)));
    pilot.tau = 0.0;
    const FitResult pilot_fit = btlcov::fit(run.data, pilot);
    const btlcov::ModelDiagnostics diag =
        btlcov::compute_diagnostics(pilot_fit.params, run.data);
    const auto [lambda, tau] = btlcov::default_tuning(
        run.data, btlcov::estimate_edge_probability(run.data),
        run.data.l_ref(), diag.kappa1, diag.kappa2, diag.kappa3,
        args.c_lambda, args.c_tau);
    config.lambda = lambda;
    config.tau = tau;
    std::cout << "auto tuning: lambda=" << lambda << " tau=" << tau
              << " (kappa1=" << diag.kappa1 << " kappa2=" << diag.kappa2
              << " kappa3=" << diag.kappa3 << ")\n";
  }

  const FitResult result = btlcov::fit(run.data, config);
  nlohmann::json report = btlcov::fit_result_to_json(result, run.echo);
  // Advisory diagnostics at the fitted point, with the identifiability
  // count condition evaluated at the recovered support size.
  const btlcov::ModelDiagnostics diag =
      btlcov::compute_diagnostics(result.params, run.data);
  const btlcov::IdentifiabilityVerdict verdict = btlcov::check_identifiability(
      run.data.n(), run.data.d(),
      btlcov::SparsityBudget{static_cast<int>(result.support.size())},
      run.data.covariates());
  report["diagnostics"] = btlcov::diagnostics_to_json(diag, verdict);
  btlcov::write_json(report, args.out);
  std::cout << "fit: converged=" << (result.converged ? "yes" : "no")
            << " iterations=" << result.iterations
            << " residual=" << result.residual
            << " support_size=" << result.support.size()
            << " kappa1=" << diag.kappa1 << "\n";
  if (!result.converged) {
    std::cerr << "error: solver did not converge within max_iter\n";
    return kExitSolver;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// debias

struct DebiasArgs {
  std::string fit_path;
  std::string covariates;
  std::string comparisons;
  std::string out = "debias.json";
};

int run_debias(const DebiasArgs& args) {
  RunEcho echo;
  const FitResult fit =
      btlcov::fit_result_from_json(btlcov::read_json(args.fit_path), &echo);
  LoadedRun run = reload_from_echo(echo, args.covariates, args.comparisons);
  const btlcov::DebiasedScores debiased = btlcov::debias_alpha(fit, run.data);
  nlohmann::json j;
  j["schema_version"] = btlcov::kSchemaVersion;
  j["kind"] = "debias";
  j["alpha_debiased"] = btlcov::to_std(debiased.alpha_debiased);
  j["hessian_diag"] = btlcov::to_std(debiased.hessian_diag);
  j["beta"] = btlcov::to_std(debiased.beta);
  j["a_inv_diag"] = btlcov::to_std(debiased.a_inv_diag);
  j["fit"] = args.fit_path;
  btlcov::write_json(j, args.out);
  std::cout << "debiased scores written to " << args.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gof

struct GofArgs {
  std::string fit_path;
  std::string covariates;
  std::string comparisons;
  long B = 200;
  double alpha = 0.05;
  long seed = 0;
  bool emit_replicates = false;
  std::string out = "gof.json";
};

int run_gof(const GofArgs& args) {
  RunEcho echo;
  const FitResult fit =
      btlcov::fit_result_from_json(btlcov::read_json(args.fit_path), &echo);
  LoadedRun run = reload_from_echo(echo, args.covariates, args.comparisons);
  BootstrapSpec spec;
  spec.B = args.B;
  spec.alpha_level = args.alpha;
  spec.seed = parse_seed(args.seed);
  const btlcov::GofReport report = btlcov::gof_test(fit, run.data, spec);
  btlcov::write_json(
      btlcov::gof_report_to_json(report, args.emit_replicates), args.out);
  std::cout << "T1=" << report.statistic << " c=" << report.critical_value
            << " p=" << report.p_value
            << " reject=" << (report.reject ? "yes" : "no")
            << " support_size=" << report.support_size << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// rank-ci / topk helpers

Matrix load_z_matrix(const std::string& z_path, const LoadedRun& run) {
  if (z_path.empty()) return run.data.covariates();
  Matrix raw = btlcov::load_covariates_csv(z_path);
  if (raw.rows() != run.data.n() || raw.cols() != run.data.d()) {
    throw btlcov::InvalidInputError(
        "rank inference: Z must have one row per training item and the "
        "same covariate dimension");
  }
  // New covariates live in the raw units of the training file, so they
  // are divided by the training scale, not rescaled on their own.
  return raw / run.scale;
}

struct StagePack {
  btlcov::PairwiseInference inference;
  std::string stage;
};

StagePack build_inference(const FitResult& fit, const LoadedRun& run,
                          const Matrix& z, bool two_stage) {
  if (two_stage) {
    const btlcov::Params refit =
        btlcov::two_stage_refit(run.data, fit.support);
    return StagePack{btlcov::make_two_stage_inference(refit, fit.support,
                                                      run.data, z),
                     "two-stage"};
  }
  const btlcov::DebiasedScores debiased = btlcov::debias_alpha(fit, run.data);
  return StagePack{btlcov::make_one_stage_inference(fit, debiased, run.data, z),
                   "one-stage"};
}

struct RankCiArgs {
  std::string fit_path;
  std::string covariates;
  std::string comparisons;
  std::string z_path;
  std::vector<int> items;
  bool two_stage = false;
  bool one_sided = false;
  bool emit_pairwise = false;
  long B = 200;
  double alpha = 0.05;
  long seed = 0;
  std::string out = "rank_ci.json";
};

int run_rank_ci(const RankCiArgs& args) {
  RunEcho echo;
  const FitResult fit =
      btlcov::fit_result_from_json(btlcov::read_json(args.fit_path), &echo);
  LoadedRun run = reload_from_echo(echo, args.covariates, args.comparisons);
  const Matrix z = load_z_matrix(args.z_path, run);
  std::vector<int> items = args.items;
  if (items.empty()) {
    items.resize(run.data.n());
    for (int i = 0; i < run.data.n(); ++i) items[i] = i;
  }
  BootstrapSpec spec;
  spec.B = args.B;
  spec.alpha_level = args.alpha;
  spec.seed = parse_seed(args.seed);
  const StagePack pack = build_inference(fit, run, z, args.two_stage);

  nlohmann::json j;
  if (args.one_sided) {
    const btlcov::OneSidedReport report =
        btlcov::one_sided_rank(pack.inference, items, spec);
    j["schema_version"] = btlcov::kSchemaVersion;
    j["kind"] = "rank_ci";
    j["stage"] = pack.stage;
    j["critical_value"] = report.critical_value;
    j["alpha"] = spec.alpha_level;
    j["B"] = spec.B;
    j["seed"] = spec.seed;
    j["intervals"] = nlohmann::json::array();
    for (const auto& interval : report.intervals) {
      j["intervals"].push_back(btlcov::rank_interval_to_json(interval));
    }
  } else {
    const btlcov::RankCiReport report =
        btlcov::rank_ci(pack.inference, items, spec);
    j = btlcov::rank_ci_report_to_json(report, spec, pack.stage,
                                       args.emit_pairwise);
  }
  btlcov::write_json(j, args.out);
  std::cout << "rank intervals (" << pack.stage << ", "
            << (args.one_sided ? "one-sided" : "two-sided") << "):\n";
  for (const auto& interval : j["intervals"]) {
    std::cout << "  item " << interval["item"] << ": ["
              << interval["lower"] << ", " << interval["upper"] << "]\n";
  }
  return kExitOk;
}

struct TopkArgs {
  std::string fit_path;
  std::string covariates;
  std::string comparisons;
  std::string z_path;
  int k_items = 1;
  int test_item = -1;
  bool two_stage = false;
  long B = 200;
  double alpha = 0.05;
  long seed = 0;
  std::string out = "topk.json";
};

int run_topk(const TopkArgs& args) {
  RunEcho echo;
  const FitResult fit =
      btlcov::fit_result_from_json(btlcov::read_json(args.fit_path), &echo);
  LoadedRun run = reload_from_echo(echo, args.covariates, args.comparisons);
  const Matrix z = load_z_matrix(args.z_path, run);
  BootstrapSpec spec;
  spec.B = args.B;
  spec.alpha_level = args.alpha;
  spec.seed = parse_seed(args.seed);
  const StagePack pack = build_inference(fit, run, z, args.two_stage);

  nlohmann::json j;
  j["schema_version"] = btlcov::kSchemaVersion;
  j["kind"] = "topk";
  j["stage"] = pack.stage;
  j["K"] = args.k_items;
  j["alpha"] = spec.alpha_level;
  j["B"] = spec.B;
  j["seed"] = spec.seed;
  const std::vector<int> selected =
      btlcov::topk_screen(pack.inference, args.k_items, spec);
  j["selected"] = selected;
  if (args.test_item >= 0) {
    const btlcov::RankThresholdDecision decision = btlcov::rank_threshold_test(
        pack.inference, args.test_item, args.k_items, spec);
    j["rank_threshold_test"] = {
        {"item", decision.item},
        {"threshold", decision.threshold},
        {"rank_lower_bound", decision.rank_lower_bound},
        {"reject", decision.reject},
    };
  }
  btlcov::write_json(j, args.out);
  std::cout << "top-" << args.k_items << " screen kept " << selected.size()
            << " of " << run.data.n() << " items\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench drivers

struct BenchNormalityArgs {
  std::string preset = "fig1";
  long reps = 500;
  long seed = 1;
  double p = -1.0;
  long trials = -1;
  double lambda = -1.0;
  int threads = default_threads();
  std::string out_dir = ".";
};

int run_bench_normality(const BenchNormalityArgs& args) {
  btlcov::NormalityConfig config;
  config.scenario.n = 200;
  config.scenario.d = 3;
  config.scenario.k = 5;
  if (args.preset == "fig1") {
    config.scenario.p = 0.5;
    config.scenario.trials = 25;
    config.lambda = 3.0;
  } else if (args.preset == "fig1-sparse") {
    config.scenario.p = 0.1;
    config.scenario.trials = 10;
    config.lambda = 1.2;
  } else {
    throw btlcov::InvalidInputError(
        "bench-normality: unknown preset '" + args.preset +
        "' (expected fig1 or fig1-sparse)");
  }
  if (args.p >= 0.0) config.scenario.p = args.p;
  if (args.trials > 0) config.scenario.trials = args.trials;
  if (args.lambda >= 0.0) config.lambda = args.lambda;
  config.reps = args.reps;
  config.seed = parse_seed(args.seed);
  config.scenario.seed = btlcov::derive_seed(config.seed, 777);
  config.threads = args.threads;

  const btlcov::NormalityResult result =
      btlcov::run_normality_experiment(config);

  std::filesystem::create_directories(args.out_dir);
  const std::string csv_path = args.out_dir + "/normality.csv";
  std::ofstream csv(csv_path);
  write_csv_header(csv, "rep,rv1,rv2");
  for (const auto& row : result.rows) {
    csv << row.rep << "," << fmt(row.rv1) << "," << fmt(row.rv2) << "\n";
  }
  nlohmann::json summary;
  summary["schema_version"] = btlcov::kSchemaVersion;
  summary["kind"] = "normality_summary";
  summary["reps"] = config.reps;
  summary["rv1"] = {{"mean", result.summary.rv1_mean},
                    {"sd", result.summary.rv1_sd},
                    {"ks_vs_normal", result.summary.rv1_ks}};
  summary["rv2"] = {{"mean", result.summary.rv2_mean},
                    {"sd", result.summary.rv2_sd},
                    {"ks_vs_normal", result.summary.rv2_ks}};
  btlcov::write_json(summary, args.out_dir + "/normality_summary.json");
  std::cout << "rv1: mean=" << result.summary.rv1_mean
            << " sd=" << result.summary.rv1_sd
            << " ks=" << result.summary.rv1_ks << "\n";
  std::cout << "rv2: mean=" << result.summary.rv2_mean
            << " sd=" << result.summary.rv2_sd
            << " ks=" << result.summary.rv2_ks << "\n";
  return kExitOk;
}

struct BenchPowerArgs {
  std::string preset = "fig3";
  bool fast = false;
  long reps = -1;
  long B = -1;
  long seed = 1;
  int threads = default_threads();
  std::string out_dir = ".";
};

int run_bench_power(const BenchPowerArgs& args) {
  if (args.preset != "fig3") {
    throw btlcov::InvalidInputError("bench-power: unknown preset '" +
                                    args.preset + "' (expected fig3)");
  }
  btlcov::PowerConfig config;
  config.scenario.n = 200;
  config.scenario.d = 3;
  config.scenario.k = 5;
  config.scenario.p = 0.5;
  config.scenario.trials = 160;
  config.lambda = 0.5;
  config.reps = args.fast ? 50 : 100;
  config.B = args.fast ? 100 : 200;
  if (args.reps > 0) config.reps = args.reps;
  if (args.B > 0) config.B = args.B;
  config.seed = parse_seed(args.seed);
  config.scenario.seed = btlcov::derive_seed(config.seed, 778);
  config.threads = args.threads;

  const btlcov::PowerResult result = btlcov::run_power_experiment(config);

  std::filesystem::create_directories(args.out_dir);
  std::ofstream csv(args.out_dir + "/power.csv");
  write_csv_header(csv, "rho,rep,T1,c,reject");
  for (const auto& row : result.rows) {
    csv << fmt(row.rho) << "," << row.rep << "," << fmt(row.statistic) << ","
        << fmt(row.critical_value) << "," << (row.reject ? 1 : 0) << "\n";
  }
  nlohmann::json summary;
  summary["schema_version"] = btlcov::kSchemaVersion;
  summary["kind"] = "power_summary";
  summary["reps"] = config.reps;
  summary["B"] = config.B;
  summary["rho"] = result.summary.rho;
  summary["rejection_rate"] = result.summary.rejection_rate;
  btlcov::write_json(summary, args.out_dir + "/power_summary.json");
  for (std::size_t g = 0; g < result.summary.rho.size(); ++g) {
    std::cout << "rho=" << result.summary.rho[g]
              << " rejection_rate=" << result.summary.rejection_rate[g]
              << "\n";
  }
  return kExitOk;
}

struct BenchCoverageArgs {
  std::string preset = "table1";
  long reps = 100;
  long B = 200;
  long seed = 1;
  std::vector<int> items;
  int threads = default_threads();
  std::string out_dir = ".";
};

int run_bench_coverage(const BenchCoverageArgs& args) {
  if (args.preset != "table1") {
    throw btlcov::InvalidInputError("bench-coverage: unknown preset '" +
                                    args.preset + "' (expected table1)");
  }
  btlcov::CoverageConfig config;
  config.scenario.n = 100;
  config.scenario.d = 3;
  config.scenario.k = 5;
  config.scenario.p = 0.5;
  config.scenario.trials = 160;
  config.lambda = 1.0;
  config.items = args.items.empty() ? std::vector<int>{0, 1, 2, 5, 6, 7}
                                    : args.items;
  config.reps = args.reps;
  config.B = args.B;
  config.seed = parse_seed(args.seed);
  config.scenario.seed = btlcov::derive_seed(config.seed, 779);
  config.threads = args.threads;

  const btlcov::CoverageResult result =
      btlcov::run_coverage_experiment(config);

  std::filesystem::create_directories(args.out_dir);
  std::ofstream csv(args.out_dir + "/coverage.csv");
  write_csv_header(csv, "item,rep,cover_theta,cover_rank,length,stage");
  for (const auto& row : result.rows) {
    csv << row.item << "," << row.rep << "," << (row.cover_theta ? 1 : 0)
        << "," << (row.cover_rank ? 1 : 0) << "," << fmt(row.length) << ","
        << row.stage << "\n";
  }
  nlohmann::json summary;
  summary["schema_version"] = btlcov::kSchemaVersion;
  summary["kind"] = "coverage_summary";
  summary["reps"] = config.reps;
  summary["B"] = config.B;
  summary["items"] = nlohmann::json::array();
  for (const auto& item : result.summary) {
    summary["items"].push_back({
        {"item", item.item},
        {"true_rank", item.true_rank},
        {"one_stage",
         {{"rank_coverage", item.one_stage_rank_coverage},
          {"theta_coverage", item.one_stage_theta_coverage},
          {"mean_length", item.one_stage_mean_length},
          {"sd_length", item.one_stage_sd_length}}},
        {"two_stage",
         {{"rank_coverage", item.two_stage_rank_coverage},
          {"theta_coverage", item.two_stage_theta_coverage},
          {"mean_length", item.two_stage_mean_length},
          {"sd_length", item.two_stage_sd_length}}},
    });
  }
  btlcov::write_json(summary, args.out_dir + "/coverage_summary.json");
  for (const auto& item : result.summary) {
    std::cout << "item " << item.item << " (rank " << item.true_rank
              << "): one-stage EC(r)=" << item.one_stage_rank_coverage
              << " EC(theta)=" << item.one_stage_theta_coverage
              << " len=" << item.one_stage_mean_length
              << " | two-stage EC(r)=" << item.two_stage_rank_coverage
              << " EC(theta)=" << item.two_stage_theta_coverage
              << " len=" << item.two_stage_mean_length << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Pairwise-comparison ranking with item covariates and sparse "
      "intrinsic scores: penalized fitting, debiased inference, "
      "goodness-of-fit testing, rank confidence intervals, and Monte "
      "Carlo benchmarks."};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* sim_cmd = app.add_subcommand(
      "simulate", "Generate a synthetic dataset from the latent-score model");
  sim_cmd->add_option("--n", sim.n, "Number of items");
  sim_cmd->add_option("--d", sim.d, "Covariate dimension per item");
  sim_cmd->add_option("--k", sim.k,
                      "Number of items with nonzero intrinsic score");
  sim_cmd->add_option("--p", sim.p,
                      "Edge probability of the random comparison graph");
  sim_cmd->add_option("--L", sim.trials, "Comparisons per sampled pair");
  sim_cmd->add_option("--alpha-law", sim.alpha_law,
                      "Intrinsic score law: signed-uniform (magnitudes "
                      "uniform in [0.3, 0.3 log 5] with random signs) or "
                      "profile (direction scaled by --rho)");
  sim_cmd->add_option("--rho", sim.rho,
                      "Signal strength for --alpha-law profile");
  sim_cmd->add_option("--seed", sim.seed, "Master seed for all draws");
  sim_cmd->add_option("--out-covariates", sim.out_covariates,
                      "Output covariates CSV");
  sim_cmd->add_option("--out-comparisons", sim.out_comparisons,
                      "Output comparisons CSV");
  sim_cmd->add_option("--out-truth", sim.out_truth,
                      "Output JSON with the generating parameters");

  FitArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand(
      "fit",
      "Penalized maximum-likelihood fit: l1 on intrinsic scores, optional "
      "ridge, solved by proximal gradient descent");
  fit_cmd->add_option("--covariates", fit_args.covariates,
                      "Covariates CSV (item_id,x1,...,xd)");
  fit_cmd->add_option("--comparisons", fit_args.comparisons,
                      "Comparisons CSV (item_i,item_j,wins_j,trials) or "
                      "per-trial (winner,loser)");
  fit_cmd->add_option("--config", fit_args.config_path,
                      "key=value config file supplying defaults");
  fit_cmd->add_option("--lambda", fit_args.lambda,
                      "l1 penalty weight on the intrinsic scores");
  fit_cmd->add_option("--tau", fit_args.tau, "Ridge weight on all parameters");
  fit_cmd->add_option("--eta", fit_args.eta,
                      "Step size; 0 selects 2/(2 tau + 1.05 Hmax)");
  fit_cmd->add_option("--max-iter", fit_args.max_iter, "Iteration cap");
  fit_cmd->add_option("--grad-tol", fit_args.grad_tol,
                      "Stationarity tolerance; 0 selects "
                      "1e-8 (1 + ||grad at start||)");
  fit_cmd->add_flag("--auto-tuning", fit_args.auto_tuning,
                    "Choose lambda and tau from the default formulas with "
                    "plug-in condition numbers from a pilot fit");
  fit_cmd->add_option("--c-lambda", fit_args.c_lambda,
                      "Multiplier for the default lambda formula");
  fit_cmd->add_option("--c-tau", fit_args.c_tau,
                      "Multiplier for the default tau formula");
  fit_cmd->add_option("--pilot-lambda", fit_args.pilot_lambda,
                      "Penalty for the pilot fit under --auto-tuning");
  fit_cmd->add_flag("--allow-lcc", fit_args.allow_lcc,
                    "Restrict a disconnected graph to its largest "
                    "connected component instead of failing");
  fit_cmd->add_option("--out", fit_args.out, "Output fit JSON");

  DebiasArgs debias_args;
  CLI::App* debias_cmd = app.add_subcommand(
      "debias",
      "Debias the fitted intrinsic scores by a one-step Newton correction");
  debias_cmd->add_option("--fit", debias_args.fit_path, "Fit JSON from 'fit'")
      ->required();
  debias_cmd->add_option("--covariates", debias_args.covariates,
                         "Override the covariates path recorded in the fit");
  debias_cmd->add_option("--comparisons", debias_args.comparisons,
                         "Override the comparisons path recorded in the fit");
  debias_cmd->add_option("--out", debias_args.out, "Output JSON");

  GofArgs gof_args;
  CLI::App* gof_cmd = app.add_subcommand(
      "gof",
      "Goodness-of-fit test of the null that covariates fully explain the "
      "scores (all intrinsic scores zero), via Gaussian multiplier "
      "bootstrap");
  gof_cmd->add_option("--fit", gof_args.fit_path, "Fit JSON from 'fit'")
      ->required();
  gof_cmd->add_option("--covariates", gof_args.covariates,
                      "Override the covariates path recorded in the fit");
  gof_cmd->add_option("--comparisons", gof_args.comparisons,
                      "Override the comparisons path recorded in the fit");
  gof_cmd->add_option("--B", gof_args.B, "Bootstrap replicates");
  gof_cmd->add_option("--alpha", gof_args.alpha, "Significance level");
  gof_cmd->add_option("--seed", gof_args.seed, "Bootstrap seed");
  gof_cmd->add_flag("--emit-replicates", gof_args.emit_replicates,
                    "Include the bootstrap replicate values in the report");
  gof_cmd->add_option("--out", gof_args.out, "Output JSON");

  RankCiArgs rank_args;
  CLI::App* rank_cmd = app.add_subcommand(
      "rank-ci",
      "Simultaneous confidence intervals for out-of-sample ranks from "
      "pairwise score-difference intervals");
  rank_cmd->add_option("--fit", rank_args.fit_path, "Fit JSON from 'fit'")
      ->required();
  rank_cmd->add_option("--covariates", rank_args.covariates,
                       "Override the covariates path recorded in the fit");
  rank_cmd->add_option("--comparisons", rank_args.comparisons,
                       "Override the comparisons path recorded in the fit");
  rank_cmd->add_option("--z", rank_args.z_path,
                       "Out-of-sample covariates CSV (same format and raw "
                       "units as the training covariates); defaults to the "
                       "training covariates");
  rank_cmd->add_option("--items", rank_args.items,
                       "Items of interest (0-based); default all")
      ->delimiter(',');
  rank_cmd->add_flag("--two-stage", rank_args.two_stage,
                     "Refit on the estimated support and use the "
                     "two-stage intervals");
  rank_cmd->add_flag("--one-sided", rank_args.one_sided,
                     "One-sided rank lower bounds instead of two-sided "
                     "intervals");
  rank_cmd->add_flag("--emit-pairwise", rank_args.emit_pairwise,
                     "Include the pairwise score-difference intervals");
  rank_cmd->add_option("--B", rank_args.B, "Bootstrap replicates");
  rank_cmd->add_option("--alpha", rank_args.alpha, "Significance level");
  rank_cmd->add_option("--seed", rank_args.seed, "Bootstrap seed");
  rank_cmd->add_option("--out", rank_args.out, "Output JSON");

  TopkArgs topk_args;
  CLI::App* topk_cmd = app.add_subcommand(
      "topk",
      "Screen a set that contains the true top-K items with probability "
      ">= 1 - alpha; optional rank-threshold test");
  topk_cmd->add_option("--fit", topk_args.fit_path, "Fit JSON from 'fit'")
      ->required();
  topk_cmd->add_option("--covariates", topk_args.covariates,
                       "Override the covariates path recorded in the fit");
  topk_cmd->add_option("--comparisons", topk_args.comparisons,
                       "Override the comparisons path recorded in the fit");
  topk_cmd->add_option("--z", topk_args.z_path,
                       "Out-of-sample covariates CSV; defaults to the "
                       "training covariates");
  topk_cmd->add_option("--K", topk_args.k_items, "Rank threshold")
      ->required();
  topk_cmd->add_option("--test-item", topk_args.test_item,
                       "Also test H0: rank(item) <= K for this item");
  topk_cmd->add_flag("--two-stage", topk_args.two_stage,
                     "Use the two-stage (refitted) scores");
  topk_cmd->add_option("--B", topk_args.B, "Bootstrap replicates");
  topk_cmd->add_option("--alpha", topk_args.alpha, "Significance level");
  topk_cmd->add_option("--seed", topk_args.seed, "Bootstrap seed");
  topk_cmd->add_option("--out", topk_args.out, "Output JSON");

  BenchNormalityArgs norm_args;
  CLI::App* norm_cmd = app.add_subcommand(
      "bench-normality",
      "Monte Carlo check that the standardized debiased score and "
      "coefficient errors are approximately standard normal");
  norm_cmd->add_option("--preset", norm_args.preset,
                       "fig1 (n=200,d=3,k=5,p=0.5,L=25,lambda=3) or "
                       "fig1-sparse (p=0.1,L=10,lambda=1.2)");
  norm_cmd->add_option("--reps", norm_args.reps, "Replicates");
  norm_cmd->add_option("--seed", norm_args.seed, "Master seed");
  norm_cmd->add_option("--p", norm_args.p, "Override the edge probability");
  norm_cmd->add_option("--L", norm_args.trials,
                       "Override the per-pair comparison count");
  norm_cmd->add_option("--lambda", norm_args.lambda,
                       "Override the l1 penalty");
  norm_cmd->add_option("--threads", norm_args.threads,
                       "Worker threads over replicates (1 = sequential "
                       "reference path; results are identical either way)");
  norm_cmd->add_option("--out-dir", norm_args.out_dir,
                       "Directory for normality.csv and the summary JSON");

  BenchPowerArgs power_args;
  CLI::App* power_cmd = app.add_subcommand(
      "bench-power",
      "Monte Carlo size and power of the goodness-of-fit test over a grid "
      "of signal strengths");
  power_cmd->add_option("--preset", power_args.preset,
                        "fig3 (n=200,d=3,k=5,p=0.5,L=160,lambda=0.5)");
  power_cmd->add_flag("--fast", power_args.fast,
                      "Reduced run: 50 replicates, 100 bootstrap draws");
  power_cmd->add_option("--reps", power_args.reps, "Replicates per rho");
  power_cmd->add_option("--B", power_args.B, "Bootstrap replicates");
  power_cmd->add_option("--seed", power_args.seed, "Master seed");
  power_cmd->add_option("--threads", power_args.threads,
                        "Worker threads over replicates");
  power_cmd->add_option("--out-dir", power_args.out_dir,
                        "Directory for power.csv and the summary JSON");

  BenchCoverageArgs cov_args;
  CLI::App* cov_cmd = app.add_subcommand(
      "bench-coverage",
      "Monte Carlo coverage and length of the rank confidence intervals, "
      "one-stage and two-stage");
  cov_cmd->add_option("--preset", cov_args.preset,
                      "table1 (n=100,d=3,k=5,p=0.5,L=160,lambda=1)");
  cov_cmd->add_option("--reps", cov_args.reps, "Replicates");
  cov_cmd->add_option("--B", cov_args.B, "Bootstrap replicates");
  cov_cmd->add_option("--seed", cov_args.seed, "Master seed");
  cov_cmd->add_option("--items", cov_args.items,
                      "Items of interest (0-based); default 0,1,2,5,6,7")
      ->delimiter(',');
  cov_cmd->add_option("--threads", cov_args.threads,
                      "Worker threads over replicates");
  cov_cmd->add_option("--out-dir", cov_args.out_dir,
                      "Directory for coverage.csv and the summary JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (sim_cmd->parsed()) return run_simulate(sim);
    if (fit_cmd->parsed()) return run_fit(fit_args, fit_cmd);
    if (debias_cmd->parsed()) return run_debias(debias_args);
    if (gof_cmd->parsed()) return run_gof(gof_args);
    if (rank_cmd->parsed()) return run_rank_ci(rank_args);
    if (topk_cmd->parsed()) return run_topk(topk_args);
    if (norm_cmd->parsed()) return run_bench_normality(norm_args);
    if (power_cmd->parsed()) return run_bench_power(power_args);
    if (cov_cmd->parsed()) return run_bench_coverage(cov_args);
  } catch (const btlcov::SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const btlcov::InferenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const btlcov::InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const btlcov::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
