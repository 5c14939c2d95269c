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

#ifndef BTLCOV_SIMULATE_HPP_
#define BTLCOV_SIMULATE_HPP_

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "btlcov/diagnostics.hpp"
#include "btlcov/graph.hpp"
#include "btlcov/inference.hpp"
#include "btlcov/model.hpp"
#include "btlcov/rng.hpp"
#include "btlcov/solver.hpp"
#include "btlcov/stats.hpp"
#include "btlcov/types.hpp"

namespace btlcov {

// Synthetic ground-truth description. Intrinsic scores are either
// magnitude-uniform with random signs on the support, or the
// signal-strength profile alpha(rho) = (3 rho / 100) * omega with omega
// drawn once from Uniform([-log 5, -1] u [1, log 5]) on the support.
struct Scenario {
  int n = 0;
  int d = 0;
  int k = 0;
  double p = 0.5;
  long trials = 1;

  enum class AlphaLaw { kSignedUniform, kSignalProfile };
  AlphaLaw alpha_law = AlphaLaw::kSignedUniform;
  double alpha_min = 0.3;
  double alpha_max = 0.3 * 1.6094379124341003;  // 0.3 * log(5)
  double rho = 0.0;
  double beta_norm_coeff = 0.5;
  std::vector<int> support;  // empty selects {0, ..., k-1}
  std::uint64_t seed = 0;

  std::vector<int> resolved_support() const {
    if (!support.empty()) return support;
    std::vector<int> s(k);
    for (int i = 0; i < k; ++i) s[i] = i;
    return s;
  }

  void validate() const {
    if (n < 2) throw InvalidInputError("scenario: need n >= 2");
    if (k > n || k < 0) throw InvalidInputError("scenario: need 0 <= k <= n");
    if (2 * k + d + 1 > n) {
      throw InvalidInputError("scenario: 2k+d+1 = " +
                              std::to_string(2 * k + d + 1) +
                              " exceeds n; not identifiable");
    }
    if (p < 0.0 || p > 1.0) {
      throw InvalidInputError("scenario: p must lie in [0, 1]");
    }
    if (trials < 1) throw InvalidInputError("scenario: trials must be >= 1");
  }
};

struct Truth {
  Params params;
  Matrix covariates;  // already centered and rescaled
};

// Ground truth, deterministic in scenario.seed. Draw order: covariate
// entries row by row, then the coefficient direction, then the intrinsic
// scores on the support in increasing index order. Covariate columns are
// centered and globally scaled so the max row norm equals
// sqrt((d+1)/n) exactly.
inline Truth generate_truth(const Scenario& scenario) {
  scenario.validate();
  const int n = scenario.n;
  const int d = scenario.d;
  Rng rng(scenario.seed);

  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) x(i, c) = rng.uniform(-0.5, 0.5);
  }
  if (d > 0) {
    const Vector col_means = x.colwise().mean();
    x.rowwise() -= col_means.transpose();
    double max_norm = 0.0;
    for (int i = 0; i < n; ++i) max_norm = std::max(max_norm, x.row(i).norm());
    const double bound =
        std::sqrt(static_cast<double>(d + 1) / static_cast<double>(n));
    if (max_norm > 0.0) x *= bound / max_norm;
  }

  Vector beta = Vector::Zero(d);
  if (d > 0) {
    for (int c = 0; c < d; ++c) beta[c] = rng.normal();
    beta *= scenario.beta_norm_coeff *
            std::sqrt(static_cast<double>(n) / static_cast<double>(d + 1)) /
            beta.norm();
  }

  Vector alpha = Vector::Zero(n);
  const std::vector<int> support = scenario.resolved_support();
  for (int i : support) {
    if (i < 0 || i >= n) {
      throw InvalidInputError("scenario: support index out of range");
    }
    if (scenario.alpha_law == Scenario::AlphaLaw::kSignedUniform) {
      const double magnitude =
          rng.uniform(scenario.alpha_min, scenario.alpha_max);
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      alpha[i] = sign * magnitude;
    } else {
      const double magnitude = rng.uniform(1.0, std::log(5.0));
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      alpha[i] = (3.0 * scenario.rho / 100.0) * sign * magnitude;
    }
  }

  return Truth{Params(std::move(alpha), std::move(beta)), std::move(x)};
}

// Simulated comparisons along the edges of `graph`: wins on edge (i, j)
// follow Binomial(trials, P(i beats j)) via `trials` Bernoulli draws per
// edge in canonical edge order, one uniform per trial.
inline ComparisonDataset simulate_comparisons(const Truth& truth,
                                              const ComparisonGraph& graph,
                                              long trials,
                                              std::uint64_t seed) {
  if (trials < 1) {
    throw InvalidInputError("simulate_comparisons: trials must be >= 1");
  }
  Rng rng(seed);
  const Vector scores = truth.params.alpha + truth.covariates * truth.params.beta;
  std::vector<Edge> edges;
  edges.reserve(graph.edges.size());
  for (const auto& [i, j] : graph.edges) {
    const double phi = sigmoid(scores[i] - scores[j]);
    edges.push_back(Edge{i, j, rng.binomial(trials, phi), trials});
  }
  return ComparisonDataset(truth.covariates, std::move(edges), trials);
}

// Heterogeneous variant: one trial count per edge; L_ref must be supplied.
inline ComparisonDataset simulate_comparisons(const Truth& truth,
                                              const ComparisonGraph& graph,
                                              const std::vector<long>& trials,
                                              long l_ref, std::uint64_t seed) {
  if (trials.size() != graph.edges.size()) {
    throw InvalidInputError(
        "simulate_comparisons: need one trial count per edge");
  }
  Rng rng(seed);
  const Vector scores = truth.params.alpha + truth.covariates * truth.params.beta;
  std::vector<Edge> edges;
  edges.reserve(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto& [i, j] = graph.edges[e];
    const double phi = sigmoid(scores[i] - scores[j]);
    edges.push_back(Edge{i, j, rng.binomial(trials[e], phi), trials[e]});
  }
  return ComparisonDataset(truth.covariates, std::move(edges), l_ref);
}

namespace detail {

// Runs fn(0..total-1), at most `threads` at a time. Work items must be
// independent; each writes its own output slot, so results do not depend
// on scheduling.
template <typename Fn>
void parallel_for(long total, int threads, Fn&& fn) {
  if (threads <= 1 || total <= 1) {
    for (long i = 0; i < total; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  auto worker = [&]() {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= total) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int count = static_cast<int>(
      std::min<long>(threads, total));
  pool.reserve(count);
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

// Per-replicate stream seeds: graph and outcomes consume distinct
// substreams of the master seed.
inline std::uint64_t graph_seed(std::uint64_t master, long rep) {
  return derive_seed(master, 2 * static_cast<std::uint64_t>(rep));
}
inline std::uint64_t data_seed(std::uint64_t master, long rep) {
  return derive_seed(master, 2 * static_cast<std::uint64_t>(rep) + 1);
}

}  // namespace detail

struct NormalityRow {
  long rep = 0;
  double rv1 = 0.0;
  double rv2 = 0.0;
};

struct NormalitySummary {
  double rv1_mean = 0.0, rv1_sd = 0.0, rv1_ks = 0.0;
  double rv2_mean = 0.0, rv2_sd = 0.0, rv2_ks = 0.0;
};

struct NormalityResult {
  std::vector<NormalityRow> rows;
  NormalitySummary summary;
};

struct NormalityConfig {
  Scenario scenario;
  double lambda = 3.0;
  double tau = 0.0;
  long reps = 500;
  std::uint64_t seed = 1;
  int rv1_item = -1;  // -1 selects the first in-support item
  int rv2_coordinate = 0;
  int threads = 1;
};

// Replicates the normal-approximation study: per replicate, standardized
// errors of the debiased score of one item (rv1) and of one coefficient
// (rv2). Both are approximately N(0, 1) when the theory applies.
inline NormalityResult run_normality_experiment(const NormalityConfig& config) {
  if (config.reps < 1) {
    throw InvalidInputError("normality: reps must be >= 1");
  }
  const Truth truth = generate_truth(config.scenario);
  const std::vector<int> support = config.scenario.resolved_support();
  const int item = config.rv1_item >= 0
                       ? config.rv1_item
                       : (support.empty() ? 0 : support.front());
  if (item >= config.scenario.n) {
    throw InvalidInputError("normality: rv1 item out of range");
  }
  if (config.scenario.d == 0) {
    throw InvalidInputError("normality: needs d >= 1 for rv2");
  }
  if (config.rv2_coordinate < 0 ||
      config.rv2_coordinate >= config.scenario.d) {
    throw InvalidInputError("normality: rv2 coordinate out of range");
  }

  NormalityResult result;
  result.rows.resize(config.reps);
  detail::parallel_for(config.reps, config.threads, [&](long rep) {
    const ComparisonGraph graph =
        sample_er_graph(config.scenario.n, config.scenario.p,
                        detail::graph_seed(config.seed, rep));
    const ComparisonDataset data = simulate_comparisons(
        truth, graph, config.scenario.trials,
        detail::data_seed(config.seed, rep));
    FitConfig fit_config;
    fit_config.lambda = config.lambda;
    fit_config.tau = config.tau;
    const FitResult fit_result = fit(data, fit_config);
    const DebiasedScores debiased = debias_alpha(fit_result, data);

    const double l = static_cast<double>(config.scenario.trials);
    NormalityRow row;
    row.rep = rep;
    row.rv1 = std::sqrt(debiased.hessian_diag[item] * l) *
              (debiased.alpha_debiased[item] - truth.params.alpha[item]);
    row.rv2 = std::sqrt(l) *
              (fit_result.params.beta[config.rv2_coordinate] -
               truth.params.beta[config.rv2_coordinate]) /
              std::sqrt(debiased.a_inv_diag[config.rv2_coordinate]);
    result.rows[rep] = row;
  });

  std::vector<double> rv1, rv2;
  rv1.reserve(config.reps);
  rv2.reserve(config.reps);
  for (const auto& row : result.rows) {
    rv1.push_back(row.rv1);
    rv2.push_back(row.rv2);
  }
  result.summary.rv1_mean = mean(rv1);
  result.summary.rv1_sd = sample_sd(rv1);
  result.summary.rv1_ks = ks_vs_standard_normal(rv1);
  result.summary.rv2_mean = mean(rv2);
  result.summary.rv2_sd = sample_sd(rv2);
  result.summary.rv2_ks = ks_vs_standard_normal(rv2);
  return result;
}

struct PowerRow {
  double rho = 0.0;
  long rep = 0;
  double statistic = 0.0;
  double critical_value = 0.0;
  bool reject = false;
};

struct PowerSummary {
  std::vector<double> rho;
  std::vector<double> rejection_rate;
};

struct PowerResult {
  std::vector<PowerRow> rows;
  PowerSummary summary;
};

struct PowerConfig {
  Scenario scenario;  // alpha_law is forced to the signal profile
  std::vector<double> rho_grid = {0, 1, 2, 3, 4, 5};
  double lambda = 0.5;
  double tau = 0.0;
  long reps = 100;
  long B = 200;
  double alpha_level = 0.05;
  std::uint64_t seed = 1;
  int threads = 1;
};

// Size/power study of the goodness-of-fit test over a grid of signal
// strengths. The profile direction omega is drawn once from the scenario
// seed and shared across the grid; rho = 0 is the null.
inline PowerResult run_power_experiment(const PowerConfig& config) {
  if (config.reps < 1) throw InvalidInputError("power: reps must be >= 1");
  PowerResult result;
  result.rows.resize(config.rho_grid.size() * config.reps);
  for (std::size_t g = 0; g < config.rho_grid.size(); ++g) {
    Scenario scenario = config.scenario;
    scenario.alpha_law = Scenario::AlphaLaw::kSignalProfile;
    scenario.rho = config.rho_grid[g];
    const Truth truth = generate_truth(scenario);
    const std::uint64_t grid_seed =
        derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(g));
    detail::parallel_for(config.reps, config.threads, [&](long rep) {
      const ComparisonGraph graph = sample_er_graph(
          scenario.n, scenario.p, detail::graph_seed(grid_seed, rep));
      const ComparisonDataset data = simulate_comparisons(
          truth, graph, scenario.trials, detail::data_seed(grid_seed, rep));
      FitConfig fit_config;
      fit_config.lambda = config.lambda;
      fit_config.tau = config.tau;
      const FitResult fit_result = fit(data, fit_config);
      BootstrapSpec spec;
      spec.B = config.B;
      spec.alpha_level = config.alpha_level;
      spec.seed = derive_seed(grid_seed, 5000 + static_cast<std::uint64_t>(rep));
      const GofReport report = gof_test(fit_result, data, spec);
      PowerRow row;
      row.rho = scenario.rho;
      row.rep = rep;
      row.statistic = report.statistic;
      row.critical_value = report.critical_value;
      row.reject = report.reject;
      result.rows[g * config.reps + rep] = row;
    });
  }
  for (std::size_t g = 0; g < config.rho_grid.size(); ++g) {
    long rejections = 0;
    for (long rep = 0; rep < config.reps; ++rep) {
      if (result.rows[g * config.reps + rep].reject) ++rejections;
    }
    result.summary.rho.push_back(config.rho_grid[g]);
    result.summary.rejection_rate.push_back(
        static_cast<double>(rejections) / static_cast<double>(config.reps));
  }
  return result;
}

struct CoverageRow {
  int item = 0;
  long rep = 0;
  bool cover_theta = false;
  bool cover_rank = false;
  double length = 0.0;
  std::string stage;  // "one" or "two"
};

struct CoverageItemSummary {
  int item = 0;
  int true_rank = 0;
  double one_stage_rank_coverage = 0.0;
  double one_stage_theta_coverage = 0.0;
  double one_stage_mean_length = 0.0;
  double one_stage_sd_length = 0.0;
  double two_stage_rank_coverage = 0.0;
  double two_stage_theta_coverage = 0.0;
  double two_stage_mean_length = 0.0;
  double two_stage_sd_length = 0.0;
};

struct CoverageResult {
  std::vector<CoverageRow> rows;
  std::vector<CoverageItemSummary> summary;
};

struct CoverageConfig {
  Scenario scenario;
  std::vector<int> items;
  double lambda = 1.0;
  double tau = 0.0;
  long reps = 100;
  long B = 200;
  double alpha_level = 0.05;
  std::uint64_t seed = 1;
  int threads = 1;
};

// Rank-confidence-interval study: empirical coverage of the rank interval
// and of the simultaneous score-difference intervals, plus interval
// lengths, for both the one-stage (debiased) and two-stage (refitted)
// constructions. Out-of-sample covariates are the training covariates.
inline CoverageResult run_coverage_experiment(const CoverageConfig& config) {
  if (config.reps < 1) throw InvalidInputError("coverage: reps must be >= 1");
  if (config.items.empty()) {
    throw InvalidInputError("coverage: need at least one item");
  }
  for (int m : config.items) {
    if (m < 0 || m >= config.scenario.n) {
      throw InvalidInputError("coverage: item " + std::to_string(m) +
                              " is outside 0.." +
                              std::to_string(config.scenario.n - 1));
    }
  }
  const Truth truth = generate_truth(config.scenario);
  const Vector true_scores =
      truth.params.alpha + truth.covariates * truth.params.beta;
  const int n = config.scenario.n;
  std::vector<int> true_rank(n);
  for (int m = 0; m < n; ++m) {
    int above = 0;
    for (int k = 0; k < n; ++k) {
      if (k != m && true_scores[k] > true_scores[m]) ++above;
    }
    true_rank[m] = 1 + above;
  }

  const std::size_t items_count = config.items.size();
  CoverageResult result;
  result.rows.resize(2 * items_count * config.reps);

  detail::parallel_for(config.reps, config.threads, [&](long rep) {
    const ComparisonGraph graph =
        sample_er_graph(config.scenario.n, config.scenario.p,
                        detail::graph_seed(config.seed, rep));
    const ComparisonDataset data = simulate_comparisons(
        truth, graph, config.scenario.trials,
        detail::data_seed(config.seed, rep));
    FitConfig fit_config;
    fit_config.lambda = config.lambda;
    fit_config.tau = config.tau;
    const FitResult fit_result = fit(data, fit_config);
    const DebiasedScores debiased = debias_alpha(fit_result, data);
    const Params refit = two_stage_refit(data, fit_result.support);

    const PairwiseInference one_stage =
        make_one_stage_inference(fit_result, debiased, data, truth.covariates);
    const PairwiseInference two_stage = make_two_stage_inference(
        refit, fit_result.support, data, truth.covariates);

    for (std::size_t mi = 0; mi < items_count; ++mi) {
      const int m = config.items[mi];
      const std::array<const PairwiseInference*, 2> stages = {&one_stage,
                                                              &two_stage};
      const std::array<const char*, 2> stage_names = {"one", "two"};
      for (int s = 0; s < 2; ++s) {
        BootstrapSpec spec;
        spec.B = config.B;
        spec.alpha_level = config.alpha_level;
        spec.seed = derive_seed(
            config.seed,
            90000 + 4 * (static_cast<std::uint64_t>(rep) * items_count + mi) +
                static_cast<std::uint64_t>(s));
        const RankCiReport report = rank_ci(*stages[s], {m}, spec);

        bool cover_theta = true;
        for (const PairwiseCi& ci : report.pairwise[0]) {
          const double true_diff = true_scores[ci.k] - true_scores[m];
          if (true_diff < ci.lower || true_diff > ci.upper) {
            cover_theta = false;
            break;
          }
        }
        const RankInterval& interval = report.intervals[0];
        CoverageRow row;
        row.item = m;
        row.rep = rep;
        row.cover_theta = cover_theta;
        row.cover_rank = true_rank[m] >= interval.lower &&
                         true_rank[m] <= interval.upper;
        row.length = static_cast<double>(interval.upper - interval.lower);
        row.stage = stage_names[s];
        result.rows[2 * (rep * items_count + mi) + s] = row;
      }
    }
  });

  for (std::size_t mi = 0; mi < items_count; ++mi) {
    CoverageItemSummary summary;
    summary.item = config.items[mi];
    summary.true_rank = true_rank[config.items[mi]];
    std::vector<double> lengths_one, lengths_two;
    long rank_one = 0, rank_two = 0, theta_one = 0, theta_two = 0;
    for (long rep = 0; rep < config.reps; ++rep) {
      const CoverageRow& one = result.rows[2 * (rep * items_count + mi)];
      const CoverageRow& two = result.rows[2 * (rep * items_count + mi) + 1];
      rank_one += one.cover_rank ? 1 : 0;
      theta_one += one.cover_theta ? 1 : 0;
      lengths_one.push_back(one.length);
      rank_two += two.cover_rank ? 1 : 0;
      theta_two += two.cover_theta ? 1 : 0;
      lengths_two.push_back(two.length);
    }
    const double reps = static_cast<double>(config.reps);
    summary.one_stage_rank_coverage = static_cast<double>(rank_one) / reps;
    summary.one_stage_theta_coverage = static_cast<double>(theta_one) / reps;
    summary.one_stage_mean_length = mean(lengths_one);
    summary.one_stage_sd_length = sample_sd(lengths_one);
    summary.two_stage_rank_coverage = static_cast<double>(rank_two) / reps;
    summary.two_stage_theta_coverage = static_cast<double>(theta_two) / reps;
    summary.two_stage_mean_length = mean(lengths_two);
    summary.two_stage_sd_length = sample_sd(lengths_two);
    result.summary.push_back(summary);
  }
  return result;
}

}  // namespace btlcov

#endif  // BTLCOV_SIMULATE_HPP_
