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

// Production-scale walk of the tournament-log path: long-format
// ingestion, heterogeneous per-pair counts, largest-component
// restriction, penalty sweep, goodness-of-fit, and out-of-sample
// two-stage rank intervals.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "btlcov/btlcov.hpp"

using btlcov::ComparisonDataset;
using btlcov::Matrix;
using btlcov::Params;
using btlcov::Vector;

TEST_CASE("tournament-log pipeline at scale", "[scale]") {
  const int n = 804;  // 3 of these never play and get dropped
  const int d = 3;
  btlcov::Rng rng(20260810);

  // Two magnitude covariates plus a sparse binary flag, in raw units.
  Matrix raw(n, d);
  for (int i = 0; i < n; ++i) {
    raw(i, 0) = rng.uniform(3.0, 5.0);
    raw(i, 1) = rng.uniform(3.5, 4.5);
    raw(i, 2) = rng.uniform() < 0.06 ? 1.0 : 0.0;
  }

  // Sparse intrinsic scores on ~5% of items; coefficients in raw units.
  Vector alpha = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (rng.uniform() < 0.05) {
      alpha[i] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.0);
    }
  }
  Vector beta_raw(d);
  beta_raw << 0.8, -0.5, 0.9;
  const Vector scores = alpha + raw * beta_raw;

  // 50k single comparisons between random pairs of the first n-3 items;
  // repeated pairings aggregate into heterogeneous trial counts.
  const auto dir = std::filesystem::temp_directory_path() / "btlcov_scale";
  std::filesystem::create_directories(dir);
  const std::string cov_path = (dir / "cov.csv").string();
  const std::string cmp_path = (dir / "cmp.csv").string();
  {
    std::ofstream cov(cov_path);
    cov << "item_id,x1,x2,x3\n";
    for (int i = 0; i < n; ++i) {
      cov << i << "," << raw(i, 0) << "," << raw(i, 1) << "," << raw(i, 2)
          << "\n";
    }
    std::ofstream cmp(cmp_path);
    cmp << "winner,loser\n";
    for (int match = 0; match < 50000; ++match) {
      const int a = static_cast<int>(rng.next_u64() % (n - 3));
      int b = static_cast<int>(rng.next_u64() % (n - 3));
      while (b == a) b = static_cast<int>(rng.next_u64() % (n - 3));
      const double p_a = btlcov::sigmoid(scores[a] - scores[b]);
      if (rng.uniform() < p_a) {
        cmp << a << "," << b << "\n";
      } else {
        cmp << b << "," << a << "\n";
      }
    }
  }

  const btlcov::DatasetLoad load = btlcov::load_dataset(cov_path, cmp_path);
  REQUIRE(load.data.n() == n);
  REQUIRE(load.data.l_ref() == 1);  // median pairing count is a single match
  bool heterogeneous = false;
  for (const auto& edge : load.data.edges()) {
    if (edge.trials > 1) heterogeneous = true;
  }
  REQUIRE(heterogeneous);
  REQUIRE(load.covariate_scale > 1.0);
  REQUIRE_FALSE(btlcov::is_connected(load.data));

  const auto restricted = btlcov::largest_component_restrict(load.data);
  const ComparisonDataset& data = restricted.data;
  REQUIRE(data.n() == n - 3);
  REQUIRE(btlcov::is_connected(data));

  // Penalty sweep: support shrinks as the penalty grows; the
  // goodness-of-fit decision is stable across it.
  std::vector<double> lambdas = {10.0, 30.0};
  std::vector<std::size_t> support_sizes;
  btlcov::FitResult strong_fit;
  for (double lambda : lambdas) {
    btlcov::FitConfig config;
    config.lambda = lambda;
    const btlcov::FitResult fit = btlcov::fit(data, config);
    REQUIRE(fit.converged);
    support_sizes.push_back(fit.support.size());

    btlcov::BootstrapSpec spec;
    spec.B = 100;
    spec.seed = 17;
    const btlcov::GofReport report = btlcov::gof_test(fit, data, spec);
    REQUIRE(report.statistic > report.critical_value);  // alpha != 0 holds
    REQUIRE(report.reject);
    if (lambda == 30.0) strong_fit = fit;
  }
  REQUIRE(support_sizes[1] < support_sizes[0]);
  REQUIRE(support_sizes[1] > 0);

  // Out-of-sample covariates: twenty items get the binary flag switched
  // on with a bumped first stat, in raw units divided by the training
  // scale (the CLI's convention for --z files).
  Matrix z_raw = raw.topRows(data.n());
  std::vector<int> targets;
  for (int i = 40; i < 60; ++i) targets.push_back(i);
  for (int i : targets) {
    z_raw(i, 0) += 0.3;
    z_raw(i, 2) = 1.0;
  }
  const Matrix z = z_raw / load.covariate_scale;

  const Params refit = btlcov::two_stage_refit(data, strong_fit.support);
  const auto inference =
      btlcov::make_two_stage_inference(refit, strong_fit.support, data, z);
  btlcov::BootstrapSpec spec;
  spec.B = 100;
  spec.seed = 23;
  const btlcov::RankCiReport report =
      btlcov::rank_ci(inference, targets, spec);
  REQUIRE(report.critical_value > 0.0);
  REQUIRE(report.intervals.size() == targets.size());
  for (const auto& interval : report.intervals) {
    REQUIRE(interval.lower >= 1);
    REQUIRE(interval.lower <= interval.upper);
    REQUIRE(interval.upper <= data.n());
  }

  // The boost is worth ~1.1 in raw score (hundreds of rank positions
  // here), so the boosted intervals should certifiably beat the same
  // items' intervals under the unchanged covariates for most targets.
  const auto counterfactual = btlcov::make_two_stage_inference(
      refit, strong_fit.support, data, data.covariates());
  const btlcov::RankCiReport base_report =
      btlcov::rank_ci(counterfactual, targets, spec);
  long improved = 0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (report.intervals[t].upper < base_report.intervals[t].lower) {
      ++improved;
    }
  }
  REQUIRE(improved >= static_cast<long>(targets.size() / 2));

  // One-stage inference on the same targets stays mechanically sound
  // even with single-trial edges (wider intervals, same contracts).
  const btlcov::DebiasedScores debiased =
      btlcov::debias_alpha(strong_fit, data);
  const auto one_stage = btlcov::make_one_stage_inference(
      strong_fit, debiased, data, z);
  const btlcov::RankCiReport one_report =
      btlcov::rank_ci(one_stage, targets, spec);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    REQUIRE(one_report.intervals[t].lower <= report.intervals[t].upper);
    REQUIRE(one_report.intervals[t].upper >= 1);
  }

  std::filesystem::remove_all(dir);
}
