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

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "btlcov/inference.hpp"
#include "btlcov/simulate.hpp"
#include "btlcov/stats.hpp"
#include "test_support.hpp"

using btlcov::BootstrapSpec;
using btlcov::ComparisonDataset;
using btlcov::DebiasedScores;
using btlcov::Edge;
using btlcov::FitConfig;
using btlcov::FitResult;
using btlcov::Matrix;
using btlcov::Params;
using btlcov::Vector;
using btlcov_test::edge_dataset;
using btlcov_test::random_instance;
using Catch::Matchers::WithinAbs;

namespace {

FitResult converged_fit(const ComparisonDataset& data, double lambda,
                        double tau = 0.0) {
  FitConfig config;
  config.lambda = lambda;
  config.tau = tau;
  FitResult result = btlcov::fit(data, config);
  REQUIRE(result.converged);
  return result;
}

// Hand-built fit result for degenerate constructions the solver refuses.
FitResult manual_fit(Params params, double lambda, double tau) {
  FitResult result;
  result.params = std::move(params);
  result.support = result.params.support();
  result.converged = true;
  result.lambda = lambda;
  result.tau = tau;
  result.eta_used = 1.0;
  result.grad_tol_used = 1.0;
  return result;
}

// Dense-matrix route to sigma_{m,k}: builds the block standardizer and the
// full Hessian explicitly.
double sigma_dense_oracle(const Params& point, const ComparisonDataset& data,
                          const Matrix& z, int m, int k,
                          const std::vector<bool>& active) {
  const int n = data.n();
  const int d = data.d();
  const Matrix h = btlcov::hessian(point, data);
  Matrix hd = Matrix::Zero(n + d, n + d);
  for (int i = 0; i < n; ++i) hd(i, i) = 1.0 / h(i, i);
  if (d > 0) {
    hd.bottomRightCorner(d, d) = h.bottomRightCorner(d, d).inverse();
  }
  Vector zt_m = Vector::Zero(n + d);
  Vector zt_k = Vector::Zero(n + d);
  if (active[m]) zt_m[m] = 1.0;
  if (active[k]) zt_k[k] = 1.0;
  if (d > 0) {
    zt_m.tail(d) = z.row(m).transpose();
    zt_k.tail(d) = z.row(k).transpose();
  }
  const Vector u = zt_m - zt_k;
  const double quad = u.dot(hd * h * hd * u);
  return std::sqrt(quad / static_cast<double>(data.l_ref()));
}

}  // namespace

TEST_CASE("debiasing is a no-op at an unpenalized optimum", "[inference]") {
  const auto inst = random_instance(10, 2, 0.7, 30, 2100, 0.4);
  const FitResult fit = converged_fit(inst.data, 0.0, 0.0);
  const DebiasedScores debiased = btlcov::debias_alpha(fit, inst.data);
  CHECK((debiased.alpha_debiased - fit.params.alpha).cwiseAbs().maxCoeff() <=
        1e-6);
}

TEST_CASE("debiased scores follow the ratio formula", "[inference]") {
  const auto inst = random_instance(10, 2, 0.7, 12, 2200, 0.5);
  const FitResult fit = converged_fit(inst.data, 0.3);
  const DebiasedScores debiased = btlcov::debias_alpha(fit, inst.data);

  const Vector grad = btlcov::gradient(fit.params, inst.data);
  const Matrix hess = btlcov::hessian(fit.params, inst.data);
  for (int i = 0; i < 10; ++i) {
    REQUIRE_THAT(debiased.alpha_debiased[i],
                 WithinAbs(fit.params.alpha[i] - grad[i] / hess(i, i),
                           1e-13));
    REQUIRE_THAT(debiased.hessian_diag[i], WithinAbs(hess(i, i), 1e-13));
  }
  const Matrix a_inv = hess.bottomRightCorner(2, 2).inverse();
  CHECK_THAT(debiased.a_inv_diag[0], WithinAbs(a_inv(0, 0), 1e-12));
  CHECK_THAT(debiased.a_inv_diag[1], WithinAbs(a_inv(1, 1), 1e-12));
  CHECK(debiased.beta == fit.params.beta);
}

TEST_CASE("debiasing rejects unusable inputs", "[inference]") {
  const auto inst = random_instance(6, 1, 0.9, 4, 2300);
  FitResult unconverged = manual_fit(Params::zero(6, 1), 0.1, 0.0);
  unconverged.converged = false;
  CHECK_THROWS_AS(btlcov::debias_alpha(unconverged, inst.data),
                  btlcov::InferenceError);

  // An isolated vertex has an empty Hessian diagonal entry.
  auto lonely = edge_dataset(3, {Edge{1, 0, 1, 2}}, 2);
  CHECK_THROWS_AS(
      btlcov::debias_alpha(manual_fit(Params::zero(3, 0), 0.0, 0.0), lonely),
      btlcov::InferenceError);
}

TEST_CASE("gof statistic standardizes the debiased scores", "[inference]") {
  const auto inst = random_instance(8, 2, 0.8, 20, 2400, 0.4);
  const FitResult fit = converged_fit(inst.data, 0.4);
  const DebiasedScores debiased = btlcov::debias_alpha(fit, inst.data);
  double expected = 0.0;
  for (int i = 0; i < 8; ++i) {
    expected = std::max(expected,
                        std::sqrt(debiased.hessian_diag[i] * 20.0) *
                            std::abs(debiased.alpha_debiased[i]));
  }
  CHECK_THAT(btlcov::gof_statistic(debiased, inst.data),
             WithinAbs(expected, 1e-12));
}

TEST_CASE("heterogeneous trials standardize by the incident mean",
          "[inference]") {
  // Item 1 touches edges with 4 and 10 trials; its standardization uses
  // their mean, while items 0 and 2 use their single incident count.
  auto data = ComparisonDataset(
      Matrix::Zero(3, 0), {Edge{1, 0, 2, 4}, Edge{2, 1, 5, 10}}, 4);
  CHECK(data.incident_mean_trials(0) == 4.0);
  CHECK(data.incident_mean_trials(1) == 7.0);
  CHECK(data.incident_mean_trials(2) == 10.0);

  const FitResult fit = converged_fit(data, 0.2, 0.0);
  const DebiasedScores debiased = btlcov::debias_alpha(fit, data);
  double expected = 0.0;
  for (int i = 0; i < 3; ++i) {
    expected = std::max(
        expected, std::sqrt(debiased.hessian_diag[i] *
                            data.incident_mean_trials(i)) *
                      std::abs(debiased.alpha_debiased[i]));
  }
  CHECK_THAT(btlcov::gof_statistic(debiased, data),
             WithinAbs(expected, 1e-12));

  BootstrapSpec spec;
  spec.B = 30;
  spec.seed = 5;
  CHECK_NOTHROW(btlcov::gof_test(fit, data, spec));
}

TEST_CASE("saturated data gives an all-zero bootstrap", "[inference]") {
  // Wins equal trials and the fitted gap saturates the probability to 1,
  // so every per-trial residual is exactly zero.
  auto data = edge_dataset(3, {Edge{1, 0, 4, 4}, Edge{2, 1, 4, 4}}, 4);
  Params params = Params::zero(3, 0);
  params.alpha << -40.0, 0.0, 40.0;
  BootstrapSpec spec;
  spec.B = 50;
  spec.seed = 9;
  const auto boot =
      btlcov::gof_bootstrap(manual_fit(params, 1.0, 0.0), data, spec);
  CHECK(boot.critical_value == 0.0);
  for (double g : boot.replicates) REQUIRE(g == 0.0);
}

TEST_CASE("single-edge bootstrap has the half-normal law", "[inference]") {
  // One edge, one trial, lost by the larger-index item, fitted tie: the
  // replicate is |0.5 w| / sqrt(0.25) = |w| for a standard normal w.
  auto data = edge_dataset(2, {Edge{1, 0, 0, 1}}, 1);
  BootstrapSpec spec;
  spec.B = 10000;
  spec.seed = 31;
  const auto boot =
      btlcov::gof_bootstrap(manual_fit(Params::zero(2, 0), 0.0, 0.0), data,
                            spec);
  // One-sample KS against the half-normal CDF 2 Phi(x) - 1.
  std::vector<double> sorted = boot.replicates;
  std::sort(sorted.begin(), sorted.end());
  double dist = 0.0;
  const double b = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = 2.0 * btlcov::normal_cdf(sorted[i]) - 1.0;
    dist = std::max(dist, std::abs((i + 1.0) / b - cdf));
    dist = std::max(dist, std::abs(i / b - cdf));
  }
  CHECK(dist < 0.02);
}

TEST_CASE("gof test decision, p-value, and determinism", "[inference]") {
  const auto inst = random_instance(10, 2, 0.8, 25, 2500, 0.4);
  const FitResult fit = converged_fit(inst.data, 0.4);
  BootstrapSpec spec;
  spec.B = 99;
  spec.seed = 12;
  const auto report = btlcov::gof_test(fit, inst.data, spec);

  long count = 0;
  for (double g : report.replicates) {
    if (g >= report.statistic) ++count;
  }
  CHECK(report.p_value == (1.0 + count) / 100.0);
  CHECK(report.reject == (report.statistic > report.critical_value));
  CHECK(report.support_size == static_cast<long>(fit.support.size()));

  const auto again = btlcov::gof_test(fit, inst.data, spec);
  CHECK(again.replicates == report.replicates);
  spec.seed = 13;
  const auto other = btlcov::gof_test(fit, inst.data, spec);
  CHECK(other.replicates != report.replicates);
}

TEST_CASE("empirical quantiles step with the level", "[inference]") {
  const std::vector<double> values = {5, 1, 4, 2, 3};
  CHECK(btlcov::detail::empirical_quantile(values, 0.2) == 1.0);
  CHECK(btlcov::detail::empirical_quantile(values, 0.4) == 2.0);
  CHECK(btlcov::detail::empirical_quantile(values, 0.41) == 3.0);
  CHECK(btlcov::detail::empirical_quantile(values, 1.0) == 5.0);
  double previous = -1.0;
  for (double level = 0.05; level <= 0.95; level += 0.05) {
    const double q = btlcov::detail::empirical_quantile(values, level);
    REQUIRE(q >= previous);
    previous = q;
  }
}

TEST_CASE("collapsed edge draws match explicit per-trial sums",
          "[inference]") {
  const long trials = 20;
  const long wins = 7;
  const double phi = 0.3;
  const double scale =
      btlcov::detail::collapsed_residual_scale(wins, trials, phi);
  CHECK_THAT(scale, WithinAbs(std::sqrt(7 * 0.49 + 13 * 0.09), 1e-12));

  btlcov::Rng rng(77);
  std::vector<double> collapsed(4000), explicit_sums(4000);
  for (auto& v : collapsed) v = scale * rng.normal();
  for (auto& v : explicit_sums) {
    double total = 0.0;
    for (long t = 0; t < trials; ++t) {
      const double residual = phi - (t < wins ? 1.0 : 0.0);
      total += residual * rng.normal();
    }
    v = total;
  }
  CHECK(btlcov::ks_two_sample(collapsed, explicit_sums) < 0.035);
}

TEST_CASE("sigma on a single tied edge has a closed form", "[inference]") {
  auto data = edge_dataset(2, {Edge{1, 0, 1, 1}}, 1);
  const Params point = Params::zero(2, 0);
  btlcov::PairwiseInference inference(point, data, Matrix::Zero(2, 0),
                                      Vector::Zero(2),
                                      std::vector<bool>(2, true));
  // Curvature 1/4 on the only edge: quadratic form 16, reference count 1.
  CHECK_THAT(inference.sigma(0, 1), WithinAbs(4.0, 1e-12));
  CHECK_THROWS_AS(inference.sigma(1, 1), btlcov::InvalidInputError);
}

TEST_CASE("sigma matches the dense-matrix oracle", "[inference]") {
  const auto inst = random_instance(12, 2, 0.7, 30, 2600, 0.4);
  const FitResult fit = converged_fit(inst.data, 0.5);
  const DebiasedScores debiased = btlcov::debias_alpha(fit, inst.data);
  const Matrix z = inst.data.covariates();
  const auto inference =
      btlcov::make_one_stage_inference(fit, debiased, inst.data, z);
  const std::vector<bool> all(12, true);
  for (int m = 0; m < 12; ++m) {
    for (int k = 0; k < m; ++k) {
      const double ours = inference.sigma(m, k);
      REQUIRE_THAT(ours, WithinAbs(
          sigma_dense_oracle(fit.params, inst.data, z, m, k, all), 1e-10));
      REQUIRE(ours > 0.0);
      REQUIRE(inference.sigma(k, m) == ours);
    }
  }
}

TEST_CASE("two-stage sigma drops the off-support indicator", "[inference]") {
  const auto inst = random_instance(12, 2, 0.7, 40, 2700, 0.5);
  const FitResult fit = converged_fit(inst.data, 1.0);
  const Params refit = btlcov::two_stage_refit(inst.data, fit.support);
  const Matrix z = inst.data.covariates();
  const auto inference =
      btlcov::make_two_stage_inference(refit, fit.support, inst.data, z);
  std::vector<bool> active(12, false);
  for (int i : fit.support) active[i] = true;
  for (int m = 0; m < 12; ++m) {
    for (int k = 0; k < m; ++k) {
      REQUIRE_THAT(inference.sigma(m, k),
                   WithinAbs(sigma_dense_oracle(refit, inst.data, z, m, k,
                                                active),
                             1e-10));
    }
  }
}

TEST_CASE("interval builders implement the counting rules", "[inference]") {
  const int n = 5;
  Vector theta(n);
  theta << 2.0, 1.0, 0.0, -1.0, -2.0;  // plug-in ranks 1..5
  std::vector<int> items = {0, 2, 4};
  Matrix sigma_rows = Matrix::Constant(items.size(), n, 0.5);

  SECTION("zero critical value collapses to plug-in ranks") {
    const auto built =
        btlcov::build_two_sided_intervals(theta, sigma_rows, items, 0.0);
    CHECK(built.intervals[0].lower == 1);
    CHECK(built.intervals[0].upper == 1);
    CHECK(built.intervals[1].lower == 3);
    CHECK(built.intervals[1].upper == 3);
    CHECK(built.intervals[2].lower == 5);
    CHECK(built.intervals[2].upper == 5);
    for (const auto& ci : built.pairwise[1]) {
      CHECK(ci.lower == ci.upper);  // point intervals
    }
  }
  SECTION("huge critical value gives the trivial interval") {
    const auto built =
        btlcov::build_two_sided_intervals(theta, sigma_rows, items, 1e9);
    for (const auto& interval : built.intervals) {
      CHECK(interval.lower == 1);
      CHECK(interval.upper == n);
    }
    const auto one_sided =
        btlcov::build_one_sided_intervals(theta, sigma_rows, items, 1e9);
    for (const auto& interval : one_sided) CHECK(interval.lower == 1);
  }
  SECTION("certified losses push the interval to [n, n]") {
    // Item 4 trails every other item by at least 1 = 2 * c * sigma.
    const auto built = btlcov::build_two_sided_intervals(
        theta, sigma_rows, items, 1.0);
    CHECK(built.intervals[2].lower == n);
    CHECK(built.intervals[2].upper == n);
  }
}

TEST_CASE("strong separation pins ranks and the top-K set", "[inference]") {
  // Intrinsic scores spaced far beyond any plausible standardization.
  const int n = 8;
  auto graph = btlcov::sample_er_graph(n, 1.0, 5);
  btlcov::Truth truth;
  truth.covariates = Matrix::Zero(n, 0);
  Vector alpha(n);
  for (int i = 0; i < n; ++i) alpha[i] = 3.0 * i;
  truth.params = Params(alpha, Vector::Zero(0));
  const ComparisonDataset data =
      btlcov::simulate_comparisons(truth, graph, 400, 606);

  const FitResult fit = converged_fit(data, 0.01);
  const DebiasedScores debiased = btlcov::debias_alpha(fit, data);
  const auto inference = btlcov::make_one_stage_inference(
      fit, debiased, data, Matrix::Zero(n, 0));
  BootstrapSpec spec;
  spec.B = 200;
  spec.seed = 4;

  const auto selected = btlcov::topk_screen(inference, 3, spec);
  CHECK(std::set<int>(selected.begin(), selected.end()) ==
        std::set<int>{5, 6, 7});

  const auto everything = btlcov::topk_screen(inference, n, spec);
  CHECK(everything.size() == static_cast<std::size_t>(n));

  const auto weakest =
      btlcov::rank_threshold_test(inference, 0, 1, spec);
  CHECK(weakest.reject);  // item 0 is certainly not rank 1
  const auto strongest =
      btlcov::rank_threshold_test(inference, 7, n, spec);
  CHECK_FALSE(strongest.reject);

  const auto report = btlcov::rank_ci(inference, {0}, spec);
  CHECK(report.intervals[0].lower == n);
  CHECK(report.intervals[0].upper == n);
}

TEST_CASE("rank bounds always contain the plug-in rank", "[inference]") {
  const auto inst = random_instance(10, 2, 0.8, 20, 2800, 0.5);
  const FitResult fit = converged_fit(inst.data, 0.5);
  const DebiasedScores debiased = btlcov::debias_alpha(fit, inst.data);
  const auto inference = btlcov::make_one_stage_inference(
      fit, debiased, inst.data, inst.data.covariates());
  BootstrapSpec spec;
  spec.B = 100;
  spec.seed = 21;
  std::vector<int> items(10);
  for (int i = 0; i < 10; ++i) items[i] = i;
  const auto report = btlcov::rank_ci(inference, items, spec);
  const Vector& theta = inference.theta_hat();
  for (const auto& interval : report.intervals) {
    int rank = 1;
    for (int k = 0; k < 10; ++k) {
      if (k != interval.item && theta[k] > theta[interval.item]) ++rank;
    }
    REQUIRE(interval.lower <= rank);
    REQUIRE(interval.upper >= rank);
  }
}

TEST_CASE("pairwise bootstrap is deterministic in the seed", "[inference]") {
  const auto inst = random_instance(9, 2, 0.8, 15, 2900, 0.4);
  const FitResult fit = converged_fit(inst.data, 0.4);
  const DebiasedScores debiased = btlcov::debias_alpha(fit, inst.data);
  const auto inference = btlcov::make_one_stage_inference(
      fit, debiased, inst.data, inst.data.covariates());
  BootstrapSpec spec;
  spec.B = 50;
  spec.seed = 8;
  const auto a = btlcov::rank_ci(inference, {0, 3}, spec);
  const auto b = btlcov::rank_ci(inference, {0, 3}, spec);
  CHECK(a.replicates == b.replicates);
  CHECK(a.critical_value == b.critical_value);
  spec.seed = 9;
  const auto c = btlcov::rank_ci(inference, {0, 3}, spec);
  CHECK(a.replicates != c.replicates);
}

TEST_CASE("one-sided statistics may be negative, two-sided never",
          "[inference]") {
  const auto inst = random_instance(9, 2, 0.8, 15, 3000, 0.4);
  const FitResult fit = converged_fit(inst.data, 0.4);
  const DebiasedScores debiased = btlcov::debias_alpha(fit, inst.data);
  const auto inference = btlcov::make_one_stage_inference(
      fit, debiased, inst.data, inst.data.covariates());
  const std::vector<int> items = {2};
  const Matrix sigma_rows = inference.sigma_rows(items);
  BootstrapSpec spec;
  spec.B = 200;
  spec.seed = 10;
  for (double g :
       inference.bootstrap_replicates(items, sigma_rows, spec, true)) {
    REQUIRE(g >= 0.0);
  }
  // A single-item one-sided max over 8 pairs dips negative eventually.
  bool any_negative = false;
  for (double g :
       inference.bootstrap_replicates(items, sigma_rows, spec, false)) {
    any_negative = any_negative || g < 0.0;
  }
  CHECK(any_negative);
}

TEST_CASE("inference validates the Z matrix shape", "[inference]") {
  const auto inst = random_instance(6, 2, 0.9, 10, 3100);
  const FitResult fit = converged_fit(inst.data, 0.3);
  const DebiasedScores debiased = btlcov::debias_alpha(fit, inst.data);
  CHECK_THROWS_AS(btlcov::make_one_stage_inference(fit, debiased, inst.data,
                                                   Matrix::Zero(5, 2)),
                  btlcov::InvalidInputError);
}
