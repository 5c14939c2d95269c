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

#ifndef BTLCOV_INFERENCE_HPP_
#define BTLCOV_INFERENCE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "btlcov/model.hpp"
#include "btlcov/solver.hpp"
#include "btlcov/types.hpp"

namespace btlcov {

// Debiased intrinsic scores: a one-step Newton correction that removes the
// shrinkage of the penalized estimate,
//   alpha_d_i = alpha_i - grad_i / hess_ii.
// The coefficient block is not penalized toward a sparse pattern, so beta
// is passed through undebiased.
struct DebiasedScores {
  Vector alpha_debiased;  // n
  Vector hessian_diag;    // n, (grad^2 loss)_ii at the fitted point
  Vector beta;            // d, copied from the fit
  Vector a_inv_diag;      // d, diagonal of inverse of the beta Hessian block
};

struct BootstrapSpec {
  long B = 200;
  std::uint64_t seed = 0;
  double alpha_level = 0.05;

  void validate() const {
    if (B < 1) throw InvalidInputError("bootstrap: B must be >= 1");
    if (!(alpha_level > 0.0 && alpha_level < 1.0)) {
      throw InvalidInputError("bootstrap: alpha_level must lie in (0, 1)");
    }
  }
};

enum class IntervalKind { kTwoSided, kOneSidedLower };

// Integer confidence bounds on an item's population rank (rank 1 = highest
// latent score).
struct RankInterval {
  int item = 0;
  int lower = 1;
  int upper = 1;
  IntervalKind kind = IntervalKind::kTwoSided;
};

// Simultaneous confidence interval for theta_k - theta_m.
struct PairwiseCi {
  int k = 0;
  double lower = 0.0;
  double upper = 0.0;
};

namespace detail {

// Standard deviation of the collapsed per-edge multiplier sum: with `wins`
// of `trials` trials won and fitted probability phi, the per-trial
// multiplier sum sum_l (phi - y_l) omega_l is exactly
// N(0, wins (1-phi)^2 + (trials-wins) phi^2).
inline double collapsed_residual_scale(long wins, long trials, double phi) {
  const double w = static_cast<double>(wins);
  const double l = static_cast<double>(trials);
  return std::sqrt(w * (1.0 - phi) * (1.0 - phi) +
                   (l - w) * phi * phi);
}

// Empirical (1 - alpha) quantile: smallest value with empirical CDF
// >= level, i.e. the ceil(level * B)-th order statistic.
inline double empirical_quantile(std::vector<double> values, double level) {
  std::sort(values.begin(), values.end());
  const long b = static_cast<long>(values.size());
  long index = static_cast<long>(std::ceil(level * static_cast<double>(b)));
  index = std::clamp(index, 1L, b);
  return values[index - 1];
}

}  // namespace detail

inline DebiasedScores debias_alpha(const FitResult& fit,
                                   const ComparisonDataset& data) {
  if (!fit.converged) {
    throw InferenceError("debias_alpha: fit did not converge");
  }
  const int n = data.n();
  const int d = data.d();
  const HessianParts parts = hessian_parts(fit.params, data);
  const Vector grad = gradient(fit.params, data);
  DebiasedScores out;
  out.alpha_debiased.resize(n);
  out.hessian_diag = parts.alpha_diag;
  for (int i = 0; i < n; ++i) {
    if (parts.alpha_diag[i] <= 0.0) {
      throw InferenceError("debias_alpha: item " + std::to_string(i) +
                           " has zero Hessian diagonal (no comparisons)");
    }
    out.alpha_debiased[i] = fit.params.alpha[i] - grad[i] / parts.alpha_diag[i];
  }
  out.beta = fit.params.beta;
  out.a_inv_diag.resize(d);
  if (d > 0) {
    const Matrix a_inv = parts.beta_block.inverse();
    if (!a_inv.allFinite()) {
      throw InferenceError("debias_alpha: coefficient Hessian block is "
                           "singular");
    }
    out.a_inv_diag = a_inv.diagonal();
  }
  return out;
}

// Max-type statistic for H0: alpha = 0 (covariates fully explain the
// scores): T1 = max_i | sqrt(hess_ii * L_i) * alpha_d_i | with L_i the
// edge-incident mean trial count of item i (equal to L_ref for
// homogeneous data).
inline double gof_statistic(const DebiasedScores& debiased,
                            const ComparisonDataset& data) {
  double stat = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const double scale =
        std::sqrt(debiased.hessian_diag[i] * data.incident_mean_trials(i));
    stat = std::max(stat, scale * std::abs(debiased.alpha_debiased[i]));
  }
  return stat;
}

struct GofBootstrap {
  double critical_value = 0.0;
  std::vector<double> replicates;
};

// Gaussian multiplier bootstrap for the max statistic. Each replicate
// draws one N(0,1) multiplier per edge (the per-trial multipliers are
// collapsed into their exact Gaussian law; see
// detail::collapsed_residual_scale) and evaluates
//   max_i | sqrt(L_i / hess_ii) / L_ref * sum_{e at i} sign_e(i) s_e xi_e |.
// Replicate b uses the stream derive_seed(spec.seed, b), so results do not
// depend on scheduling.
inline GofBootstrap gof_bootstrap(const FitResult& fit,
                                  const ComparisonDataset& data,
                                  const BootstrapSpec& spec) {
  spec.validate();
  const int n = data.n();
  const HessianParts parts = hessian_parts(fit.params, data);
  const Vector delta = edge_logits(fit.params, data);
  const auto& edges = data.edges();

  std::vector<double> edge_scale(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    edge_scale[e] = detail::collapsed_residual_scale(
        edges[e].wins, edges[e].trials, sigmoid(delta[e]));
  }
  Vector item_scale(n);
  for (int i = 0; i < n; ++i) {
    if (parts.alpha_diag[i] <= 0.0) {
      // Saturated fits have zero curvature; that is harmless only when
      // the incident residual scales vanish too, in which case the item
      // contributes exactly zero to every replicate.
      for (std::size_t e = 0; e < edges.size(); ++e) {
        if ((edges[e].i == i || edges[e].j == i) && edge_scale[e] != 0.0) {
          throw InferenceError("gof_bootstrap: item " + std::to_string(i) +
                               " has zero Hessian diagonal but nonzero "
                               "residuals");
        }
      }
      item_scale[i] = 0.0;
      continue;
    }
    item_scale[i] = std::sqrt(data.incident_mean_trials(i) /
                              parts.alpha_diag[i]) /
                    static_cast<double>(data.l_ref());
  }

  GofBootstrap out;
  out.replicates.resize(spec.B);
  Vector coord(n);
  for (long b = 0; b < spec.B; ++b) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(b)));
    coord.setZero();
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const double draw = edge_scale[e] * rng.normal();
      coord[edges[e].i] += draw;
      coord[edges[e].j] -= draw;
    }
    double stat = 0.0;
    for (int i = 0; i < n; ++i) {
      stat = std::max(stat, item_scale[i] * std::abs(coord[i]));
    }
    out.replicates[b] = stat;
  }
  out.critical_value =
      detail::empirical_quantile(out.replicates, 1.0 - spec.alpha_level);
  return out;
}

struct GofReport {
  double statistic = 0.0;
  double critical_value = 0.0;
  double p_value = 1.0;
  bool reject = false;
  double alpha_level = 0.05;
  long B = 0;
  std::uint64_t seed = 0;
  long support_size = 0;
  std::vector<double> replicates;
};

inline GofReport gof_test(const FitResult& fit, const ComparisonDataset& data,
                          const BootstrapSpec& spec) {
  const DebiasedScores debiased = debias_alpha(fit, data);
  GofBootstrap boot = gof_bootstrap(fit, data, spec);
  GofReport report;
  report.statistic = gof_statistic(debiased, data);
  report.critical_value = boot.critical_value;
  long count = 0;
  for (double g : boot.replicates) {
    if (g >= report.statistic) ++count;
  }
  report.p_value = static_cast<double>(1 + count) /
                   static_cast<double>(spec.B + 1);
  report.reject = report.statistic > report.critical_value;
  report.alpha_level = spec.alpha_level;
  report.B = spec.B;
  report.seed = spec.seed;
  report.support_size = static_cast<long>(fit.support.size());
  report.replicates = std::move(boot.replicates);
  return report;
}

// Shared machinery for the pairwise score-difference inference behind rank
// confidence intervals, one-sided bounds, rank-threshold tests and top-K
// screening. `point` is the parameter vector whose residuals and Hessian
// standardize the bootstrap: the penalized fit for the one-stage method,
// the refitted (support-restricted) estimate for the two-stage method.
class PairwiseInference {
 public:
  PairwiseInference(const Params& point, const ComparisonDataset& data,
                    const Matrix& z, Vector theta_hat,
                    std::vector<bool> score_coordinate_active)
      : data_(data),
        z_(z),
        theta_hat_(std::move(theta_hat)),
        active_(std::move(score_coordinate_active)),
        parts_(hessian_parts(point, data)) {
    const int n = data.n();
    const int d = data.d();
    if (z_.rows() != n || z_.cols() != d) {
      throw InvalidInputError(
          "pairwise inference: Z must be n x d to match the training data");
    }
    for (int i = 0; i < n; ++i) {
      if (parts_.alpha_diag[i] <= 0.0) {
        throw InferenceError("pairwise inference: item " + std::to_string(i) +
                             " has no comparisons");
      }
    }
    if (d > 0) {
      beta_block_inv_ = parts_.beta_block.inverse();
      if (!beta_block_inv_.allFinite()) {
        throw InferenceError(
            "pairwise inference: coefficient Hessian block is singular");
      }
    }
    const Vector delta = edge_logits(point, data);
    const auto& edges = data.edges();
    edge_scale_.resize(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      edge_scale_[e] = detail::collapsed_residual_scale(
          edges[e].wins, edges[e].trials, sigmoid(delta[e]));
    }
  }

  const Vector& theta_hat() const { return theta_hat_; }

  // sigma_{m,k}: plug-in standard deviation of
  // (theta_hat_k - theta_hat_m) - (theta_k - theta_m), computed as the
  // quadratic form (zt_m - zt_k)' Hd H Hd (zt_m - zt_k) / L_ref where Hd
  // inverts the score diagonal entrywise and the coefficient block as a
  // matrix. zt_i carries the e_i indicator only where the score
  // coordinate is active (always for one-stage; on-support for
  // two-stage).
  double sigma(int m, int k) const {
    if (m == k) {
      throw InvalidInputError("sigma: items must differ");
    }
    validate_items({m, k});
    const int d = data_.d();
    // The quadratic form is invariant under u -> -u, so it is evaluated
    // for the ordered pair (lo, hi); sigma(m, k) == sigma(k, m) exactly.
    const int lo = std::min(m, k);
    const int hi = std::max(m, k);
    // v = Hd (zt_lo - zt_hi); the score part has at most two nonzeros.
    std::vector<std::pair<int, double>> v_alpha;
    if (active_[lo]) v_alpha.emplace_back(lo, 1.0 / parts_.alpha_diag[lo]);
    if (active_[hi]) v_alpha.emplace_back(hi, -1.0 / parts_.alpha_diag[hi]);
    Vector v_beta;
    Vector dz;
    if (d > 0) {
      dz = (z_.row(lo) - z_.row(hi)).transpose();
      v_beta = beta_block_inv_ * dz;
    }

    // v' H v expanded over the blocks.
    double quad = 0.0;
    for (const auto& [i, vi] : v_alpha) {
      quad += vi * vi * parts_.alpha_diag[i];
    }
    if (v_alpha.size() == 2) {
      quad += 2.0 * v_alpha[0].second * v_alpha[1].second *
              alpha_off_diagonal(v_alpha[0].first, v_alpha[1].first);
    }
    if (d > 0) {
      for (const auto& [i, vi] : v_alpha) {
        quad += 2.0 * vi * parts_.cross.row(i).dot(v_beta);
      }
      quad += v_beta.dot(parts_.beta_block * v_beta);
    }
    quad = std::max(quad, 0.0);
    return std::sqrt(quad / static_cast<double>(data_.l_ref()));
  }

  // Bootstrap replicates of the standardized pairwise max statistic over
  // m in `items`, k != m. Two-sided replicates take absolute values;
  // one-sided replicates keep the sign. sigma entries equal to zero
  // (identical effective covariate rows) are skipped.
  std::vector<double> bootstrap_replicates(const std::vector<int>& items,
                                           const Matrix& sigma_rows,
                                           const BootstrapSpec& spec,
                                           bool two_sided) const {
    spec.validate();
    const int n = data_.n();
    const int d = data_.d();
    const auto& edges = data_.edges();
    const double l_ref = static_cast<double>(data_.l_ref());

    std::vector<double> replicates(spec.B);
    Vector g_alpha(n);
    Vector item_coeff(n);
    Vector t(n);
    for (long b = 0; b < spec.B; ++b) {
      Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(b)));
      g_alpha.setZero();
      item_coeff.setZero();
      for (std::size_t e = 0; e < edges.size(); ++e) {
        const double draw = edge_scale_[e] * rng.normal();
        g_alpha[edges[e].i] += draw;
        g_alpha[edges[e].j] -= draw;
        item_coeff[edges[e].i] += draw;
        item_coeff[edges[e].j] -= draw;
      }
      Vector w_beta;
      if (d > 0) {
        w_beta = beta_block_inv_ *
                 (data_.covariates().transpose() * item_coeff);
      }
      for (int i = 0; i < n; ++i) {
        t[i] = active_[i] ? g_alpha[i] / parts_.alpha_diag[i] : 0.0;
        if (d > 0) t[i] += z_.row(i).dot(w_beta);
      }
      double stat = -std::numeric_limits<double>::infinity();
      for (std::size_t mi = 0; mi < items.size(); ++mi) {
        const int m = items[mi];
        for (int k = 0; k < n; ++k) {
          if (k == m) continue;
          const double s = sigma_rows(static_cast<Eigen::Index>(mi), k);
          if (s <= 0.0) continue;
          const double value = (t[m] - t[k]) / (s * l_ref);
          stat = std::max(stat, two_sided ? std::abs(value) : value);
        }
      }
      replicates[b] = std::isfinite(stat) ? stat : 0.0;
    }
    return replicates;
  }

  Matrix sigma_rows(const std::vector<int>& items) const {
    validate_items(items);
    Matrix rows(items.size(), data_.n());
    for (std::size_t mi = 0; mi < items.size(); ++mi) {
      for (int k = 0; k < data_.n(); ++k) {
        rows(static_cast<Eigen::Index>(mi), k) =
            k == items[mi] ? 0.0 : sigma(items[mi], k);
      }
    }
    return rows;
  }

  void validate_items(const std::vector<int>& items) const {
    for (int m : items) {
      if (m < 0 || m >= data_.n()) {
        throw InvalidInputError("rank inference: item " + std::to_string(m) +
                                " is outside 0.." +
                                std::to_string(data_.n() - 1));
      }
    }
  }

 private:
  double alpha_off_diagonal(int i, int j) const {
    // H_ij over the score block is minus the summed curvature of the
    // (i, j) edges; the canonical form has at most one.
    double value = 0.0;
    const auto& edges = data_.edges();
    const int hi = std::max(i, j);
    const int lo = std::min(i, j);
    // Edges are sorted; binary search for (hi, lo).
    auto it = std::lower_bound(
        edges.begin(), edges.end(), std::make_pair(hi, lo),
        [](const Edge& e, const std::pair<int, int>& key) {
          return std::make_pair(e.i, e.j) < key;
        });
    if (it != edges.end() && it->i == hi && it->j == lo) {
      value -= parts_.edge_curv[it - edges.begin()];
    }
    return value;
  }

  const ComparisonDataset& data_;
  Matrix z_;
  Vector theta_hat_;
  std::vector<bool> active_;
  HessianParts parts_;
  Matrix beta_block_inv_;
  std::vector<double> edge_scale_;
};

// One-stage setup: ranking scores are the debiased intrinsic scores plus
// the covariate effect under the new covariates Z.
inline PairwiseInference make_one_stage_inference(
    const FitResult& fit, const DebiasedScores& debiased,
    const ComparisonDataset& data, const Matrix& z) {
  Vector theta_hat = debiased.alpha_debiased;
  if (data.d() > 0) theta_hat += z * fit.params.beta;
  return PairwiseInference(fit.params, data, z, std::move(theta_hat),
                           std::vector<bool>(data.n(), true));
}

// Two-stage setup: scores come from the support-restricted refit; items
// off the estimated support carry no score indicator in the
// standardization.
inline PairwiseInference make_two_stage_inference(
    const Params& refit, const std::vector<int>& support,
    const ComparisonDataset& data, const Matrix& z) {
  Vector theta_hat = refit.alpha;
  if (data.d() > 0) theta_hat += z * refit.beta;
  std::vector<bool> active(data.n(), false);
  for (int i : support) active[static_cast<std::size_t>(i)] = true;
  return PairwiseInference(refit, data, z, std::move(theta_hat),
                           std::move(active));
}

// Standalone sigma_{m,k} for the one-stage method.
inline double sigma_hat(const FitResult& fit, const ComparisonDataset& data,
                        const Matrix& z, int m, int k) {
  const DebiasedScores debiased = debias_alpha(fit, data);
  return make_one_stage_inference(fit, debiased, data, z).sigma(m, k);
}

struct TwoSidedIntervals {
  std::vector<RankInterval> intervals;
  // Pairwise simultaneous CIs for theta_k - theta_m, one row per item m in
  // the same order as `intervals`.
  std::vector<std::vector<PairwiseCi>> pairwise;
};

// Rank bounds from pairwise CIs [theta_k - theta_m +- c sigma_{m,k}]:
// lower = 1 + #certified above, upper = n - #certified below. With c = 0
// the intervals collapse to the plug-in ranks; a huge c gives [1, n].
inline TwoSidedIntervals build_two_sided_intervals(
    const Vector& theta, const Matrix& sigma_rows,
    const std::vector<int>& items, double critical_value) {
  const int n = static_cast<int>(theta.size());
  TwoSidedIntervals out;
  for (std::size_t mi = 0; mi < items.size(); ++mi) {
    const int m = items[mi];
    int above = 0;  // k certified to rank above m
    int below = 0;  // k certified to rank below m
    std::vector<PairwiseCi> cis;
    cis.reserve(n - 1);
    for (int k = 0; k < n; ++k) {
      if (k == m) continue;
      const double diff = theta[k] - theta[m];
      const double margin =
          critical_value * sigma_rows(static_cast<Eigen::Index>(mi), k);
      const PairwiseCi ci{k, diff - margin, diff + margin};
      if (ci.lower > 0.0) ++above;
      if (ci.upper < 0.0) ++below;
      cis.push_back(ci);
    }
    out.intervals.push_back(
        RankInterval{m, 1 + above, n - below, IntervalKind::kTwoSided});
    out.pairwise.push_back(std::move(cis));
  }
  return out;
}

// One-sided counterpart: a certified lower rank bound per item.
inline std::vector<RankInterval> build_one_sided_intervals(
    const Vector& theta, const Matrix& sigma_rows,
    const std::vector<int>& items, double critical_value) {
  const int n = static_cast<int>(theta.size());
  std::vector<RankInterval> intervals;
  for (std::size_t mi = 0; mi < items.size(); ++mi) {
    const int m = items[mi];
    int certified = 0;
    for (int k = 0; k < n; ++k) {
      if (k == m) continue;
      const double margin =
          critical_value * sigma_rows(static_cast<Eigen::Index>(mi), k);
      if (theta[k] - theta[m] > margin) ++certified;
    }
    intervals.push_back(
        RankInterval{m, 1 + certified, n, IntervalKind::kOneSidedLower});
  }
  return intervals;
}

struct RankCiReport {
  std::vector<RankInterval> intervals;
  std::vector<std::vector<PairwiseCi>> pairwise;
  double critical_value = 0.0;
  std::vector<double> replicates;
};

// Simultaneous two-sided rank confidence intervals for the items in
// `items`: pairwise CIs [theta_hat_k - theta_hat_m +- c2 sigma_{m,k}],
// then rank bounds by counting certified wins and losses.
inline RankCiReport rank_ci(const PairwiseInference& inference,
                            const std::vector<int>& items,
                            const BootstrapSpec& spec) {
  if (items.empty()) {
    throw InvalidInputError("rank_ci: item set must be nonempty");
  }
  const Matrix sigma_rows = inference.sigma_rows(items);
  RankCiReport report;
  report.replicates =
      inference.bootstrap_replicates(items, sigma_rows, spec, true);
  report.critical_value =
      detail::empirical_quantile(report.replicates, 1.0 - spec.alpha_level);
  TwoSidedIntervals built = build_two_sided_intervals(
      inference.theta_hat(), sigma_rows, items, report.critical_value);
  report.intervals = std::move(built.intervals);
  report.pairwise = std::move(built.pairwise);
  return report;
}

struct OneSidedReport {
  std::vector<RankInterval> intervals;  // [lower, n], one per item
  double critical_value = 0.0;
  std::vector<double> replicates;
};

// Simultaneous one-sided rank lower bounds: rank(m) >= 1 + #{k :
// theta_hat_k - theta_hat_m > c3 sigma_{m,k}} with c3 the one-sided
// bootstrap quantile.
inline OneSidedReport one_sided_rank(const PairwiseInference& inference,
                                     const std::vector<int>& items,
                                     const BootstrapSpec& spec) {
  if (items.empty()) {
    throw InvalidInputError("one_sided_rank: item set must be nonempty");
  }
  const Matrix sigma_rows = inference.sigma_rows(items);
  OneSidedReport report;
  report.replicates =
      inference.bootstrap_replicates(items, sigma_rows, spec, false);
  report.critical_value =
      detail::empirical_quantile(report.replicates, 1.0 - spec.alpha_level);
  report.intervals = build_one_sided_intervals(
      inference.theta_hat(), sigma_rows, items, report.critical_value);
  return report;
}

struct RankThresholdDecision {
  int item = 0;
  int threshold = 0;
  int rank_lower_bound = 1;
  bool reject = false;  // reject H0: rank(item) <= threshold
};

// Level-alpha test of H0: rank(m) <= K against rank(m) > K.
inline RankThresholdDecision rank_threshold_test(
    const PairwiseInference& inference, int m, int threshold,
    const BootstrapSpec& spec) {
  const int n = static_cast<int>(inference.theta_hat().size());
  if (threshold < 1 || threshold > n) {
    throw InvalidInputError("rank_threshold_test: K must lie in [1, n]");
  }
  const OneSidedReport report = one_sided_rank(inference, {m}, spec);
  RankThresholdDecision decision;
  decision.item = m;
  decision.threshold = threshold;
  decision.rank_lower_bound = report.intervals[0].lower;
  decision.reject = decision.rank_lower_bound > threshold;
  return decision;
}

// Top-K screening over all items: keeps every m whose certified rank lower
// bound does not exceed K. The true top-K set is contained in the output
// with probability >= 1 - alpha.
inline std::vector<int> topk_screen(const PairwiseInference& inference,
                                    int k_items, const BootstrapSpec& spec) {
  const int n = static_cast<int>(inference.theta_hat().size());
  if (k_items < 1 || k_items > n) {
    throw InvalidInputError("topk_screen: K must lie in [1, n]");
  }
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  const OneSidedReport report = one_sided_rank(inference, all, spec);
  std::vector<int> selected;
  for (const RankInterval& interval : report.intervals) {
    if (interval.lower <= k_items) selected.push_back(interval.item);
  }
  return selected;
}

}  // namespace btlcov

#endif  // BTLCOV_INFERENCE_HPP_
