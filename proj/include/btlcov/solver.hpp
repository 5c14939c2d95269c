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

#ifndef BTLCOV_SOLVER_HPP_
#define BTLCOV_SOLVER_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "btlcov/diagnostics.hpp"
#include "btlcov/graph.hpp"
#include "btlcov/model.hpp"
#include "btlcov/types.hpp"

namespace btlcov {

// Solver tuning. eta = 0 and grad_tol = 0 select the automatic choices
// described at fit().
struct FitConfig {
  double lambda = 0.0;
  double tau = 0.0;
  double c_lambda = 1.0;  // multiplier for the default lambda formula
  double c_tau = 1.0;     // multiplier for the default tau formula
  double eta = 0.0;       // fixed step size; 0 = auto
  long max_iter = 50000;
  double grad_tol = 0.0;  // stationarity tolerance; 0 = auto
  bool backtracking = true;
  bool record_objective = false;
  bool skip_prechecks = false;
  std::optional<Params> init;  // warm start; zero otherwise

  void validate() const {
    if (lambda < 0.0 || tau < 0.0) {
      throw InvalidInputError("fit: lambda and tau must be >= 0");
    }
    if (max_iter < 1) throw InvalidInputError("fit: max_iter must be >= 1");
    if (grad_tol < 0.0) throw InvalidInputError("fit: grad_tol must be > 0");
    if (init && !init->all_finite()) {
      throw InvalidInputError("fit: warm start must be finite");
    }
  }
};

struct FitResult {
  Params params;
  std::vector<int> support;
  long iterations = 0;
  double residual = 0.0;  // ||theta_{t+1} - theta_t|| / eta at the last step
  bool converged = false;
  double eta_used = 0.0;
  double grad_tol_used = 0.0;
  double lambda = 0.0;
  double tau = 0.0;
  std::vector<double> objective_trace;
};

// Soft-thresholding s(x, gamma) = sign(x) max(|x| - gamma, 0) applied to
// the n score coordinates only; the d coefficient coordinates pass
// through. Shrunk coordinates are exact +0.0.
inline Vector soft_threshold_block(const Vector& v, int n, double gamma) {
  if (gamma < 0.0) {
    throw InvalidInputError("soft_threshold_block: gamma must be >= 0");
  }
  Vector out = v;
  for (int i = 0; i < n; ++i) {
    const double a = std::abs(v[i]);
    out[i] = a > gamma ? (v[i] > 0.0 ? a - gamma : gamma - a) : 0.0;
  }
  return out;
}

// Default regularization weights:
//   lambda = c_lambda * k1 * sqrt((d+1) n p log(n) / L)
//   tau    = c_tau * min(k1/k2, 1/(k3 sqrt(d+1))) * sqrt(log(n) / (n L))
// A vanishing k2 or k3 drops its ratio from the min; tau = 0 when both
// vanish.
inline std::pair<double, double> default_tuning(const ComparisonDataset& data,
                                                double p_hat, long l_ref,
                                                double kappa1, double kappa2,
                                                double kappa3,
                                                double c_lambda,
                                                double c_tau) {
  const double n = static_cast<double>(data.n());
  const double d = static_cast<double>(data.d());
  const double logn = std::log(n);
  const double lambda =
      c_lambda * kappa1 *
      std::sqrt((d + 1.0) * n * p_hat * logn / static_cast<double>(l_ref));
  double ratio = std::numeric_limits<double>::infinity();
  if (kappa2 > 0.0) ratio = std::min(ratio, kappa1 / kappa2);
  if (kappa3 > 0.0) ratio = std::min(ratio, 1.0 / (kappa3 * std::sqrt(d + 1.0)));
  const double tau =
      std::isinf(ratio)
          ? 0.0
          : c_tau * ratio * std::sqrt(logn / (n * static_cast<double>(l_ref)));
  return {lambda, tau};
}

inline double estimate_edge_probability(const ComparisonDataset& data) {
  const double n = static_cast<double>(data.n());
  return 2.0 * static_cast<double>(data.num_edges()) / (n * (n - 1.0));
}

namespace detail {

// Largest eigenvalue of the loss Hessian at `params` by power iteration
// with a fixed deterministic start, relative tolerance 1e-6.
inline double hessian_spectral_norm(const Params& params,
                                    const ComparisonDataset& data) {
  const HessianParts parts = hessian_parts(params, data);
  const int dim = data.n() + data.d();
  Rng rng(0x5EEDCAFEF00DULL);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.uniform() - 0.5;
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 1000; ++it) {
    Vector hv = hessian_apply(parts, data, v);
    const double next = v.dot(hv);
    const double norm = hv.norm();
    if (norm == 0.0) return 0.0;
    v = hv / norm;
    if (it > 0 && std::abs(next - lambda) <= 1e-6 * std::abs(next)) {
      return next;
    }
    lambda = next;
  }
  return lambda;
}

inline void check_fit_preconditions(const ComparisonDataset& data) {
  if (!is_connected(data)) {
    throw InvalidInputError(
        "fit: comparison graph is disconnected; scores are not comparable "
        "across components. Restrict to the largest connected component "
        "first.");
  }
  const Matrix xbar = augmented_covariates(data.covariates());
  if (numerical_rank(xbar, 1e-10) != data.d() + 1) {
    throw InvalidInputError(
        "fit: [1 | X] is rank-degenerate; drop collinear covariate columns");
  }
}

}  // namespace detail

// Proximal gradient descent for the penalized estimator
//   argmin loss(theta) + lambda ||alpha||_1 + (tau/2) ||theta||_2^2.
// Iterates theta <- SOFT_{eta lambda}(theta - eta (grad loss + tau theta))
// with a fixed step size; the default is eta = 2 / (2 tau + 1.05 * Hmax)
// where Hmax is the spectral norm of the loss Hessian at the start point
// (the Hessian is maximized at theta = 0, so this bounds the curvature
// along the whole path). Backtracking halves eta whenever a step would
// increase the objective. Stops when ||theta_next - theta|| / eta falls
// below grad_tol, default 1e-8 * (1 + ||grad loss(theta0)||).
inline FitResult fit(const ComparisonDataset& data, const FitConfig& config) {
  config.validate();
  if (!config.skip_prechecks) detail::check_fit_preconditions(data);

  const int n = data.n();
  const int d = data.d();
  Params theta = config.init ? *config.init : Params::zero(n, d);

  const Vector grad0 = gradient(theta, data);
  const double grad_tol = config.grad_tol > 0.0
                              ? config.grad_tol
                              : 1e-8 * (1.0 + grad0.norm());
  double eta = config.eta;
  if (eta <= 0.0) {
    const double hmax = detail::hessian_spectral_norm(theta, data);
    eta = 2.0 / (2.0 * config.tau + 1.05 * std::max(hmax, 1e-12));
  }

  FitResult result;
  result.lambda = config.lambda;
  result.tau = config.tau;
  result.grad_tol_used = grad_tol;

  double objective = regularized_loss(theta, data, config.lambda, config.tau);
  if (config.record_objective) result.objective_trace.push_back(objective);

  int bad_steps = 0;
  long t = 0;
  for (; t < config.max_iter; ++t) {
    const Vector grad = gradient(theta, data) + config.tau * theta.stacked();
    Vector proposal =
        soft_threshold_block(theta.stacked() - eta * grad, n,
                             eta * config.lambda);
    Params next = Params::from_stacked(proposal, n);
    double next_objective =
        regularized_loss(next, data, config.lambda, config.tau);

    // Slack scales with the objective so rounding noise in the edge sum
    // cannot masquerade as an increase and shrink the step for good.
    const double slack = 1e-12 * std::max(1.0, std::abs(objective));
    if (config.backtracking) {
      // The negated comparison also catches a non-finite objective.
      int halvings = 0;
      while (!(next_objective <= objective + slack) && halvings < 60) {
        eta *= 0.5;
        proposal = soft_threshold_block(theta.stacked() - eta * grad, n,
                                        eta * config.lambda);
        next = Params::from_stacked(proposal, n);
        next_objective =
            regularized_loss(next, data, config.lambda, config.tau);
        ++halvings;
      }
      if (halvings >= 60) {
        throw SolverError(
            "fit: no descent step found (step size reached " +
            std::to_string(eta) + "); the problem may be ill-conditioned");
      }
    } else if (!(next_objective <= objective + 1e-8 * std::max(1.0, std::abs(objective)))) {
      if (++bad_steps >= 10) {
        throw SolverError(
            "fit: objective increased for 10 consecutive steps at step "
            "size " +
            std::to_string(eta));
      }
    } else {
      bad_steps = 0;
    }

    const double residual = (proposal - theta.stacked()).norm() / eta;
    theta = std::move(next);
    objective = next_objective;
    if (config.record_objective) result.objective_trace.push_back(objective);
    result.residual = residual;
    if (residual <= grad_tol) {
      result.converged = true;
      ++t;
      break;
    }
  }

  result.iterations = t;
  result.eta_used = eta;
  result.params = std::move(theta);
  result.support = result.params.support();
  return result;
}

// Prox-stationarity residual ||SOFT_{eta lambda}(theta - eta grad) -
// theta|| / eta; zero exactly at the optimum.
inline double fixed_point_residual(const Params& params,
                                   const ComparisonDataset& data,
                                   double lambda, double tau, double eta) {
  const Vector grad = gradient(params, data) + tau * params.stacked();
  const Vector mapped = soft_threshold_block(
      params.stacked() - eta * grad, data.n(), eta * lambda);
  return (mapped - params.stacked()).norm() / eta;
}

// Unpenalized refit on a fixed support: minimizes the loss over
// (alpha_support, beta) with the remaining scores frozen at zero, by
// damped Newton. Returns full-length parameters with exact zeros off
// support; the gradient restricted to the free coordinates has norm
// <= 1e-8 on success. A singular restricted Hessian gets one retry with
// a 1e-8 ridge before failing.
inline Params two_stage_refit(const ComparisonDataset& data,
                              const std::vector<int>& support,
                              bool skip_prechecks = false) {
  const int n = data.n();
  const int d = data.d();
  for (int i : support) {
    if (i < 0 || i >= n) {
      throw InvalidInputError("two_stage_refit: support index " +
                              std::to_string(i) + " out of range");
    }
  }
  if (static_cast<int>(support.size()) >= n) {
    throw InvalidInputError(
        "two_stage_refit: support must be a proper subset of the items");
  }
  if (!skip_prechecks && !is_connected(data)) {
    throw InvalidInputError("two_stage_refit: comparison graph disconnected");
  }

  const int free = static_cast<int>(support.size()) + d;
  if (free == 0) return Params::zero(n, d);

  // Map free coordinate -> stacked coordinate.
  std::vector<int> coord(free);
  for (std::size_t s = 0; s < support.size(); ++s) coord[s] = support[s];
  for (int k = 0; k < d; ++k) coord[support.size() + k] = n + k;

  Params theta = Params::zero(n, d);
  const double tol = 1e-8;
  double current = loss(theta, data);
  for (int it = 0; it < 200; ++it) {
    const Vector full_grad = gradient(theta, data);
    Vector g(free);
    for (int s = 0; s < free; ++s) g[s] = full_grad[coord[s]];
    if (g.norm() <= tol) return theta;

    const Matrix full_hess = hessian(theta, data);
    Matrix h(free, free);
    for (int r = 0; r < free; ++r) {
      for (int c = 0; c < free; ++c) h(r, c) = full_hess(coord[r], coord[c]);
    }

    Vector step = -h.ldlt().solve(g);
    if (!step.allFinite() || (h * step + g).norm() > 1e-8 * (1.0 + g.norm())) {
      // Singular restricted Hessian: ridge fallback, once.
      Matrix ridged = h + 1e-8 * Matrix::Identity(free, free);
      step = -ridged.ldlt().solve(g);
      if (!step.allFinite() ||
          (ridged * step + g).norm() > 1e-6 * (1.0 + g.norm())) {
        throw SolverError(
            "two_stage_refit: restricted Hessian is singular even with a "
            "1e-8 ridge; the support may be too large for the graph");
      }
    }

    // Armijo backtracking on the restricted loss. Once the predicted
    // decrease falls below the rounding noise of the loss sum, the full
    // Newton step is accepted directly; halving cannot certify progress
    // there and the iteration is already in its quadratic phase.
    const double slope = g.dot(step);
    const double noise_floor = 1e-12 * (1.0 + std::abs(current));
    auto apply_step = [&](double scale) {
      Params candidate = theta;
      for (int s = 0; s < free; ++s) {
        const int c = coord[s];
        if (c < n) {
          candidate.alpha[c] += scale * step[s];
        } else {
          candidate.beta[c - n] += scale * step[s];
        }
      }
      return candidate;
    };
    if (-slope <= noise_floor) {
      theta = apply_step(1.0);
      current = loss(theta, data);
      continue;
    }
    double scale = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      Params candidate = apply_step(scale);
      const double value = loss(candidate, data);
      if (value <= current + 1e-4 * scale * slope + noise_floor) {
        theta = std::move(candidate);
        current = value;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) {
      throw SolverError("two_stage_refit: line search failed to descend");
    }
  }
  throw SolverError(
      "two_stage_refit: Newton did not reach the 1e-8 gradient tolerance in "
      "200 iterations");
}

}  // namespace btlcov

#endif  // BTLCOV_SOLVER_HPP_
