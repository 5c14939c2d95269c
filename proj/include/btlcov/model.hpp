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

#ifndef BTLCOV_MODEL_HPP_
#define BTLCOV_MODEL_HPP_

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "btlcov/types.hpp"

namespace btlcov {

// Logistic function, stable for |t| up to ~700.
inline double sigmoid(double t) {
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow.
inline double log1pexp(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

// Rescales covariate rows by a common factor K so that
// max_i ||x_i||_2 <= sqrt((d+1)/n). K = 1 when the bound already holds.
// Scores, predictions and the span of [1 | X] are unchanged; only the
// coefficient scale moves.
inline std::pair<Matrix, double> rescale_covariates(const Matrix& raw) {
  if (!raw.allFinite()) {
    throw InvalidInputError("rescale_covariates: input must be finite");
  }
  const auto n = raw.rows();
  const auto d = raw.cols();
  if (n < 1) throw InvalidInputError("rescale_covariates: need n >= 1");
  const double bound =
      std::sqrt(static_cast<double>(d + 1) / static_cast<double>(n));
  double max_norm = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    max_norm = std::max(max_norm, raw.row(i).norm());
  }
  if (max_norm <= bound) return {raw, 1.0};
  const double scale = max_norm / bound;
  return {raw / scale, scale};
}

// Probability that item j is preferred over item i.
inline double btl_prob(const Params& params, const ComparisonDataset& data,
                       int i, int j) {
  if (i == j) {
    throw InvalidInputError("btl_prob: items must differ, got i = j = " +
                            std::to_string(i));
  }
  return sigmoid(params.score(data, j) - params.score(data, i));
}

// Score differences score_i - score_j along every edge, in edge order.
inline Vector edge_logits(const Params& params,
                          const ComparisonDataset& data) {
  const Vector s = params.scores(data);
  Vector delta(data.num_edges());
  const auto& edges = data.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    delta[e] = s[edges[e].i] - s[edges[e].j];
  }
  return delta;
}

// Negative log-likelihood scaled by 1/L_ref: sum over edges of
//   w_e * ( -y_e * delta_e + log(1 + exp(delta_e)) ),
// with y_e = wins/trials and w_e = trials/L_ref. Edges are summed in
// canonical order, so the value is deterministic.
inline double loss(const Params& params, const ComparisonDataset& data) {
  if (data.num_edges() == 0) {
    throw InvalidInputError("loss: dataset has no edges");
  }
  const Vector delta = edge_logits(params, data);
  double value = 0.0;
  for (long e = 0; e < data.num_edges(); ++e) {
    value += data.weight(e) * (-data.y(e) * delta[e] + log1pexp(delta[e]));
  }
  return value;
}

// loss + lambda * ||alpha||_1 + (tau/2) * ||theta||_2^2.
inline double regularized_loss(const Params& params,
                               const ComparisonDataset& data, double lambda,
                               double tau) {
  if (lambda < 0.0 || tau < 0.0) {
    throw InvalidInputError("regularized_loss: lambda and tau must be >= 0");
  }
  double value = loss(params, data);
  value += lambda * params.alpha.lpNorm<1>();
  value += 0.5 * tau *
           (params.alpha.squaredNorm() + params.beta.squaredNorm());
  return value;
}

// Gradient of the loss: sum_e w_e (sigmoid(delta_e) - y_e)(xt_i - xt_j),
// where xt_i = (e_i, x_i). Returned as an (n+d)-vector. The covariate
// block is accumulated through per-item net coefficients, so the edge
// loop is O(|E|) and the result is order-deterministic.
inline Vector gradient(const Params& params, const ComparisonDataset& data) {
  const int n = data.n();
  const int d = data.d();
  const Vector delta = edge_logits(params, data);
  Vector grad = Vector::Zero(n + d);
  Vector item_coeff = Vector::Zero(n);
  const auto& edges = data.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double c =
        data.weight(e) * (sigmoid(delta[e]) - data.y(e));
    grad[edges[e].i] += c;
    grad[edges[e].j] -= c;
    item_coeff[edges[e].i] += c;
    item_coeff[edges[e].j] -= c;
  }
  grad.tail(d) = data.covariates().transpose() * item_coeff;
  return grad;
}

// Pieces of the loss Hessian sum_e w_e phi'(delta_e) (xt_i - xt_j)(...)^T
// in block form. The alpha block is graph-sparse: diagonal plus one
// off-diagonal entry per edge.
struct HessianParts {
  Vector alpha_diag;        // n
  std::vector<double> edge_curv;  // w_e * phi'(delta_e), per edge
  Matrix cross;             // n x d block (alpha rows, beta cols)
  Matrix beta_block;        // d x d
};

inline HessianParts hessian_parts(const Params& params,
                                  const ComparisonDataset& data) {
  const int n = data.n();
  const int d = data.d();
  const Vector delta = edge_logits(params, data);
  HessianParts parts;
  parts.alpha_diag = Vector::Zero(n);
  parts.edge_curv.resize(data.num_edges());
  parts.cross = Matrix::Zero(n, d);
  parts.beta_block = Matrix::Zero(d, d);
  const auto& edges = data.edges();
  const Matrix& x = data.covariates();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double p = sigmoid(delta[e]);
    const double curv = data.weight(e) * p * (1.0 - p);
    parts.edge_curv[e] = curv;
    const int i = edges[e].i;
    const int j = edges[e].j;
    parts.alpha_diag[i] += curv;
    parts.alpha_diag[j] += curv;
    if (d > 0) {
      const Vector dx = (x.row(i) - x.row(j)).transpose();
      parts.cross.row(i) += curv * dx.transpose();
      parts.cross.row(j) -= curv * dx.transpose();
      parts.beta_block.noalias() += curv * dx * dx.transpose();
    }
  }
  return parts;
}

// Dense (n+d)x(n+d) Hessian. Symmetric positive semidefinite.
inline Matrix hessian(const Params& params, const ComparisonDataset& data) {
  const int n = data.n();
  const int d = data.d();
  const HessianParts parts = hessian_parts(params, data);
  Matrix h = Matrix::Zero(n + d, n + d);
  for (int i = 0; i < n; ++i) h(i, i) = parts.alpha_diag[i];
  const auto& edges = data.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    h(edges[e].i, edges[e].j) -= parts.edge_curv[e];
    h(edges[e].j, edges[e].i) -= parts.edge_curv[e];
  }
  if (d > 0) {
    h.topRightCorner(n, d) = parts.cross;
    h.bottomLeftCorner(d, n) = parts.cross.transpose();
    h.bottomRightCorner(d, d) = parts.beta_block;
  }
  return h;
}

// Hessian-vector product using the edge decomposition; O(|E| + nd).
inline Vector hessian_apply(const HessianParts& parts,
                            const ComparisonDataset& data, const Vector& v) {
  const int n = data.n();
  const int d = data.d();
  Vector out = Vector::Zero(n + d);
  const auto& edges = data.edges();
  const Matrix& x = data.covariates();
  const Vector vb = v.tail(d);
  Vector item_coeff = Vector::Zero(n);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const int i = edges[e].i;
    const int j = edges[e].j;
    double dv = v[i] - v[j];
    if (d > 0) dv += (x.row(i) - x.row(j)).dot(vb);
    const double c = parts.edge_curv[e] * dv;
    out[i] += c;
    out[j] -= c;
    item_coeff[i] += c;
    item_coeff[j] -= c;
  }
  if (d > 0) out.tail(d) = x.transpose() * item_coeff;
  return out;
}

}  // namespace btlcov

#endif  // BTLCOV_MODEL_HPP_
