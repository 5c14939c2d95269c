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

#ifndef BTLCOV_GRAPH_HPP_
#define BTLCOV_GRAPH_HPP_

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "btlcov/rng.hpp"
#include "btlcov/types.hpp"

namespace btlcov {

// Undirected comparison graph in canonical form: pairs (i, j) with i > j,
// sorted lexicographically, no loops, no duplicates.
struct ComparisonGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
};

// Samples an Erdos-Renyi graph: each of the n(n-1)/2 pairs is included
// independently with probability p. Pairs are visited in the fixed order
// (1,0), (2,0), (2,1), ... and each consumes exactly one uniform draw from
// the xoshiro256++ stream seeded with `seed`, so the result is identical
// across runs and platforms.
inline ComparisonGraph sample_er_graph(int n, double p, std::uint64_t seed) {
  if (p < 0.0 || p > 1.0) {
    throw InvalidInputError("sample_er_graph: p must lie in [0, 1], got " +
                            std::to_string(p));
  }
  if (n < 2) {
    throw InvalidInputError("sample_er_graph: need n >= 2");
  }
  ComparisonGraph g;
  g.n = n;
  Rng rng(seed);
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      if (rng.uniform() < p) g.edges.emplace_back(i, j);
    }
  }
  return g;
}

// Component label per vertex. Labels are assigned in order of each
// component's smallest vertex, so label 0 contains vertex 0.
inline std::vector<int> connected_components(
    int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> adj(n);
  for (const auto& [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  std::vector<int> label(n, -1);
  int next = 0;
  std::vector<int> stack;
  for (int v = 0; v < n; ++v) {
    if (label[v] != -1) continue;
    stack.push_back(v);
    label[v] = next;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int w : adj[u]) {
        if (label[w] == -1) {
          label[w] = next;
          stack.push_back(w);
        }
      }
    }
    ++next;
  }
  return label;
}

inline std::vector<int> connected_components(const ComparisonGraph& g) {
  return connected_components(g.n, g.edges);
}

inline std::vector<int> connected_components(const ComparisonDataset& data) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(data.edges().size());
  for (const Edge& e : data.edges()) pairs.emplace_back(e.i, e.j);
  return connected_components(data.n(), pairs);
}

inline bool is_connected(const ComparisonDataset& data) {
  const auto labels = connected_components(data);
  return std::all_of(labels.begin(), labels.end(),
                     [](int l) { return l == 0; });
}

struct LargestComponentResult {
  ComparisonDataset data;
  std::vector<int> old_to_new;  // -1 for dropped items
  std::vector<int> new_to_old;
};

// Restricts the dataset to its largest connected component, re-indexing
// the surviving items to 0..m-1 in increasing original order. Win and
// trial counts of surviving edges are preserved exactly. Ties between
// equal-size components go to the one containing the smallest original
// index.
inline LargestComponentResult largest_component_restrict(
    const ComparisonDataset& data) {
  const int n = data.n();
  const auto labels = connected_components(data);
  const int num_components =
      labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<int> sizes(num_components, 0);
  for (int l : labels) ++sizes[l];
  // Labels are ordered by smallest contained vertex, so the first argmax
  // realizes the tie-break.
  const int keep = static_cast<int>(
      std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

  std::vector<int> old_to_new(n, -1);
  std::vector<int> new_to_old;
  for (int v = 0; v < n; ++v) {
    if (labels[v] == keep) {
      old_to_new[v] = static_cast<int>(new_to_old.size());
      new_to_old.push_back(v);
    }
  }
  const int m = static_cast<int>(new_to_old.size());

  Matrix covariates(m, data.d());
  for (int v = 0; v < m; ++v) {
    covariates.row(v) = data.covariates().row(new_to_old[v]);
  }
  std::vector<Edge> edges;
  for (const Edge& e : data.edges()) {
    if (old_to_new[e.i] == -1 || old_to_new[e.j] == -1) continue;
    // The re-indexing is monotone, so i > j is preserved.
    edges.push_back(Edge{old_to_new[e.i], old_to_new[e.j], e.wins, e.trials});
  }
  return LargestComponentResult{
      ComparisonDataset(std::move(covariates), std::move(edges),
                        data.l_ref()),
      std::move(old_to_new), std::move(new_to_old)};
}

}  // namespace btlcov

#endif  // BTLCOV_GRAPH_HPP_
