// Copyright 2026 The polyagg Authors.
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

#pragma once

// Helpers shared by the unit tests: random graphs and small brute-force oracles.

#include "polyagg/graph.hpp"
#include "polyagg/random.hpp"

#include <Eigen/Core>

#include <deque>
#include <utility>
#include <vector>

namespace polyagg::testing {

/// Erdos-Renyi graph; when `connected`, a random spanning tree is added first.
inline Graph random_graph(Rng& rng, int n, double p, bool connected) {
  std::vector<std::pair<int, int>> edges;
  if (connected)
    for (int i = 1; i < n; ++i) edges.emplace_back(static_cast<int>(uniform_int(rng, 0, i - 1)), i);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (uniform01(rng) < p) edges.emplace_back(i, j);
  return Graph(n, edges);
}

inline Eigen::MatrixXd dense_adjacency(const Graph& g) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(g.num_nodes(), g.num_nodes());
  for (auto [i, j] : g.edge_list()) a(i, j) = a(j, i) = 1;
  return a;
}

/// sum_k sum_{i,j} Y_ik (1 - Y_jk) A_ij / Gamma_k, written out term by term.
inline double ncut_double_sum(const Graph& g, const Eigen::MatrixXd& y) {
  const Eigen::MatrixXd a = dense_adjacency(g);
  const int n = g.num_nodes();
  double total = 0;
  for (Eigen::Index k = 0; k < y.cols(); ++k) {
    double gamma = 0;
    for (int i = 0; i < n; ++i) gamma += y(i, k) * a.row(i).sum();
    double c = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c += y(i, k) * (1 - y(j, k)) * a(i, j);
    total += c / gamma;
  }
  return total;
}

/// Component labels by BFS over a dense adjacency matrix.
inline std::vector<int> bfs_components(const Graph& g) {
  const Eigen::MatrixXd a = dense_adjacency(g);
  const int n = g.num_nodes();
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  int next = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::deque<int> queue{s};
    comp[s] = next;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v = 0; v < n; ++v)
        if (a(u, v) != 0 && comp[v] < 0) comp[v] = next, queue.push_back(v);
    }
    ++next;
  }
  return comp;
}

/// Minimum cut over all bisections whose smaller side has at least
/// floor(n * lo) nodes; both sides connected is not required.
inline int exhaustive_balanced_cut(const Graph& g, double lo) {
  const int n = g.num_nodes();
  int best = 1 << 30;
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    Partition p{std::vector<int>(static_cast<std::size_t>(n)), 2};
    for (int i = 0; i < n; ++i) p.labels[i] = (mask >> i) & 1u;
    const int small = std::min(p.count(0), p.count(1));
    if (small < static_cast<int>(n * lo)) continue;
    best = std::min(best, cut(g, p));
  }
  return best;
}

inline Graph path_graph(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph(n, e);
}

inline Graph cycle_graph(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return Graph(n, e);
}

inline Graph complete_graph(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return Graph(n, e);
}

/// Two copies of K_m joined by the bridge (m-1, m).
inline Graph bridged_cliques(int m) {
  std::vector<std::pair<int, int>> e;
  for (int off : {0, m})
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) e.emplace_back(off + i, off + j);
  e.emplace_back(m - 1, m);
  return Graph(2 * m, e);
}

/// rows x cols 4-neighbour lattice, node id r * cols + c.
inline Graph lattice(int rows, int cols) {
  std::vector<std::pair<int, int>> e;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) e.emplace_back(r * cols + c, r * cols + c + 1);
      if (r + 1 < rows) e.emplace_back(r * cols + c, (r + 1) * cols + c);
    }
  return Graph(rows * cols, e);
}

}  // namespace polyagg::testing
