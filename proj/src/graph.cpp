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

#include "polyagg/graph.hpp"

#include "polyagg/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace polyagg {

Graph::Graph(int num_nodes, const std::vector<std::pair<int, int>>& edges) {
  if (num_nodes < 0) throw UsageError("graph: negative node count");
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(num_nodes));
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= num_nodes || j >= num_nodes)
      throw DataError("graph: edge (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
    if (i == j) throw DataError("graph: self-loop at node " + std::to_string(i));
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  offsets_.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
  for (int i = 0; i < num_nodes; ++i) {
    auto& a = adj[i];
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    offsets_[i + 1] = offsets_[i] + static_cast<int>(a.size());
  }
  targets_.reserve(static_cast<std::size_t>(offsets_.back()));
  for (const auto& a : adj) targets_.insert(targets_.end(), a.begin(), a.end());
}

Eigen::VectorXd Graph::degrees() const {
  Eigen::VectorXd d(num_nodes());
  for (int i = 0; i < num_nodes(); ++i) d(i) = degree(i);
  return d;
}

std::vector<std::pair<int, int>> Graph::edge_list() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(num_edges()));
  for (int i = 0; i < num_nodes(); ++i)
    for (int j : neighbors(i))
      if (i < j) out.emplace_back(i, j);
  return out;
}

int Partition::count(int part) const {
  return static_cast<int>(std::count(labels.begin(), labels.end(), part));
}

ProbPartition::ProbPartition(Eigen::MatrixXd y) : y_(std::move(y)) {
  if (!y_.allFinite()) throw DataError("probability matrix has non-finite entries");
  if ((y_.array() < 0.0).any() || (y_.array() > 1.0).any())
    throw DataError("probability matrix has entries outside [0,1]");
  for (Eigen::Index i = 0; i < y_.rows(); ++i)
    if (std::abs(y_.row(i).sum() - 1.0) > 1e-9)
      throw DataError("probability row " + std::to_string(i) + " does not sum to 1");
}

ProbPartition ProbPartition::one_hot(const Partition& p) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(p.size(), p.num_parts);
  for (int i = 0; i < p.size(); ++i) y(i, p.labels[i]) = 1.0;
  return ProbPartition(std::move(y));
}

Partition ProbPartition::harden() const {
  Partition p;
  p.num_parts = static_cast<int>(y_.cols());
  p.labels.resize(static_cast<std::size_t>(y_.rows()));
  for (Eigen::Index i = 0; i < y_.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < y_.cols(); ++k)
      if (y_(i, k) > y_(i, best)) best = k;
    p.labels[i] = static_cast<int>(best);
  }
  return p;
}

namespace {

void check_labels(const Graph& g, const Partition& p) {
  if (p.size() != g.num_nodes()) throw UsageError("partition size does not match graph");
  for (int l : p.labels)
    if (l < 0 || l >= p.num_parts) throw UsageError("partition label out of range");
}

// cut(S_k, complement) for every class.
std::vector<int> class_cuts(const Graph& g, const Partition& p) {
  std::vector<int> cuts(static_cast<std::size_t>(p.num_parts), 0);
  for (int i = 0; i < g.num_nodes(); ++i)
    for (int j : g.neighbors(i))
      if (p.labels[i] != p.labels[j]) ++cuts[p.labels[i]];
  return cuts;
}

}  // namespace

int cut(const Graph& g, const Partition& p) {
  if (p.num_parts != 2) throw UsageError("cut: bisection expected, use multiway_cut");
  check_labels(g, p);
  int crossing = 0;
  for (auto [i, j] : g.edge_list())
    if (p.labels[i] != p.labels[j]) ++crossing;
  return crossing;
}

double multiway_cut(const Graph& g, const Partition& p) {
  check_labels(g, p);
  const auto cuts = class_cuts(g, p);
  return 0.5 * std::accumulate(cuts.begin(), cuts.end(), 0.0);
}

double volume(const Graph& g, std::span<const int> nodes) {
  double v = 0;
  for (int i : nodes) v += g.degree(i);
  return v;
}

double normalized_cut(const Graph& g, const Partition& p) {
  check_labels(g, p);
  const auto cuts = class_cuts(g, p);
  std::vector<double> vol(static_cast<std::size_t>(p.num_parts), 0.0);
  for (int i = 0; i < g.num_nodes(); ++i) vol[p.labels[i]] += g.degree(i);
  double value = 0;
  for (int k = 0; k < p.num_parts; ++k) {
    if (vol[k] <= 0) throw NumericalError("normalized_cut: class " + std::to_string(k) + " has zero volume");
    value += cuts[k] / vol[k];
  }
  return value;
}

double expected_cut(const Graph& g, const ProbPartition& y, int k) {
  const auto& m = y.matrix();
  if (m.rows() != g.num_nodes()) throw UsageError("expected_cut: row count does not match graph");
  if (k < 0 || k >= m.cols()) throw UsageError("expected_cut: class out of range");
  double value = 0;
  for (int i = 0; i < g.num_nodes(); ++i)
    for (int j : g.neighbors(i)) value += m(i, k) * (1.0 - m(j, k));
  return value;
}

Eigen::VectorXd expected_volumes(const Graph& g, const Eigen::MatrixXd& y) {
  return y.transpose() * g.degrees();
}

double expected_normalized_cut(const Graph& g, const ProbPartition& y) {
  const auto& m = y.matrix();
  if (m.rows() != g.num_nodes()) throw UsageError("expected_normalized_cut: row count does not match graph");
  const Eigen::VectorXd gamma = expected_volumes(g, m);
  double value = 0;
  for (Eigen::Index k = 0; k < m.cols(); ++k) {
    if (!(gamma(k) > 0))
      throw NumericalError("expected_normalized_cut: expected volume of class " + std::to_string(k) + " is zero");
    value += expected_cut(g, y, static_cast<int>(k)) / gamma(k);
  }
  return value;
}

namespace {

// Components of the subgraph whose edges join equal-labelled nodes. With all
// labels equal this is the plain component labelling.
std::vector<int> label_components(const Graph& g, const std::vector<int>& labels) {
  const int n = g.num_nodes();
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  std::vector<int> stack;
  int next = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : g.neighbors(u)) {
        if (comp[v] < 0 && labels[v] == labels[u]) {
          comp[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return comp;
}

}  // namespace

std::vector<int> connected_components(const Graph& g) {
  return label_components(g, std::vector<int>(static_cast<std::size_t>(g.num_nodes()), 0));
}

int count_components(const std::vector<int>& component) {
  return component.empty() ? 0 : *std::max_element(component.begin(), component.end()) + 1;
}

bool is_connected(const Graph& g) { return count_components(connected_components(g)) <= 1; }

BisectionCheck is_valid_bisection(const Graph& g, const Partition& p) {
  if (p.num_parts != 2) return {false, "not a bisection"};
  check_labels(g, p);
  for (int c = 0; c < 2; ++c)
    if (p.count(c) == 0) return {false, "class " + std::to_string(c) + " is empty"};
  const auto comp = label_components(g, p.labels);
  std::vector<int> seen_in_class(2, -1);
  for (int i = 0; i < g.num_nodes(); ++i) {
    int& seen = seen_in_class[p.labels[i]];
    if (seen < 0) seen = comp[i];
    else if (seen != comp[i]) return {false, "class " + std::to_string(p.labels[i]) + " is disconnected"};
  }
  return {true, {}};
}

Partition fix_partition(const Graph& g, const Partition& p) {
  if (p.num_parts != 2) throw UsageError("fix_partition: bisection expected");
  check_labels(g, p);
  if (p.count(0) == 0 || p.count(1) == 0) throw UsageError("fix_partition: both classes must be nonempty");
  if (!is_connected(g)) throw DataError("fix_partition: graph is disconnected");

  Partition out = p;
  auto& labels = out.labels;
  const int n = g.num_nodes();

  // Moves every non-largest component of `cls` to the class holding most of
  // its outside neighbours. Returns whether anything changed.
  auto sweep_class = [&](int cls, bool use_majority) {
    const auto comp = label_components(g, labels);
    const int ncomp = count_components(comp);
    std::vector<int> size(static_cast<std::size_t>(ncomp), 0);
    for (int i = 0; i < n; ++i)
      if (labels[i] == cls) ++size[comp[i]];
    int largest = -1;
    for (int c = 0; c < ncomp; ++c)
      if (size[c] > 0 && (largest < 0 || size[c] > size[largest])) largest = c;

    // Outside-neighbour counts per (component, class).
    std::vector<std::array<int, 2>> votes(static_cast<std::size_t>(ncomp), {0, 0});
    for (int i = 0; i < n; ++i) {
      if (labels[i] != cls || comp[i] == largest) continue;
      for (int j : g.neighbors(i))
        if (comp[j] != comp[i]) ++votes[comp[i]][labels[j]];
    }
    bool changed = false;
    std::vector<int> target(static_cast<std::size_t>(ncomp), cls);
    for (int c = 0; c < ncomp; ++c) {
      if (size[c] == 0 || c == largest) continue;
      const int other = 1 - cls;
      const auto& v = votes[c];
      int to = v[other] >= v[cls] ? other : cls;  // ties go to the opposite class
      if (!use_majority) to = other;
      target[c] = to;
    }
    for (int i = 0; i < n; ++i) {
      if (labels[i] == cls && target[comp[i]] != cls) {
        labels[i] = target[comp[i]];
        changed = true;
      }
    }
    return changed;
  };

  for (int sweep = 0; sweep <= n; ++sweep) {
    if (is_valid_bisection(g, out)) return out;
    bool changed = false;
    for (int cls = 0; cls < 2; ++cls) changed |= sweep_class(cls, true);
    if (!changed) break;
  }
  // Stragglers: merge unconditionally until valid.
  for (int round = 0; round <= n && !is_valid_bisection(g, out); ++round)
    for (int cls = 0; cls < 2; ++cls) sweep_class(cls, false);
  if (!is_valid_bisection(g, out)) throw NumericalError("fix_partition: could not repair bisection");
  return out;
}

Subgraph induced_subgraph(const Graph& g, std::span<const int> nodes) {
  if (nodes.empty()) throw UsageError("induced_subgraph: empty node set");
  std::vector<int> local(static_cast<std::size_t>(g.num_nodes()), -1);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k] < 0 || nodes[k] >= g.num_nodes()) throw UsageError("induced_subgraph: node out of range");
    local[nodes[k]] = static_cast<int>(k);
  }
  std::vector<std::pair<int, int>> edges;
  for (std::size_t k = 0; k < nodes.size(); ++k)
    for (int j : g.neighbors(nodes[k]))
      if (local[j] > static_cast<int>(k)) edges.emplace_back(static_cast<int>(k), local[j]);
  return {Graph(static_cast<int>(nodes.size()), edges), {nodes.begin(), nodes.end()}};
}

}  // namespace polyagg
