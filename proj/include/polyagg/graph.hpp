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

// Undirected, unweighted, self-loop-free graphs and the partition
// functionals evaluated on them (cut, volume, normalized cut and their
// expectations over soft assignments).

#include <Eigen/Core>

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace polyagg {

class Graph {
public:
  Graph() = default;

  /// Builds the graph from an edge list. Duplicate edges (in either
  /// orientation) collapse to one; self-loops are rejected with DataError.
  Graph(int num_nodes, const std::vector<std::pair<int, int>>& edges);

  int num_nodes() const { return static_cast<int>(offsets_.size()) - 1; }
  int num_edges() const { return static_cast<int>(targets_.size()) / 2; }

  std::span<const int> neighbors(int i) const {
    return {targets_.data() + offsets_[i], targets_.data() + offsets_[i + 1]};
  }
  int degree(int i) const { return offsets_[i + 1] - offsets_[i]; }

  /// Degree vector D.
  Eigen::VectorXd degrees() const;

  /// CSR arrays; neighbor lists are sorted.
  const std::vector<int>& offsets() const { return offsets_; }
  const std::vector<int>& targets() const { return targets_; }

  /// Each undirected edge once, as (i, j) with i < j.
  std::vector<std::pair<int, int>> edge_list() const;

private:
  std::vector<int> offsets_{0};
  std::vector<int> targets_;
};

/// Hard assignment of nodes to classes 0..num_parts-1.
struct Partition {
  std::vector<int> labels;
  int num_parts = 2;

  int size() const { return static_cast<int>(labels.size()); }
  int count(int part) const;
  bool operator==(const Partition&) const = default;
};

/// Row-stochastic N x M matrix of class probabilities.
class ProbPartition {
public:
  ProbPartition() = default;
  /// Validates entries in [0,1] and unit row sums (1e-9); DataError otherwise.
  explicit ProbPartition(Eigen::MatrixXd y);

  static ProbPartition one_hot(const Partition& p);

  const Eigen::MatrixXd& matrix() const { return y_; }
  Eigen::Index rows() const { return y_.rows(); }
  Eigen::Index cols() const { return y_.cols(); }

  /// Per-row argmax; ties resolve to the lowest class id.
  Partition harden() const;

private:
  Eigen::MatrixXd y_;
};

/// Number of edges between the two classes of a bisection.
int cut(const Graph& g, const Partition& p);
/// Half the sum over classes of cut(S_k, complement).
double multiway_cut(const Graph& g, const Partition& p);
/// Sum of degrees over `nodes`.
double volume(const Graph& g, std::span<const int> nodes);
/// Sum over classes of cut(S_k, complement) / vol(S_k). Zero-volume class -> NumericalError.
double normalized_cut(const Graph& g, const Partition& p);

/// Sum_i Sum_{j in N(i)} Y_ik (1 - Y_jk).
double expected_cut(const Graph& g, const ProbPartition& y, int k);
/// Gamma = Y^T D, the expected class volumes.
Eigen::VectorXd expected_volumes(const Graph& g, const Eigen::MatrixXd& y);
/// Sum_k expected_cut_k / Gamma_k. Any Gamma_k == 0 -> NumericalError.
double expected_normalized_cut(const Graph& g, const ProbPartition& y);

/// Component id per node (ids are dense, ordered by smallest member).
std::vector<int> connected_components(const Graph& g);
int count_components(const std::vector<int>& component);
bool is_connected(const Graph& g);

struct BisectionCheck {
  bool valid = false;
  std::string reason;
  explicit operator bool() const { return valid; }
};

/// Both classes nonempty and each inducing a connected subgraph.
BisectionCheck is_valid_bisection(const Graph& g, const Partition& p);

/// Repairs a bisection so it becomes valid: per class the largest component
/// keeps its label and smaller components move to the class holding the
/// majority of their outside neighbours. Requires a connected graph
/// (DataError otherwise) and two nonempty classes (UsageError).
Partition fix_partition(const Graph& g, const Partition& p);

struct Subgraph {
  Graph graph;
  std::vector<int> to_parent;  ///< local id -> parent id
};

/// Subgraph induced by `nodes` (order kept: local id k is nodes[k]).
Subgraph induced_subgraph(const Graph& g, std::span<const int> nodes);

}  // namespace polyagg
