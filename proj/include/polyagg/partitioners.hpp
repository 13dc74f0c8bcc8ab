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

// Bisection backends. Each maps (graph, features) to a two-class soft
// partition; the agglomeration driver hardens and repairs the result.

#include "polyagg/gnn.hpp"
#include "polyagg/graph.hpp"
#include "polyagg/mesh.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace polyagg {

class BisectionModel {
public:
  virtual ~BisectionModel() = default;
  virtual std::string name() const = 0;
  /// N x 2 row-stochastic output for a graph of N nodes with N feature rows.
  virtual ProbPartition bisect(const Graph& g, const FeatureMatrix& x) const = 0;
};

struct KMeansConfig {
  int max_iters = 100;
  double tol = 1e-9;
  int restarts = 8;
  std::uint64_t seed = 7;

  void validate() const;
};

struct KMeansResult {
  Partition partition;
  double inertia = 0;        ///< within-cluster sum of squared distances
  bool degenerate = false;   ///< all points coincided; split is arbitrary
};

/// 2-means with k-means++ seeding (first centre uniform, second drawn with
/// probability proportional to squared distance) and Lloyd iterations; the
/// restart with the smallest inertia wins. Needs at least two points.
KMeansResult kmeans_bisect(const Points2d& points, const KMeansConfig& cfg);

struct MultilevelConfig {
  int coarsen_target = 20;
  int refine_sweeps = 4;
  int initial_tries = 8;
  std::uint64_t seed = 7;

  void validate() const;
};

/// Topology-only baseline: heavy-edge matching coarsening, greedy graph
/// growing to half the weight on the coarsest graph, then projection with
/// cut-reducing boundary moves. Result is repaired with fix_partition.
/// DataError on a disconnected graph.
Partition multilevel_bisect(const Graph& g, const MultilevelConfig& cfg);

/// GNN forward pass; hardened by ProbPartition::harden (ties to class 0).
ProbPartition gnn_bisect(const GnnModel& model, const Graph& g, const FeatureMatrix& x);

class KMeansBisector final : public BisectionModel {
public:
  explicit KMeansBisector(KMeansConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }
  std::string name() const override { return "kmeans"; }
  ProbPartition bisect(const Graph& g, const FeatureMatrix& x) const override;

private:
  KMeansConfig cfg_;
};

class MultilevelBisector final : public BisectionModel {
public:
  explicit MultilevelBisector(MultilevelConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }
  std::string name() const override { return "multilevel"; }
  ProbPartition bisect(const Graph& g, const FeatureMatrix& x) const override;

private:
  MultilevelConfig cfg_;
};

class GnnBisector final : public BisectionModel {
public:
  explicit GnnBisector(std::shared_ptr<const GnnModel> model);
  std::string name() const override { return "gnn"; }
  ProbPartition bisect(const Graph& g, const FeatureMatrix& x) const override;
  const GnnModel& model() const { return *model_; }

private:
  std::shared_ptr<const GnnModel> model_;
};

/// Backend by CLI name: "kmeans", "multilevel" or "gnn" (the latter needs a model).
std::unique_ptr<BisectionModel> make_bisector(const std::string& method, std::uint64_t seed,
                                              std::shared_ptr<const GnnModel> model = nullptr);

}  // namespace polyagg
