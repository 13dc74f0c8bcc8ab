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

#include "polyagg/partitioners.hpp"

#include "polyagg/error.hpp"
#include "polyagg/log.hpp"
#include "polyagg/random.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace polyagg {

void KMeansConfig::validate() const {
  if (max_iters < 1 || !(tol >= 0) || restarts < 1)
    throw UsageError("kmeans: need max_iters >= 1, tol >= 0, restarts >= 1");
}

void MultilevelConfig::validate() const {
  if (coarsen_target < 2 || refine_sweeps < 0 || initial_tries < 1)
    throw UsageError("multilevel: need coarsen_target >= 2, refine_sweeps >= 0, initial_tries >= 1");
}

// ---------------------------------------------------------------- k-means

KMeansResult kmeans_bisect(const Points2d& points, const KMeansConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = points.rows();
  if (n < 2) throw UsageError("kmeans_bisect: need at least two points");

  KMeansResult best;
  best.partition.labels.assign(static_cast<std::size_t>(n), 0);
  const bool coincident = ((points.rowwise() - points.row(0)).rowwise().squaredNorm().array() == 0.0).all();
  if (coincident) {
    warn("kmeans_bisect: all points coincide, using an arbitrary balanced split");
    for (Eigen::Index i = n / 2; i < n; ++i) best.partition.labels[i] = 1;
    best.degenerate = true;
    return best;
  }

  Rng rng = make_rng(cfg.seed, "kmeans");
  best.inertia = std::numeric_limits<double>::infinity();
  std::vector<int> labels(static_cast<std::size_t>(n));

  for (int restart = 0; restart < cfg.restarts; ++restart) {
    Eigen::Matrix<double, 2, 2, Eigen::RowMajor> centers;
    centers.row(0) = points.row(uniform_int(rng, 0, n - 1));
    const Eigen::VectorXd d2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    const double target = uniform01(rng) * d2.sum();
    Eigen::Index pick = n - 1;
    double acc = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      acc += d2(i);
      if (acc > target && d2(i) > 0) {
        pick = i;
        break;
      }
    }
    centers.row(1) = points.row(pick);

    std::fill(labels.begin(), labels.end(), -1);
    for (int it = 0; it < cfg.max_iters; ++it) {
      bool stable = true;
      std::array<int, 2> count{0, 0};
      for (Eigen::Index i = 0; i < n; ++i) {
        const double a = (points.row(i) - centers.row(0)).squaredNorm();
        const double b = (points.row(i) - centers.row(1)).squaredNorm();
        const int l = b < a ? 1 : 0;
        if (labels[i] != l) stable = false;
        labels[i] = l;
        ++count[l];
      }
      // An emptied cluster takes the point farthest from its centre.
      for (int c = 0; c < 2; ++c) {
        if (count[c] > 0) continue;
        Eigen::Index far = 0;
        double fd = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d = (points.row(i) - centers.row(labels[i])).squaredNorm();
          if (d > fd) fd = d, far = i;
        }
        --count[labels[far]];
        labels[far] = c;
        ++count[c];
        stable = false;
      }
      Eigen::Matrix<double, 2, 2, Eigen::RowMajor> next = Eigen::Matrix<double, 2, 2, Eigen::RowMajor>::Zero();
      for (Eigen::Index i = 0; i < n; ++i) next.row(labels[i]) += points.row(i);
      for (int c = 0; c < 2; ++c) next.row(c) /= count[c];
      const double moved = (next - centers).rowwise().norm().maxCoeff();
      centers = next;
      if (stable || moved <= cfg.tol) break;
    }
    double inertia = 0;
    for (Eigen::Index i = 0; i < n; ++i) inertia += (points.row(i) - centers.row(labels[i])).squaredNorm();
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.partition.labels = labels;
    }
  }
  return best;
}

ProbPartition KMeansBisector::bisect(const Graph& g, const FeatureMatrix& x) const {
  if (x.rows() != g.num_nodes()) throw UsageError("kmeans: feature rows do not match graph");
  const Points2d barycenters = x.rightCols<2>();
  return ProbPartition::one_hot(kmeans_bisect(barycenters, cfg_).partition);
}

// ---------------------------------------------------------------- multilevel

namespace {

struct WeightedGraph {
  std::vector<int> offsets{0}, targets;
  std::vector<double> edge_w, node_w;

  int size() const { return static_cast<int>(node_w.size()); }
};

WeightedGraph from_graph(const Graph& g) {
  WeightedGraph w;
  w.offsets = g.offsets();
  w.targets = g.targets();
  w.edge_w.assign(w.targets.size(), 1.0);
  w.node_w.assign(static_cast<std::size_t>(g.num_nodes()), 1.0);
  return w;
}

// Heavy-edge matching in random visit order. Returns fine -> coarse ids.
std::vector<int> match(const WeightedGraph& g, Rng& rng, int& coarse_n) {
  const int n = g.size();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  shuffle(order.begin(), order.end(), rng);
  std::vector<int> map(static_cast<std::size_t>(n), -1);
  coarse_n = 0;
  for (int u : order) {
    if (map[u] >= 0) continue;
    int best = -1;
    double best_w = -1;
    for (int k = g.offsets[u]; k < g.offsets[u + 1]; ++k) {
      const int v = g.targets[k];
      if (map[v] < 0 && v != u && g.edge_w[k] > best_w) best = v, best_w = g.edge_w[k];
    }
    map[u] = coarse_n;
    if (best >= 0) map[best] = coarse_n;
    ++coarse_n;
  }
  return map;
}

WeightedGraph contract(const WeightedGraph& g, const std::vector<int>& map, int coarse_n) {
  std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(coarse_n));
  WeightedGraph c;
  c.node_w.assign(static_cast<std::size_t>(coarse_n), 0.0);
  for (int u = 0; u < g.size(); ++u) {
    c.node_w[map[u]] += g.node_w[u];
    for (int k = g.offsets[u]; k < g.offsets[u + 1]; ++k) {
      const int a = map[u], b = map[g.targets[k]];
      if (a != b) adj[a].emplace_back(b, g.edge_w[k]);
    }
  }
  for (auto& list : adj) {
    std::sort(list.begin(), list.end());
    for (std::size_t k = 0; k < list.size();) {
      std::size_t e = k;
      double w = 0;
      while (e < list.size() && list[e].first == list[k].first) w += list[e++].second;
      c.targets.push_back(list[k].first);
      c.edge_w.push_back(w);
      k = e;
    }
    c.offsets.push_back(static_cast<int>(c.targets.size()));
  }
  return c;
}

double weighted_cut(const WeightedGraph& g, const std::vector<int>& side) {
  double cut = 0;
  for (int u = 0; u < g.size(); ++u)
    for (int k = g.offsets[u]; k < g.offsets[u + 1]; ++k)
      if (side[u] != side[g.targets[k]]) cut += g.edge_w[k];
  return 0.5 * cut;
}

// Greedy graph growing from `seed` until the region holds half the weight.
std::vector<int> grow_region(const WeightedGraph& g, int seed) {
  const int n = g.size();
  const double total = std::accumulate(g.node_w.begin(), g.node_w.end(), 0.0);
  std::vector<int> side(static_cast<std::size_t>(n), 1);
  std::vector<double> gain(static_cast<std::size_t>(n), 0.0);
  std::vector<char> frontier(static_cast<std::size_t>(n), 0);
  double region = 0;
  int next = seed;
  while (next >= 0) {
    side[next] = 0;
    frontier[next] = 0;
    region += g.node_w[next];
    if (region >= 0.5 * total) break;
    for (int k = g.offsets[next]; k < g.offsets[next + 1]; ++k) {
      const int v = g.targets[k];
      if (side[v] == 0) continue;
      if (!frontier[v]) {
        frontier[v] = 1;
        gain[v] = 0;
        for (int q = g.offsets[v]; q < g.offsets[v + 1]; ++q)
          gain[v] += side[g.targets[q]] == 0 ? g.edge_w[q] : -g.edge_w[q];
      } else {
        gain[v] += 2 * g.edge_w[k];
      }
    }
    next = -1;
    for (int v = 0; v < n; ++v)
      if (frontier[v] && (next < 0 || gain[v] > gain[next])) next = v;
  }
  return side;
}

void refine(const WeightedGraph& g, std::vector<int>& side, int sweeps) {
  const double total = std::accumulate(g.node_w.begin(), g.node_w.end(), 0.0);
  const double hi = 0.6 * total;
  std::array<double, 2> weight{0, 0};
  std::array<int, 2> count{0, 0};
  for (int u = 0; u < g.size(); ++u) weight[side[u]] += g.node_w[u], ++count[side[u]];
  for (int s = 0; s < sweeps; ++s) {
    bool moved = false;
    for (int u = 0; u < g.size(); ++u) {
      const int from = side[u], to = 1 - from;
      if (count[from] <= 1) continue;
      double own = 0, other = 0;
      for (int k = g.offsets[u]; k < g.offsets[u + 1]; ++k)
        (side[g.targets[k]] == from ? own : other) += g.edge_w[k];
      if (!(other > own)) continue;
      const double limit = std::max(hi, std::max(weight[0], weight[1]));
      if (weight[to] + g.node_w[u] > limit) continue;
      side[u] = to;
      weight[from] -= g.node_w[u], weight[to] += g.node_w[u];
      --count[from], ++count[to];
      moved = true;
    }
    if (!moved) break;
  }
}

}  // namespace

Partition multilevel_bisect(const Graph& g, const MultilevelConfig& cfg) {
  cfg.validate();
  if (g.num_nodes() < 2) throw UsageError("multilevel_bisect: need at least two nodes");
  if (!is_connected(g)) throw DataError("multilevel_bisect: graph is disconnected");

  Rng rng = make_rng(cfg.seed, "multilevel");
  std::vector<WeightedGraph> levels{from_graph(g)};
  std::vector<std::vector<int>> maps;
  while (levels.back().size() > cfg.coarsen_target) {
    int coarse_n = 0;
    auto map = match(levels.back(), rng, coarse_n);
    if (coarse_n > 0.9 * levels.back().size()) break;  // matching stalled
    levels.push_back(contract(levels.back(), map, coarse_n));
    maps.push_back(std::move(map));
  }

  const WeightedGraph& coarsest = levels.back();
  std::vector<int> starts(static_cast<std::size_t>(coarsest.size()));
  std::iota(starts.begin(), starts.end(), 0);
  shuffle(starts.begin(), starts.end(), rng);
  starts.resize(std::min<std::size_t>(starts.size(), static_cast<std::size_t>(cfg.initial_tries)));
  std::vector<int> side;
  double best_cut = std::numeric_limits<double>::infinity();
  for (int s : starts) {
    auto candidate = grow_region(coarsest, s);
    refine(coarsest, candidate, cfg.refine_sweeps);
    const double c = weighted_cut(coarsest, candidate);
    if (c < best_cut) best_cut = c, side = std::move(candidate);
  }

  for (std::size_t level = maps.size(); level-- > 0;) {
    std::vector<int> finer(maps[level].size());
    for (std::size_t u = 0; u < finer.size(); ++u) finer[u] = side[maps[level][u]];
    side = std::move(finer);
    refine(levels[level], side, cfg.refine_sweeps);
  }

  Partition p{side, 2};
  if (!is_valid_bisection(g, p)) p = fix_partition(g, p);
  return p;
}

ProbPartition MultilevelBisector::bisect(const Graph& g, const FeatureMatrix&) const {
  return ProbPartition::one_hot(multilevel_bisect(g, cfg_));
}

// ---------------------------------------------------------------- gnn

ProbPartition gnn_bisect(const GnnModel& model, const Graph& g, const FeatureMatrix& x) {
  if (x.cols() != model.arch.feature_width) throw UsageError("gnn_bisect: feature width does not match model");
  if (x.rows() != g.num_nodes()) throw UsageError("gnn_bisect: feature rows do not match graph");
  return forward(model, g, x);
}

GnnBisector::GnnBisector(std::shared_ptr<const GnnModel> model) : model_(std::move(model)) {
  if (!model_) throw UsageError("gnn backend needs a model");
}

ProbPartition GnnBisector::bisect(const Graph& g, const FeatureMatrix& x) const { return gnn_bisect(*model_, g, x); }

std::unique_ptr<BisectionModel> make_bisector(const std::string& method, std::uint64_t seed,
                                              std::shared_ptr<const GnnModel> model) {
  if (method == "kmeans") {
    KMeansConfig cfg;
    cfg.seed = seed;
    return std::make_unique<KMeansBisector>(cfg);
  }
  if (method == "multilevel") {
    MultilevelConfig cfg;
    cfg.seed = seed;
    return std::make_unique<MultilevelBisector>(cfg);
  }
  if (method == "gnn") {
    if (!model) throw UsageError("method gnn requires --model");
    return std::make_unique<GnnBisector>(std::move(model));
  }
  throw UsageError("unknown method '" + method + "' (gnn|kmeans|multilevel)");
}

}  // namespace polyagg
