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

#include "polyagg/agglomerate.hpp"

#include "polyagg/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <unordered_map>

namespace polyagg {

namespace {

// Andrew's monotone chain; collinear points dropped.
std::vector<Point2d> convex_hull(std::vector<Point2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2d& a, const Point2d& b) {
    return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Point2d& o, const Point2d& a, const Point2d& b) {
    return (a(0) - o(0)) * (b(1) - o(1)) - (a(1) - o(1)) * (b(0) - o(0));
  };
  std::vector<Point2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

double point_set_diameter(const std::vector<Point2d>& pts) {
  double best = 0;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) best = std::max(best, (pts[a] - pts[b]).squaredNorm());
  return std::sqrt(best);
}

std::vector<Point2d> cells_hull(const PolyMesh& mesh, std::span<const int> cells) {
  std::vector<Point2d> pts;
  for (int c : cells)
    for (int v : mesh.cells().at(static_cast<std::size_t>(c))) pts.emplace_back(mesh.vertices().row(v));
  return convex_hull(std::move(pts));
}

// The cells of an agglomerated level seen as the units of a new agglomeration.
struct UnitView {
  WeightedAdjacency adjacency;
  FeatureMatrix features;
  std::vector<std::vector<Point2d>> hulls;
};

UnitView make_units(const AgglomeratedMesh& level) {
  const PolyMesh& mesh = level.fine();
  const auto fine = connectivity_with_lengths(mesh);
  const auto& a = level.assignment();
  const int units = level.num_coarse();

  std::map<std::pair<int, int>, double> shared;
  for (int i = 0; i < fine.graph.num_nodes(); ++i) {
    const auto nb = fine.graph.neighbors(i);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const int j = nb[k];
      if (i < j && a[i] != a[j])
        shared[std::minmax(a[i], a[j])] += fine.shared_length[static_cast<std::size_t>(fine.graph.offsets()[i]) + k];
    }
  }
  std::vector<std::pair<int, int>> edges;
  for (const auto& [e, len] : shared) edges.push_back(e);
  UnitView view{{Graph(units, edges), {}}, FeatureMatrix::Zero(units, 3), {}};
  const Graph& g = view.adjacency.graph;
  view.adjacency.shared_length.resize(g.targets().size());
  for (int i = 0; i < units; ++i) {
    const auto nb = g.neighbors(i);
    for (std::size_t k = 0; k < nb.size(); ++k)
      view.adjacency.shared_length[static_cast<std::size_t>(g.offsets()[i]) + k] = shared.at(std::minmax(i, nb[k]));
  }

  const FeatureMatrix fx = extract_features(mesh);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    view.features(a[c], 0) += fx(c, 0);
    view.features.block<1, 2>(a[c], 1) += fx(c, 0) * fx.block<1, 2>(c, 1);
  }
  for (int u = 0; u < units; ++u) view.features.block<1, 2>(u, 1) /= view.features(u, 0);

  view.hulls.reserve(static_cast<std::size_t>(units));
  for (const auto& m : level.members()) view.hulls.push_back(cells_hull(mesh, m));
  return view;
}

std::vector<double> sub_lengths(const WeightedAdjacency& parent, const Subgraph& sub) {
  std::vector<double> out;
  out.reserve(sub.graph.targets().size());
  for (int i = 0; i < sub.graph.num_nodes(); ++i) {
    const int pi = sub.to_parent[i];
    const auto pnb = parent.graph.neighbors(pi);
    for (int j : sub.graph.neighbors(i)) {
      const int pj = sub.to_parent[j];
      const auto it = std::lower_bound(pnb.begin(), pnb.end(), pj);
      out.push_back(parent.shared_length[static_cast<std::size_t>(parent.graph.offsets()[pi] + (it - pnb.begin()))]);
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- AgglomeratedMesh

AgglomeratedMesh::AgglomeratedMesh(std::shared_ptr<const PolyMesh> fine, std::vector<int> assignment)
    : fine_(std::move(fine)), assignment_(std::move(assignment)) {
  if (!fine_) throw UsageError("agglomerated mesh needs a fine mesh");
  if (static_cast<int>(assignment_.size()) != fine_->num_cells())
    throw DataError("assignment has " + std::to_string(assignment_.size()) + " entries for " +
                    std::to_string(fine_->num_cells()) + " cells");
  int count = 0;
  for (int a : assignment_) {
    if (a < 0) throw DataError("assignment contains negative coarse id");
    count = std::max(count, a + 1);
  }
  members_.resize(static_cast<std::size_t>(count));
  for (int c = 0; c < fine_->num_cells(); ++c) members_[assignment_[c]].push_back(c);
  for (int k = 0; k < count; ++k)
    if (members_[k].empty()) throw DataError("coarse id " + std::to_string(k) + " has no fine cells");
  diameters_.reserve(members_.size());
  for (const auto& m : members_) diameters_.push_back(submesh_diameter(*fine_, m));
}

AgglomeratedMesh AgglomeratedMesh::identity(std::shared_ptr<const PolyMesh> fine) {
  std::vector<int> a(static_cast<std::size_t>(fine->num_cells()));
  std::iota(a.begin(), a.end(), 0);
  return AgglomeratedMesh(std::move(fine), std::move(a));
}

std::vector<double> AgglomeratedMesh::areas() const {
  std::vector<double> out(members_.size(), 0.0);
  for (int c = 0; c < fine_->num_cells(); ++c) out[assignment_[c]] += element_area(*fine_, c);
  return out;
}

double submesh_diameter(const PolyMesh& mesh, std::span<const int> cells) {
  if (cells.empty()) throw UsageError("submesh_diameter: empty cell set");
  return point_set_diameter(cells_hull(mesh, cells));
}

// ---------------------------------------------------------------- boundaries

std::vector<std::vector<std::vector<int>>> coarse_boundary_loops(const AgglomeratedMesh& agg) {
  const PolyMesh& mesh = agg.fine();
  const auto nv = static_cast<std::uint64_t>(mesh.num_vertices());
  std::unordered_map<std::uint64_t, std::vector<int>> owners;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& loop = mesh.cells()[c];
    for (std::size_t k = 0; k < loop.size(); ++k) {
      auto a = static_cast<std::uint64_t>(loop[k]), b = static_cast<std::uint64_t>(loop[(k + 1) % loop.size()]);
      owners[std::min(a, b) * nv + std::max(a, b)].push_back(c);
    }
  }
  const auto& assign = agg.assignment();
  std::vector<std::vector<std::vector<int>>> result(static_cast<std::size_t>(agg.num_coarse()));
  for (int cc = 0; cc < agg.num_coarse(); ++cc) {
    // Directed boundary edges, keyed by start vertex.
    std::multimap<int, int> out;
    for (int c : agg.members()[cc]) {
      const auto& loop = mesh.cells()[c];
      for (std::size_t k = 0; k < loop.size(); ++k) {
        const int a = loop[k], b = loop[(k + 1) % loop.size()];
        const auto key = static_cast<std::uint64_t>(std::min(a, b)) * nv + static_cast<std::uint64_t>(std::max(a, b));
        const auto& own = owners.at(key);
        const bool interior =
            std::any_of(own.begin(), own.end(), [&](int o) { return o != c && assign[o] == cc; });
        if (!interior) out.emplace(a, b);
      }
    }
    auto& loops = result[static_cast<std::size_t>(cc)];
    while (!out.empty()) {
      auto it = out.begin();
      const int start = it->first;
      std::vector<int> loop{start};
      int cur = it->second;
      out.erase(it);
      std::size_t guard = 0;
      while (cur != start) {
        auto next = out.find(cur);
        if (next == out.end() || ++guard > static_cast<std::size_t>(mesh.num_vertices()) + 1)
          throw DataError("coarse cell " + std::to_string(cc) + ": boundary edges do not form closed loops");
        loop.push_back(cur);
        cur = next->second;
        out.erase(next);
      }
      loops.push_back(std::move(loop));
    }
  }
  return result;
}

std::vector<std::vector<Points2d>> coarse_boundaries(const AgglomeratedMesh& agg) {
  const auto idx = coarse_boundary_loops(agg);
  std::vector<std::vector<Points2d>> out(idx.size());
  for (std::size_t c = 0; c < idx.size(); ++c)
    for (const auto& loop : idx[c]) {
      Points2d pts(static_cast<Eigen::Index>(loop.size()), 2);
      for (std::size_t k = 0; k < loop.size(); ++k)
        pts.row(static_cast<Eigen::Index>(k)) = agg.fine().vertices().row(loop[k]);
      out[c].push_back(std::move(pts));
    }
  return out;
}

// ---------------------------------------------------------------- bisection helpers

double interface_length(const Graph& g, const Partition& p, std::span<const double> shared_length) {
  double total = 0;
  for (int i = 0; i < g.num_nodes(); ++i)
    for (int k = g.offsets()[i]; k < g.offsets()[i + 1]; ++k)
      if (p.labels[i] != p.labels[g.targets()[k]]) total += shared_length[k];
  return 0.5 * total;
}

Partition adjust_partition(const Graph& g, const Partition& p, std::span<const double> shared_length,
                           int max_sweeps) {
  if (shared_length.size() != g.targets().size()) throw UsageError("adjust_partition: lengths not aligned with graph");
  Partition out = p;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool improved = false;
    for (int i = 0; i < g.num_nodes(); ++i) {
      const int own = out.labels[i];
      double same = 0, other = 0;
      for (int k = g.offsets()[i]; k < g.offsets()[i + 1]; ++k)
        (out.labels[g.targets()[k]] == own ? same : other) += shared_length[k];
      // Strict improvement, ignoring rounding noise.
      if (!(other - same > 1e-12 * (other + same))) continue;
      out.labels[i] = 1 - own;
      if (is_valid_bisection(g, out)) improved = true;
      else out.labels[i] = own;
    }
    if (!improved) break;
  }
  return out;
}

namespace {

Partition bisect_counted(const Graph& g, const FeatureMatrix& x, const BisectionModel& model,
                         AgglomerateStats* stats) {
  if (g.num_nodes() < 2) throw UsageError("bisect_with_fallback: need at least two nodes");
  auto repair = [&](const Partition& p) -> std::optional<Partition> {
    if (p.count(0) == 0 || p.count(1) == 0) return std::nullopt;
    if (is_valid_bisection(g, p)) return p;
    return fix_partition(g, p);
  };

  const ProbPartition y = model.bisect(g, x);
  if (y.rows() != g.num_nodes() || y.cols() != 2) throw DataError(model.name() + ": output shape mismatch");
  const Partition hard = y.harden();
  if (stats) {
    ++stats->model_bisections;
    if (hard.count(0) == 0 || hard.count(1) == 0) ++stats->fallbacks;
    else if (!is_valid_bisection(g, hard)) ++stats->repaired;
  }
  if (auto p = repair(hard)) return *p;

  const Points2d barycenters = x.rightCols<2>();
  if (auto p = repair(kmeans_bisect(barycenters, KMeansConfig{}).partition)) return *p;

  // Median split along the longer barycentre extent.
  const Eigen::RowVector2d extent = barycenters.colwise().maxCoeff() - barycenters.colwise().minCoeff();
  const int axis = extent(1) > extent(0) ? 1 : 0;
  std::vector<int> order(static_cast<std::size_t>(g.num_nodes()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return barycenters(a, axis) < barycenters(b, axis); });
  Partition p{std::vector<int>(order.size(), 0), 2};
  for (std::size_t k = order.size() / 2; k < order.size(); ++k) p.labels[order[k]] = 1;
  return *repair(p);
}

}  // namespace

Partition bisect_with_fallback(const Graph& g, const FeatureMatrix& x, const BisectionModel& model) {
  return bisect_counted(g, x, model, nullptr);
}

// ---------------------------------------------------------------- agglomerate

AgglomeratedMesh agglomerate(const AgglomeratedMesh& level, double h_star, const BisectionModel& model,
                             AgglomerateStats* stats) {
  if (!(h_star > 0)) throw UsageError("agglomerate: target size must be positive");
  const UnitView units = make_units(level);
  const Graph& graph = units.adjacency.graph;
  if (!is_connected(graph)) throw DataError("agglomerate: mesh connectivity graph is disconnected");

  AgglomerateStats local;
  std::vector<int> unit_to_coarse(static_cast<std::size_t>(level.num_coarse()), -1);
  int next_id = 0;
  // Diameters equal to h_star up to rounding count as within.
  const double limit = h_star * (1.0 + 1e-9);

  std::function<void(std::vector<int>, int)> recurse = [&](std::vector<int> group, int depth) {
    local.max_depth = std::max(local.max_depth, depth);
    std::vector<Point2d> pts;
    for (int u : group) pts.insert(pts.end(), units.hulls[u].begin(), units.hulls[u].end());
    if (group.size() == 1 || point_set_diameter(convex_hull(std::move(pts))) <= limit) {
      for (int u : group) unit_to_coarse[u] = next_id;
      ++next_id;
      return;
    }
    const Subgraph sub = induced_subgraph(graph, group);
    FeatureMatrix x(static_cast<Eigen::Index>(group.size()), 3);
    for (std::size_t k = 0; k < group.size(); ++k) x.row(static_cast<Eigen::Index>(k)) = units.features.row(group[k]);

    Partition p = bisect_counted(sub.graph, x, model, &local);
    p = adjust_partition(sub.graph, p, sub_lengths(units.adjacency, sub));
    if (!is_valid_bisection(sub.graph, p)) throw NumericalError("agglomerate: invalid bisection after adjustment");

    std::array<std::vector<int>, 2> sides;
    for (std::size_t k = 0; k < group.size(); ++k) sides[p.labels[k]].push_back(group[k]);
    group.clear();
    group.shrink_to_fit();
    recurse(std::move(sides[0]), depth + 1);
    recurse(std::move(sides[1]), depth + 1);
  };
  std::vector<int> all(static_cast<std::size_t>(level.num_coarse()));
  std::iota(all.begin(), all.end(), 0);
  recurse(std::move(all), 0);

  std::vector<int> assignment(level.assignment().size());
  for (std::size_t c = 0; c < assignment.size(); ++c) assignment[c] = unit_to_coarse[level.assignment()[c]];
  if (stats) *stats = local;
  return AgglomeratedMesh(level.fine_ptr(), std::move(assignment));
}

AgglomeratedMesh agglomerate(std::shared_ptr<const PolyMesh> mesh, double h_star, const BisectionModel& model,
                             AgglomerateStats* stats) {
  return agglomerate(AgglomeratedMesh::identity(std::move(mesh)), h_star, model, stats);
}

AgglomeratedMesh agglomerate_to_count(std::shared_ptr<const PolyMesh> mesh, int num_cells,
                                      const BisectionModel& model, AgglomerateStats* stats) {
  if (num_cells < 1 || num_cells > mesh->num_cells())
    throw UsageError("agglomerate_to_count: cell count must be in [1, fine cell count]");
  const Graph graph = connectivity_graph(*mesh);
  if (!is_connected(graph)) throw DataError("agglomerate: mesh connectivity graph is disconnected");
  const FeatureMatrix features = extract_features(*mesh);

  AgglomerateStats local;
  std::vector<int> assignment(static_cast<std::size_t>(mesh->num_cells()), -1);
  int next_id = 0;
  std::function<void(std::vector<int>, int, int)> recurse = [&](std::vector<int> group, int k, int depth) {
    local.max_depth = std::max(local.max_depth, depth);
    if (k == 1 || group.size() == 1) {
      for (int c : group) assignment[c] = next_id;
      ++next_id;
      return;
    }
    const Subgraph sub = induced_subgraph(graph, group);
    FeatureMatrix x(static_cast<Eigen::Index>(group.size()), 3);
    for (std::size_t i = 0; i < group.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = features.row(group[i]);
    const Partition p = bisect_counted(sub.graph, x, model, &local);

    std::array<std::vector<int>, 2> sides;
    for (std::size_t i = 0; i < group.size(); ++i) sides[p.labels[i]].push_back(group[i]);
    const double share = static_cast<double>(sides[0].size()) / static_cast<double>(group.size());
    const int k0 = std::clamp(static_cast<int>(std::lround(k * share)), 1, k - 1);
    const int k1 = k - k0;
    recurse(std::move(sides[0]), std::min<int>(k0, static_cast<int>(sides[0].size())), depth + 1);
    recurse(std::move(sides[1]), std::min<int>(k1, static_cast<int>(sides[1].size())), depth + 1);
  };
  std::vector<int> all(assignment.size());
  std::iota(all.begin(), all.end(), 0);
  recurse(std::move(all), num_cells, 0);
  if (stats) *stats = local;
  return AgglomeratedMesh(std::move(mesh), std::move(assignment));
}

Hierarchy build_hierarchy(std::shared_ptr<const PolyMesh> mesh, std::span<const double> factors,
                          const BisectionModel& model) {
  if (factors.empty()) throw UsageError("build_hierarchy: no factors");
  for (std::size_t k = 0; k < factors.size(); ++k)
    if (!(factors[k] > 0) || (k > 0 && !(factors[k] > factors[k - 1])))
      throw UsageError("build_hierarchy: factors must be positive and strictly increasing");
  const double h0 = mesh_size(*mesh);
  Hierarchy h;
  AgglomeratedMesh current = AgglomeratedMesh::identity(std::move(mesh));
  for (double f : factors) {
    current = agglomerate(current, f * h0, model);
    h.levels.push_back(current);
    h.target_sizes.push_back(f * h0);
  }
  return h;
}

bool is_nested(const AgglomeratedMesh& fine, const AgglomeratedMesh& coarse) {
  if (fine.assignment().size() != coarse.assignment().size()) return false;
  for (const auto& m : fine.members())
    for (int c : m)
      if (coarse.assignment()[c] != coarse.assignment()[m.front()]) return false;
  return true;
}

}  // namespace polyagg
