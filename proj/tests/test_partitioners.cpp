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

#include "doctest.h"
#include "support.hpp"

#include "polyagg/error.hpp"
#include "polyagg/log.hpp"
#include "polyagg/partitioners.hpp"

#include <numeric>

using namespace polyagg;
using namespace polyagg::testing;

namespace {

Points2d grid_points(int n) {
  Points2d p(n * n, 2);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) p.row(j * n + i) << i + 0.5, j + 0.5;
  return p;
}

double sse(const Points2d& pts, const Partition& p) {
  double total = 0;
  for (int k = 0; k < 2; ++k) {
    Eigen::RowVector2d c = Eigen::RowVector2d::Zero();
    int count = 0;
    for (int i = 0; i < pts.rows(); ++i)
      if (p.labels[i] == k) c += pts.row(i), ++count;
    c /= count;
    for (int i = 0; i < pts.rows(); ++i)
      if (p.labels[i] == k) total += (pts.row(i) - c).squaredNorm();
  }
  return total;
}

}  // namespace

TEST_CASE("kmeans separates clusters") {
  Points2d pts(6, 2);
  pts << 0, 0, 0.01, 0, 0, 0.01, 10, 10, 10.01, 10, 10, 10.01;
  const auto r = kmeans_bisect(pts, {});
  CHECK(r.partition.labels[0] == r.partition.labels[1]);
  CHECK(r.partition.labels[0] == r.partition.labels[2]);
  CHECK(r.partition.labels[3] == r.partition.labels[4]);
  CHECK(r.partition.labels[0] != r.partition.labels[3]);
  CHECK_FALSE(r.degenerate);

  Points2d strip(2, 2);
  strip << 0.5, 0.5, 1.5, 0.5;
  const auto s = kmeans_bisect(strip, {});
  CHECK(s.partition.count(0) == 1);
  CHECK(s.partition.count(1) == 1);
  CHECK(s.inertia == doctest::Approx(0.0));
}

TEST_CASE("kmeans on a 4x4 grid splits along an axis") {
  const Points2d pts = grid_points(4);
  // Oracle: split at x = 2.
  Partition axis{std::vector<int>(16), 2};
  for (int i = 0; i < 16; ++i) axis.labels[i] = pts(i, 0) > 2 ? 1 : 0;
  const double axis_sse = sse(pts, axis);
  CHECK(axis_sse == doctest::Approx(24.0));  // per half: 8 * 0.25 (x) + 2 * 5 (y)
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    KMeansConfig cfg;
    cfg.seed = seed;
    const auto r = kmeans_bisect(pts, cfg);
    CHECK(r.partition.count(0) == 8);
    CHECK(r.inertia == doctest::Approx(axis_sse));
    CHECK(sse(pts, r.partition) == doctest::Approx(axis_sse));
    // Disjoint bounding boxes along one axis.
    bool separated = false;
    for (int axis_id = 0; axis_id < 2; ++axis_id) {
      double max0 = -1e9, min1 = 1e9, max1 = -1e9, min0 = 1e9;
      for (int i = 0; i < 16; ++i) {
        const double v = pts(i, axis_id);
        if (r.partition.labels[i] == 0) max0 = std::max(max0, v), min0 = std::min(min0, v);
        else max1 = std::max(max1, v), min1 = std::min(min1, v);
      }
      separated = separated || max0 < min1 || max1 < min0;
    }
    CHECK(separated);
  }
}

TEST_CASE("kmeans degenerate input") {
  set_warnings_enabled(false);
  const Points2d same = Points2d::Constant(5, 2, 0.3);
  const auto r = kmeans_bisect(same, {});
  set_warnings_enabled(true);
  CHECK(r.degenerate);
  CHECK(std::abs(r.partition.count(0) - r.partition.count(1)) <= 1);
  CHECK_THROWS_AS(kmeans_bisect(Points2d::Zero(1, 2), {}), UsageError);
  KMeansConfig bad;
  bad.restarts = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = {};
  bad.tol = -1;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("kmeans is deterministic given the seed") {
  Rng rng = make_rng(3, "pts");
  Points2d pts(40, 2);
  for (int i = 0; i < 40; ++i) pts.row(i) << uniform01(rng), uniform01(rng);
  KMeansConfig cfg;
  cfg.restarts = 1;
  CHECK(kmeans_bisect(pts, cfg).partition == kmeans_bisect(pts, cfg).partition);
}

TEST_CASE("multilevel bisection small cases") {
  const MultilevelConfig cfg;
  const Partition p2 = multilevel_bisect(path_graph(2), cfg);
  CHECK(cut(path_graph(2), p2) == 1);
  CHECK(p2.count(0) == 1);

  const Graph k4 = bridged_cliques(4);
  CHECK(exhaustive_balanced_cut(k4, 0.4) == 1);
  const Partition pk = multilevel_bisect(k4, cfg);
  CHECK(cut(k4, pk) == 1);

  const Graph c8 = cycle_graph(8);
  CHECK(exhaustive_balanced_cut(c8, 0.5) == 2);
  const Partition pc = multilevel_bisect(c8, cfg);
  CHECK(cut(c8, pc) == 2);
  CHECK(pc.count(0) == 4);

  CHECK_THROWS_AS(multilevel_bisect(Graph(4, {{0, 1}, {2, 3}}), cfg), DataError);
  MultilevelConfig bad;
  bad.coarsen_target = 1;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("multilevel cut is within 2x of the balanced optimum") {
  Rng rng = make_rng(11, "graphs");
  for (int t = 0; t < 60; ++t) {
    const int n = static_cast<int>(uniform_int(rng, 4, 10));
    const Graph g = random_graph(rng, n, 0.3, true);
    MultilevelConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(t);
    const Partition p = multilevel_bisect(g, cfg);
    CHECK(is_valid_bisection(g, p));
    CHECK(cut(g, p) <= 2 * exhaustive_balanced_cut(g, 0.4));
  }
}

TEST_CASE("multilevel balance on meshes") {
  for (MeshKind kind : {MeshKind::Squares, MeshKind::Triangles, MeshKind::RandomTriangles, MeshKind::Voronoi}) {
    const PolyMesh m = generate_mesh(kind, kind == MeshKind::Voronoi ? 300 : 14, 2);
    const Graph g = connectivity_graph(m);
    const Partition p = multilevel_bisect(g, {});
    CHECK(is_valid_bisection(g, p));
    const double share = static_cast<double>(p.count(0)) / g.num_nodes();
    CHECK(share >= 0.3);
    CHECK(share <= 0.7);
  }
}

TEST_CASE("gnn bisect") {
  Architecture arch;
  GnnModel model = GnnModel::initialized(arch, 3);
  for (std::size_t l = 0; l < arch.dense_widths.size(); ++l) {
    model.params.tensor(model.params.dense_weight_slot(l)).setZero();
    model.params.tensor(model.params.dense_bias_slot(l)).setZero();
  }
  const PolyMesh m = generate_mesh(MeshKind::Voronoi, 30, 4);
  const ProbPartition y = gnn_bisect(model, connectivity_graph(m), extract_features(m));
  CHECK(y.rows() == 30);
  CHECK((y.matrix().array() - 0.5).abs().maxCoeff() < 1e-15);

  const GnnModel trained_like = GnnModel::initialized(arch, 5);
  const ProbPartition z = gnn_bisect(trained_like, connectivity_graph(m), extract_features(m));
  CHECK((z.matrix().rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
  CHECK_THROWS_AS(gnn_bisect(trained_like, connectivity_graph(m), extract_features(m).topRows(5)), UsageError);
}

TEST_CASE("gnn bisect is permutation equivariant") {
  const GnnModel model = GnnModel::initialized(Architecture{}, 9);
  Rng rng = make_rng(12, "perm");
  const int n = 10;
  const Graph g = random_graph(rng, n, 0.3, true);
  FeatureMatrix x(n, 3);
  for (int i = 0; i < n; ++i) x.row(i) << uniform(rng, 0.1, 1), uniform01(rng), uniform01(rng);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::pair<int, int>> edges;
  for (auto [i, j] : g.edge_list()) edges.emplace_back(perm[i], perm[j]);
  FeatureMatrix px(n, 3);
  for (int i = 0; i < n; ++i) px.row(perm[i]) = x.row(i);
  const Eigen::MatrixXd y = gnn_bisect(model, g, x).matrix();
  const Eigen::MatrixXd py = gnn_bisect(model, Graph(n, edges), px).matrix();
  for (int i = 0; i < n; ++i) CHECK((py.row(perm[i]) - y.row(i)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("every backend yields valid bisections on generator meshes") {
  auto model = std::make_shared<const GnnModel>(GnnModel::initialized(Architecture{}, 1));
  const KMeansBisector km;
  const MultilevelBisector ml;
  const GnnBisector gnn(model);
  for (MeshKind kind : {MeshKind::Squares, MeshKind::Triangles, MeshKind::RandomTriangles, MeshKind::Voronoi})
    for (int n : {2, 3, 6}) {
      const PolyMesh m = generate_mesh(kind, kind == MeshKind::Voronoi ? 4 * n : n, static_cast<std::uint64_t>(n));
      const Graph g = connectivity_graph(m);
      const FeatureMatrix x = extract_features(m);
      for (const BisectionModel* b : {static_cast<const BisectionModel*>(&km), static_cast<const BisectionModel*>(&ml),
                                      static_cast<const BisectionModel*>(&gnn)}) {
        const ProbPartition y = b->bisect(g, x);
        CHECK(y.rows() == g.num_nodes());
        CHECK((y.matrix().rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
        const Partition h = y.harden();
        if (h.count(0) == 0 || h.count(1) == 0) {
          CHECK(b->name() == "gnn");  // an untrained model may put everything in one class
          continue;
        }
        CHECK(is_valid_bisection(g, fix_partition(g, h)));
      }
    }
}

TEST_CASE("bisector factory") {
  CHECK(make_bisector("kmeans", 1)->name() == "kmeans");
  CHECK(make_bisector("multilevel", 1)->name() == "multilevel");
  CHECK_THROWS_AS(make_bisector("gnn", 1), UsageError);
  CHECK(make_bisector("gnn", 1, std::make_shared<const GnnModel>(GnnModel::zeros(Architecture{})))->name() == "gnn");
  CHECK_THROWS_AS(make_bisector("metis", 1), UsageError);
}
