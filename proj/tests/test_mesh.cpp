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
#include "polyagg/geometry.hpp"
#include "polyagg/io.hpp"
#include "polyagg/mesh.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

using namespace polyagg;

namespace {

const MeshKind kAllKinds[] = {MeshKind::Squares, MeshKind::Triangles, MeshKind::RandomTriangles, MeshKind::Voronoi};

/// 2x1 strip of unit squares.
PolyMesh two_squares() {
  Points2d w(6, 2);
  w << 0, 0, 1, 0, 2, 0, 2, 1, 1, 1, 0, 1;
  return PolyMesh(w, {{0, 1, 4, 5}, {1, 2, 3, 4}});
}

PolyMesh single(const Points2d& pts) {
  std::vector<int> loop(static_cast<std::size_t>(pts.rows()));
  for (int i = 0; i < pts.rows(); ++i) loop[i] = i;
  return PolyMesh(pts, {loop});
}

Points2d regular_polygon(int k, double r) {
  Points2d p(k, 2);
  for (int i = 0; i < k; ++i) p.row(i) << r * std::cos(2 * std::numbers::pi * i / k), r * std::sin(2 * std::numbers::pi * i / k);
  return p;
}

}  // namespace

TEST_CASE("substreams are reproducible and distinct") {
  Rng a = make_rng(7, "init"), b = make_rng(7, "init"), c = make_rng(7, "shuffle"), d = make_rng(8, "init");
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
  Rng r = make_rng(1, "u");
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform01(r);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const auto k = uniform_int(r, -3, 3);
    CHECK(k >= -3);
    CHECK(k <= 3);
  }
}

TEST_CASE("geometry primitives") {
  Points2d sq(4, 2);
  sq << 0, 0, 1, 0, 1, 1, 0, 1;
  CHECK(geom::signed_area(sq) == doctest::Approx(1.0));
  CHECK(geom::signed_area(Points2d(sq.colwise().reverse())) == doctest::Approx(-1.0));
  CHECK(geom::centroid(sq).isApprox(Point2d(0.5, 0.5)));
  CHECK(geom::diameter(sq) == doctest::Approx(std::sqrt(2.0)));
  const std::vector<Points2d> loops{sq};
  CHECK(geom::inside_loops<double>(Point2d(0.5, 0.5), loops));
  CHECK_FALSE(geom::inside_loops<double>(Point2d(1.5, 0.5), loops));
  CHECK(geom::boundary_distance<double>(Point2d(0.5, 0.25), loops) == doctest::Approx(0.25));
  CHECK(geom::segment_distance<double>(Point2d(2, 1), Point2d(0, 0), Point2d(1, 0)) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("element area") {
  Points2d sq(4, 2);
  sq << 0, 0, 1, 0, 1, 1, 0, 1;
  CHECK(element_area(single(sq), 0) == doctest::Approx(1.0));
  Points2d tri(3, 2);
  tri << 0, 0, 3, 0, 0, 4;
  CHECK(element_area(single(tri), 0) == doctest::Approx(6.0));
  CHECK(element_area(single(regular_polygon(6, 1.0)), 0) == doctest::Approx(3 * std::sqrt(3.0) / 2));
  CHECK_THROWS_AS(element_area(single(sq), 1), UsageError);
}

TEST_CASE("element barycenter and diameter") {
  Points2d sq(4, 2);
  sq << 0, 0, 1, 0, 1, 1, 0, 1;
  CHECK(element_barycenter(single(sq), 0).isApprox(Point2d(0.5, 0.5)));
  Points2d tri(3, 2);
  tri << 0, 0, 3, 0, 0, 3;
  CHECK(element_barycenter(single(tri), 0).isApprox(Point2d(1, 1)));
  // L-shape: area-weighted centroid differs from the vertex average.
  Points2d ell(6, 2);
  ell << 0, 0, 2, 0, 2, 1, 1, 1, 1, 2, 0, 2;
  CHECK(element_barycenter(single(ell), 0).isApprox(Point2d(5.0 / 6.0, 5.0 / 6.0)));

  CHECK(element_diameter(single(sq), 0) == doctest::Approx(std::sqrt(2.0)));
  Points2d thin(4, 2);
  thin << 0, 0, 1, 0, 1, 0.01, 0, 0.01;
  CHECK(element_diameter(single(thin), 0) == doctest::Approx(std::sqrt(1.0001)));
  CHECK(element_diameter(single(regular_polygon(6, 1.0)), 0) == doctest::Approx(2.0));
}

TEST_CASE("mesh size") {
  CHECK(mesh_size(generate_mesh(MeshKind::Squares, 4, 1)) == doctest::Approx(std::sqrt(2.0) / 4));
  CHECK(mesh_size(scaled(generate_mesh(MeshKind::Squares, 4, 1), 4.0)) == doctest::Approx(std::sqrt(2.0)));
  Points2d tri(3, 2);
  tri << 0, 0, 3, 0, 0, 4;
  CHECK(mesh_size(single(tri)) == doctest::Approx(5.0));
  Points2d v(8, 2);
  v << 0, 0, 1, 0, 1, 1, 0, 1, 3, 0, 5, 0, 5, 2, 3, 2;
  const PolyMesh mixed(v, {{0, 1, 2, 3}, {4, 5, 6, 7}});
  CHECK(mesh_size(mixed) == doctest::Approx(2 * std::sqrt(2.0)));
}

TEST_CASE("connectivity graph") {
  CHECK(connectivity_graph(two_squares()).num_edges() == 1);
  CHECK(connectivity_graph(generate_mesh(MeshKind::Squares, 3, 1)).num_edges() == 12);
  // Corner contact only: squares (0,0)-(1,1) and (1,1)-(2,2) share vertex 2.
  Points2d v(7, 2);
  v << 0, 0, 1, 0, 1, 1, 0, 1, 2, 1, 2, 2, 1, 2;
  const PolyMesh corner(v, {{0, 1, 2, 3}, {2, 4, 5, 6}});
  CHECK(connectivity_graph(corner).num_edges() == 0);

  const auto wa = connectivity_with_lengths(generate_mesh(MeshKind::Squares, 2, 1));
  REQUIRE(wa.shared_length.size() == wa.graph.targets().size());
  for (double l : wa.shared_length) CHECK(l == doctest::Approx(0.5));
}

TEST_CASE("features") {
  Points2d sq(4, 2);
  sq << 0, 0, 1, 0, 1, 1, 0, 1;
  CHECK(extract_features(single(sq)).isApprox(Eigen::RowVector3d(1, 0.5, 0.5)));
  FeatureMatrix strip(2, 3);
  strip << 1, 0.5, 0.5, 1, 1.5, 0.5;
  CHECK(extract_features(two_squares()).isApprox(strip));
  for (MeshKind kind : kAllKinds) {
    const PolyMesh m = generate_mesh(kind, kind == MeshKind::Voronoi ? 40 : 5, 3);
    CHECK(extract_features(m).col(0).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("generators") {
  const PolyMesh sq = generate_mesh(MeshKind::Squares, 4, 1);
  CHECK(sq.num_cells() == 16);
  for (int i = 0; i < 16; ++i) CHECK(element_area(sq, i) == doctest::Approx(1.0 / 16));
  const PolyMesh tr = generate_mesh(MeshKind::Triangles, 4, 1);
  CHECK(tr.num_cells() == 32);
  for (int i = 0; i < 32; ++i) CHECK(element_area(tr, i) == doctest::Approx(1.0 / 32));
  const PolyMesh vo = generate_mesh(MeshKind::Voronoi, 50, 11);
  CHECK(vo.num_cells() == 50);
  CHECK(std::abs(extract_features(vo).col(0).sum() - 1.0) < 1e-10);

  CHECK_THROWS_AS(generate_mesh(MeshKind::Squares, 1, 1), UsageError);
  CHECK_THROWS_AS(generate_mesh(MeshKind::Voronoi, 3, 1), UsageError);
  CHECK(parse_mesh_kind("random-triangles") == MeshKind::RandomTriangles);
  CHECK(to_string(MeshKind::Voronoi) == "voronoi");
  CHECK_THROWS_AS(parse_mesh_kind("hexagons"), UsageError);
}

TEST_CASE("generator invariants") {
  for (MeshKind kind : kAllKinds)
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const int n = kind == MeshKind::Voronoi ? static_cast<int>(4 + 37 * seed) : static_cast<int>(2 + 3 * seed);
      const PolyMesh m = generate_mesh(kind, n, seed);
      const Graph g = connectivity_graph(m);
      CHECK(is_connected(g));
      double area = 0;
      for (int i = 0; i < m.num_cells(); ++i) {
        const double a = element_area(m, i);
        CHECK(a > 0);
        CHECK(element_diameter(m, i) >= 2 * std::sqrt(a / std::numbers::pi) * (1 - 1e-12));
        area += a;
      }
      CHECK(std::abs(area - 1.0) < 1e-10);
      const Eigen::MatrixXd adj = testing::dense_adjacency(g);
      CHECK(adj.isApprox(adj.transpose()));
      CHECK(adj.diagonal().isZero());
    }
}

TEST_CASE("generators are deterministic") {
  for (MeshKind kind : kAllKinds) {
    std::ostringstream a, b, c;
    write_mesh(a, generate_mesh(kind, 30, 5));
    write_mesh(b, generate_mesh(kind, 30, 5));
    write_mesh(c, generate_mesh(kind, 30, 6));
    CHECK(a.str() == b.str());
    if (kind == MeshKind::RandomTriangles || kind == MeshKind::Voronoi) CHECK(a.str() != c.str());
  }
}

TEST_CASE("mesh file round trip") {
  for (MeshKind kind : kAllKinds) {
    const PolyMesh m = generate_mesh(kind, kind == MeshKind::Voronoi ? 60 : 6, 9);
    std::ostringstream out;
    write_mesh(out, m);
    std::istringstream in(out.str());
    const PolyMesh back = read_mesh(in);
    CHECK(back.vertices() == m.vertices());
    CHECK(back.cells() == m.cells());
    std::ostringstream again;
    write_mesh(again, back);
    CHECK(again.str() == out.str());
  }

  const auto dir = std::filesystem::temp_directory_path() / "polyagg_test_mesh";
  std::filesystem::create_directories(dir);
  const PolyMesh m = generate_mesh(MeshKind::Voronoi, 20, 2);
  save_mesh(m, dir / "m.txt");
  CHECK(load_mesh(dir / "m.txt").cells() == m.cells());
  CHECK_THROWS_AS(load_mesh(dir / "missing.txt"), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("mesh file errors") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_mesh(in);
  };
  const std::string good = "polyagg-mesh v1\nV 3\n0 0\n1 0\n0 1\nC 1\n3 0 1 2\n";
  CHECK(parse(good).num_cells() == 1);
  CHECK_THROWS_AS(parse("polyagg-mesh v2\nV 0\nC 0\n"), DataError);
  CHECK_THROWS_WITH_AS(parse("polyagg-mesh v1\nV 3\n0 0\n1 0\n0 1\nC 1\n3 0 2 1\n"),
                       doctest::Contains("counter-clockwise"), DataError);
  CHECK_THROWS_WITH_AS(parse("polyagg-mesh v1\nV 3\n0 0\n1 0\n0 1\nC 1\n3 0 1 7\n"), doctest::Contains("out of range"),
                       DataError);
  CHECK_THROWS_WITH_AS(parse("polyagg-mesh v1\nV 3\n0 0\n1 x\n0 1\nC 1\n3 0 1 2\n"), doctest::Contains("line 4"),
                       DataError);
  CHECK_THROWS_AS(parse("polyagg-mesh v1\nV 3\n0 0\n1 0\n"), DataError);
}

TEST_CASE("atomic file writes") {
  const auto dir = std::filesystem::temp_directory_path() / "polyagg_test_io";
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "a.txt", "hello");
  write_file_atomic(dir / "a.txt", "world");
  CHECK(read_file(dir / "a.txt") == "world");
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  CHECK(files == 1);
  CHECK_THROWS_AS(read_file(dir / "nope.txt"), DataError);
  std::filesystem::remove_all(dir);
}
