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

// Polygonal meshes: data model, element geometry, connectivity graph,
// synthetic generators for the unit square and a line-oriented text format.

#include "polyagg/geometry.hpp"
#include "polyagg/graph.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace polyagg {

/// Vertices plus counter-clockwise vertex-index loops. Immutable once built;
/// the constructor validates every loop (>= 3 distinct in-range indices,
/// positive shoelace area) and throws DataError otherwise.
///
/// Adjacency is detected by shared vertex-index pairs, so meshes with hanging
/// nodes (an edge split on one side only) are not recognised as adjacent there.
class PolyMesh {
public:
  PolyMesh() = default;
  PolyMesh(Points2d vertices, std::vector<std::vector<int>> cells);

  const Points2d& vertices() const { return vertices_; }
  const std::vector<std::vector<int>>& cells() const { return cells_; }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_vertices() const { return static_cast<int>(vertices_.rows()); }

  /// Coordinates of cell i's loop, one row per vertex.
  Points2d cell_points(int i) const;

  Eigen::AlignedBox2d bbox() const;

private:
  Points2d vertices_;
  std::vector<std::vector<int>> cells_;
};

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

double element_area(const PolyMesh& mesh, int i);
Point2d element_barycenter(const PolyMesh& mesh, int i);
double element_diameter(const PolyMesh& mesh, int i);
/// h = max element diameter.
double mesh_size(const PolyMesh& mesh);

/// Node per cell, edge per pair of cells sharing a vertex-index pair.
Graph connectivity_graph(const PolyMesh& mesh);

/// Like connectivity_graph, but also the shared-edge length of every
/// adjacency, aligned with Graph::targets().
struct WeightedAdjacency {
  Graph graph;
  std::vector<double> shared_length;
};
WeightedAdjacency connectivity_with_lengths(const PolyMesh& mesh);

/// Rows [area, barycenter_x, barycenter_y], unnormalized.
FeatureMatrix extract_features(const PolyMesh& mesh);

enum class MeshKind { Squares, Triangles, RandomTriangles, Voronoi };

std::string to_string(MeshKind kind);
MeshKind parse_mesh_kind(const std::string& name);

/// Meshes of the unit square. squares: n x n; triangles: n x n squares cut
/// along one diagonal; random-triangles: triangles with interior vertices
/// moved by up to 0.25/n per coordinate; voronoi: n random seeds, cells
/// clipped to the square. Deterministic in (kind, n, seed).
PolyMesh generate_mesh(MeshKind kind, int n, std::uint64_t seed);

PolyMesh read_mesh(std::istream& in);
void write_mesh(std::ostream& out, const PolyMesh& mesh);
PolyMesh load_mesh(const std::filesystem::path& path);
void save_mesh(const PolyMesh& mesh, const std::filesystem::path& path);

/// Copy of the mesh with every vertex multiplied by `factor`.
PolyMesh scaled(const PolyMesh& mesh, double factor);

}  // namespace polyagg
