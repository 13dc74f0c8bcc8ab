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

#include "polyagg/mesh.hpp"

#include "polyagg/error.hpp"
#include "polyagg/io.hpp"
#include "polyagg/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace polyagg {

PolyMesh::PolyMesh(Points2d vertices, std::vector<std::vector<int>> cells)
    : vertices_(std::move(vertices)), cells_(std::move(cells)) {
  if (!vertices_.allFinite()) throw DataError("mesh: non-finite vertex coordinates");
  const int nv = num_vertices();
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto& loop = cells_[c];
    const std::string where = "mesh: cell " + std::to_string(c);
    if (loop.size() < 3) throw DataError(where + " has fewer than 3 vertices");
    for (int v : loop)
      if (v < 0 || v >= nv) throw DataError(where + " references vertex " + std::to_string(v) + " out of range");
    auto sorted = loop;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw DataError(where + " repeats a vertex index");
    if (!(geom::signed_area(cell_points(static_cast<int>(c))) > 0))
      throw DataError(where + " is not counter-clockwise (non-positive signed area)");
  }
}

Points2d PolyMesh::cell_points(int i) const {
  const auto& loop = cells_.at(static_cast<std::size_t>(i));
  Points2d pts(static_cast<Eigen::Index>(loop.size()), 2);
  for (std::size_t k = 0; k < loop.size(); ++k) pts.row(static_cast<Eigen::Index>(k)) = vertices_.row(loop[k]);
  return pts;
}

Eigen::AlignedBox2d PolyMesh::bbox() const {
  Eigen::AlignedBox2d box;
  for (Eigen::Index v = 0; v < vertices_.rows(); ++v) box.extend(vertices_.row(v).transpose());
  return box;
}

namespace {

void check_cell(const PolyMesh& mesh, int i) {
  if (i < 0 || i >= mesh.num_cells())
    throw UsageError("cell index " + std::to_string(i) + " out of range [0," + std::to_string(mesh.num_cells()) + ")");
}

}  // namespace

double element_area(const PolyMesh& mesh, int i) {
  check_cell(mesh, i);
  return geom::signed_area(mesh.cell_points(i));
}

Point2d element_barycenter(const PolyMesh& mesh, int i) {
  check_cell(mesh, i);
  const auto pts = mesh.cell_points(i);
  if (!(geom::signed_area(pts) > 0)) throw NumericalError("barycenter of degenerate cell " + std::to_string(i));
  return geom::centroid(pts);
}

double element_diameter(const PolyMesh& mesh, int i) {
  check_cell(mesh, i);
  return geom::diameter(mesh.cell_points(i));
}

double mesh_size(const PolyMesh& mesh) {
  if (mesh.num_cells() == 0) throw UsageError("mesh_size: empty mesh");
  double h = 0;
  for (int i = 0; i < mesh.num_cells(); ++i) h = std::max(h, element_diameter(mesh, i));
  return h;
}

WeightedAdjacency connectivity_with_lengths(const PolyMesh& mesh) {
  const auto nv = static_cast<std::uint64_t>(mesh.num_vertices());
  std::unordered_map<std::uint64_t, std::vector<int>> owners;
  owners.reserve(static_cast<std::size_t>(mesh.num_cells()) * 4);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& loop = mesh.cells()[c];
    for (std::size_t k = 0; k < loop.size(); ++k) {
      auto a = static_cast<std::uint64_t>(loop[k]);
      auto b = static_cast<std::uint64_t>(loop[(k + 1) % loop.size()]);
      if (a > b) std::swap(a, b);
      owners[a * nv + b].push_back(c);
    }
  }
  std::map<std::pair<int, int>, double> shared;
  for (const auto& [key, cells] : owners) {
    if (cells.size() < 2) continue;
    const auto a = static_cast<Eigen::Index>(key / nv), b = static_cast<Eigen::Index>(key % nv);
    const double len = (mesh.vertices().row(a) - mesh.vertices().row(b)).norm();
    for (std::size_t x = 0; x < cells.size(); ++x)
      for (std::size_t y = x + 1; y < cells.size(); ++y) {
        if (cells[x] == cells[y]) continue;
        shared[std::minmax(cells[x], cells[y])] += len;
      }
  }
  std::vector<std::pair<int, int>> edges;
  edges.reserve(shared.size());
  for (const auto& [e, len] : shared) edges.push_back(e);
  WeightedAdjacency out{Graph(mesh.num_cells(), edges), {}};
  out.shared_length.resize(out.graph.targets().size());
  for (int i = 0; i < out.graph.num_nodes(); ++i) {
    const auto nb = out.graph.neighbors(i);
    for (std::size_t k = 0; k < nb.size(); ++k)
      out.shared_length[static_cast<std::size_t>(out.graph.offsets()[i]) + k] = shared.at(std::minmax(i, nb[k]));
  }
  return out;
}

Graph connectivity_graph(const PolyMesh& mesh) { return connectivity_with_lengths(mesh).graph; }

FeatureMatrix extract_features(const PolyMesh& mesh) {
  FeatureMatrix x(mesh.num_cells(), 3);
  for (int i = 0; i < mesh.num_cells(); ++i) {
    const auto pts = mesh.cell_points(i);
    const double area = geom::signed_area(pts);
    if (!(area > 0)) throw NumericalError("extract_features: degenerate cell " + std::to_string(i));
    x(i, 0) = area;
    x.block<1, 2>(i, 1) = geom::centroid(pts);
  }
  return x;
}

std::string to_string(MeshKind kind) {
  switch (kind) {
    case MeshKind::Squares: return "squares";
    case MeshKind::Triangles: return "triangles";
    case MeshKind::RandomTriangles: return "random-triangles";
    case MeshKind::Voronoi: return "voronoi";
  }
  return "?";
}

MeshKind parse_mesh_kind(const std::string& name) {
  for (auto k : {MeshKind::Squares, MeshKind::Triangles, MeshKind::RandomTriangles, MeshKind::Voronoi})
    if (name == to_string(k)) return k;
  throw UsageError("unknown mesh kind '" + name + "' (squares|triangles|random-triangles|voronoi)");
}

namespace {

PolyMesh structured(int n, bool split, double jitter, Rng* rng) {
  const int side = n + 1;
  Points2d v(side * side, 2);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      double x = static_cast<double>(i) / n, y = static_cast<double>(j) / n;
      if (rng && i > 0 && i < n && j > 0 && j < n) {
        x += uniform(*rng, -jitter, jitter);
        y += uniform(*rng, -jitter, jitter);
      }
      v.row(j * side + i) << x, y;
    }
  auto id = [side](int i, int j) { return j * side + i; };
  std::vector<std::vector<int>> cells;
  cells.reserve(static_cast<std::size_t>(n * n * (split ? 2 : 1)));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (split) {
        cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
        cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
      } else {
        cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
      }
    }
  return PolyMesh(std::move(v), std::move(cells));
}

// Merges points closer than `tol` into one vertex id.
class VertexWelder {
public:
  explicit VertexWelder(double tol) : tol_(tol) {}

  int add(const Point2d& p) {
    const auto kx = static_cast<std::int64_t>(std::floor(p(0) / tol_));
    const auto ky = static_cast<std::int64_t>(std::floor(p(1) / tol_));
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = buckets_.find(key(kx + dx, ky + dy));
        if (it == buckets_.end()) continue;
        for (int id : it->second)
          if ((points_[static_cast<std::size_t>(id)] - p).norm() <= tol_) return id;
      }
    const int id = static_cast<int>(points_.size());
    points_.push_back(p);
    buckets_[key(kx, ky)].push_back(id);
    return id;
  }

  Points2d points() const {
    Points2d out(static_cast<Eigen::Index>(points_.size()), 2);
    for (std::size_t k = 0; k < points_.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = points_[k];
    return out;
  }

private:
  static std::uint64_t key(std::int64_t x, std::int64_t y) {
    return static_cast<std::uint64_t>(x) * 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(y);
  }

  double tol_;
  std::vector<Point2d> points_;
  std::unordered_map<std::uint64_t, std::vector<int>> buckets_;
};

PolyMesh voronoi_attempt(const Points2d& seeds) {
  const int n = static_cast<int>(seeds.rows());
  const int g = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))));
  const double cs = 1.0 / g;
  std::vector<std::vector<int>> grid(static_cast<std::size_t>(g * g));
  auto bucket = [&](double t) { return std::clamp(static_cast<int>(t * g), 0, g - 1); };
  for (int s = 0; s < n; ++s) grid[bucket(seeds(s, 1)) * g + bucket(seeds(s, 0))].push_back(s);

  Points2d square(4, 2);
  square << 0, 0, 1, 0, 1, 1, 0, 1;

  VertexWelder welder(1e-9);
  std::vector<std::vector<int>> cells(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const Point2d p = seeds.row(s);
    Points2d poly = square;
    const int bx = bucket(p(0)), by = bucket(p(1));
    for (int ring = 0; ring <= g; ++ring) {
      for (int yy = by - ring; yy <= by + ring; ++yy)
        for (int xx = bx - ring; xx <= bx + ring; ++xx) {
          if (xx < 0 || yy < 0 || xx >= g || yy >= g) continue;
          if (std::max(std::abs(xx - bx), std::abs(yy - by)) != ring) continue;
          for (int t : grid[yy * g + xx]) {
            if (t == s) continue;
            const Point2d q = seeds.row(t);
            const Point2d normal = q - p;
            poly = geom::clip_halfplane<double>(poly, normal, 0.5 * (q.squaredNorm() - p.squaredNorm()));
          }
        }
      if (poly.rows() < 3) throw NumericalError("voronoi: empty cell");
      // Seeds beyond this ring are at least ring*cs away; they cannot cut a
      // cell whose farthest vertex is closer than half that distance.
      double reach = 0;
      for (Eigen::Index k = 0; k < poly.rows(); ++k) reach = std::max(reach, (poly.row(k) - p).norm());
      if (ring * cs >= 2.0 * reach) break;
    }
    auto& loop = cells[static_cast<std::size_t>(s)];
    for (Eigen::Index k = 0; k < poly.rows(); ++k) {
      const int id = welder.add(poly.row(k));
      if (loop.empty() || loop.back() != id) loop.push_back(id);
    }
    while (loop.size() > 1 && loop.front() == loop.back()) loop.pop_back();
  }
  return PolyMesh(welder.points(), std::move(cells));
}

PolyMesh voronoi(int n, std::uint64_t seed) {
  constexpr int kMaxAttempts = 16;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng = make_rng(seed + static_cast<std::uint64_t>(attempt), "voronoi");
    Points2d seeds(n, 2);
    for (int s = 0; s < n; ++s) seeds.row(s) << uniform01(rng), uniform01(rng);
    try {
      PolyMesh mesh = voronoi_attempt(seeds);
      double total = 0;
      for (int c = 0; c < mesh.num_cells(); ++c) total += element_area(mesh, c);
      if (mesh.num_cells() == n && std::abs(total - 1.0) <= 1e-10 && is_connected(connectivity_graph(mesh)))
        return mesh;
    } catch (const Error&) {
      // degenerate seed set; reseed
    }
  }
  throw NumericalError("voronoi: no valid diagram after " + std::to_string(kMaxAttempts) + " seedings");
}

}  // namespace

PolyMesh generate_mesh(MeshKind kind, int n, std::uint64_t seed) {
  switch (kind) {
    case MeshKind::Squares:
      if (n < 2) throw UsageError("generate_mesh: n must be >= 2");
      return structured(n, false, 0.0, nullptr);
    case MeshKind::Triangles:
      if (n < 2) throw UsageError("generate_mesh: n must be >= 2");
      return structured(n, true, 0.0, nullptr);
    case MeshKind::RandomTriangles: {
      if (n < 2) throw UsageError("generate_mesh: n must be >= 2");
      Rng rng = make_rng(seed, "random-triangles");
      return structured(n, true, 0.25 / n, &rng);
    }
    case MeshKind::Voronoi:
      if (n < 4) throw UsageError("generate_mesh: voronoi needs at least 4 seeds");
      return voronoi(n, seed);
  }
  throw UsageError("generate_mesh: unknown kind");
}

namespace {

constexpr const char* kMeshMagic = "polyagg-mesh v1";

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw DataError("mesh line " + std::to_string(line) + ": " + msg);
}

}  // namespace

PolyMesh read_mesh(std::istream& in) {
  std::string text;
  int lineno = 0;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, text)) parse_fail(lineno + 1, std::string("unexpected end of file, expected ") + what);
    ++lineno;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    return std::istringstream(text);
  };
  auto expect_end = [&](std::istringstream& ss) {
    std::string extra;
    if (ss >> extra) parse_fail(lineno, "trailing token '" + extra + "'");
  };

  next_line("header");
  if (text != kMeshMagic) parse_fail(lineno, std::string("bad header, expected '") + kMeshMagic + "'");

  auto read_count = [&](char tag) {
    auto ss = next_line(tag == 'V' ? "vertex count" : "cell count");
    std::string t;
    long long count = -1;
    if (!(ss >> t) || t != std::string(1, tag) || !(ss >> count) || count < 0)
      parse_fail(lineno, std::string("expected '") + tag + " <count>'");
    expect_end(ss);
    return static_cast<int>(count);
  };

  const int nv = read_count('V');
  Points2d v(nv, 2);
  for (int k = 0; k < nv; ++k) {
    auto ss = next_line("vertex");
    double x, y;
    if (!(ss >> x >> y)) parse_fail(lineno, "expected 'x y'");
    expect_end(ss);
    v.row(k) << x, y;
  }
  const int nc = read_count('C');
  std::vector<std::vector<int>> cells(static_cast<std::size_t>(nc));
  for (int c = 0; c < nc; ++c) {
    auto ss = next_line("cell");
    int k;
    if (!(ss >> k) || k < 3) parse_fail(lineno, "expected vertex count >= 3");
    auto& loop = cells[static_cast<std::size_t>(c)];
    loop.resize(static_cast<std::size_t>(k));
    for (auto& idx : loop)
      if (!(ss >> idx)) parse_fail(lineno, "expected " + std::to_string(k) + " vertex indices");
    expect_end(ss);
    for (int idx : loop)
      if (idx < 0 || idx >= nv) parse_fail(lineno, "vertex index " + std::to_string(idx) + " out of range");
  }
  try {
    return PolyMesh(std::move(v), std::move(cells));
  } catch (const DataError& e) {
    throw DataError(std::string("invalid mesh: ") + e.what());
  }
}

void write_mesh(std::ostream& out, const PolyMesh& mesh) {
  char buf[64];
  out << kMeshMagic << '\n' << "V " << mesh.num_vertices() << '\n';
  for (int k = 0; k < mesh.num_vertices(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g", mesh.vertices()(k, 0), mesh.vertices()(k, 1));
    out << buf << '\n';
  }
  out << "C " << mesh.num_cells() << '\n';
  for (const auto& loop : mesh.cells()) {
    out << loop.size();
    for (int idx : loop) out << ' ' << idx;
    out << '\n';
  }
}

PolyMesh load_mesh(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  try {
    return read_mesh(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_mesh(const PolyMesh& mesh, const std::filesystem::path& path) {
  std::ostringstream out;
  write_mesh(out, mesh);
  write_file_atomic(path, out.str());
}

PolyMesh scaled(const PolyMesh& mesh, double factor) {
  return PolyMesh(mesh.vertices() * factor, mesh.cells());
}

}  // namespace polyagg
