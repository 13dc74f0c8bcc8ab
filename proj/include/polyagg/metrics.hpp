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

// Element quality metrics (uniformity factor, circle ratio), summary tables
// across meshes and methods, and the bisection runtime harness.

#include "polyagg/agglomerate.hpp"
#include "polyagg/mesh.hpp"
#include "polyagg/partitioners.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace polyagg {

/// diam(P) / h for every element, h the largest element diameter.
std::vector<double> uniformity_factor(const PolyMesh& mesh);
std::vector<double> uniformity_factor(const AgglomeratedMesh& agg);

/// Radius of the largest disc inside the region bounded by `loops` (even-odd
/// rule, so holes are respected). Grid sampling of the distance to the
/// boundary over the bounding box, then three rounds of shrinking local
/// search around the best samples. NumericalError if no interior sample is found.
double inscribed_radius(const std::vector<Points2d>& loops);

/// Inscribed radius over half the diameter.
double circle_ratio(const std::vector<Points2d>& loops);
double circle_ratio(const PolyMesh& mesh, int cell);
std::vector<double> circle_ratios(const PolyMesh& mesh);
std::vector<double> circle_ratios(const AgglomeratedMesh& agg);

struct Summary {
  double mean = 0, min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};
/// Quartiles by linear interpolation between order statistics.
Summary summarize(std::vector<double> values);

struct QualityReport {
  std::vector<double> uf, cr;
  Summary uf_summary, cr_summary;
};

QualityReport quality_report(const PolyMesh& mesh);
QualityReport quality_report(const AgglomeratedMesh& agg);

struct QualityCell {
  std::string mesh_kind;
  std::string method;
  std::optional<QualityReport> report;  ///< empty when the method failed
  std::string error;
  int coarse_cells = 0;
};

struct NamedMesh {
  std::string kind;
  std::shared_ptr<const PolyMesh> mesh;
};

enum class Protocol {
  TargetSize,   ///< Algorithm 1 with h* = factor * h0
  TargetCount,  ///< agglomerate_to_count with N0 / factor^2 cells
};

struct QualityMethod {
  const BisectionModel* model = nullptr;
  Protocol protocol = Protocol::TargetSize;
};

std::vector<QualityCell> quality_table(const std::vector<NamedMesh>& meshes, const std::vector<QualityMethod>& methods,
                                       double factor);

struct RelativeQuality {
  std::string mesh_kind, method, baseline;
  double uf_ratio = 0, cr_ratio = 0;
};
/// Mean UF / CR of each non-baseline method over the baseline, per mesh kind.
std::vector<RelativeQuality> relative_quality(const std::vector<QualityCell>& table, const std::string& baseline);

/// mesh_kind,method,uf_mean,cr_mean,uf_q1,uf_median,uf_q3,cr_q1,cr_median,cr_q3
void write_quality_csv(std::ostream& out, const std::vector<QualityCell>& table);
void write_relative_csv(std::ostream& out, const std::vector<RelativeQuality>& rows);

struct BenchConfig {
  int min_cells = 25;
  int max_cells = 5000;
  int steps = 21;
  int samples = 20;
  std::uint64_t seed = 7;
};

/// Geometric sequence of Voronoi seed counts from min_cells to max_cells.
std::vector<int> bench_sizes(const BenchConfig& cfg);

struct RuntimeRow {
  std::string method;
  int n_elements = 0;
  std::vector<double> seconds;
  double mean = 0, stddev = 0;
};

struct RuntimeReport {
  std::vector<RuntimeRow> rows;
};

/// Times single bisection calls on Voronoi meshes of increasing size.
RuntimeReport runtime_bench(const std::vector<const BisectionModel*>& methods, const BenchConfig& cfg);

/// method,n_elements,sample_idx,seconds
void write_runtime_csv(std::ostream& out, const RuntimeReport& report);

}  // namespace polyagg
