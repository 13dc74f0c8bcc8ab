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

#include "polyagg/metrics.hpp"

#include "polyagg/error.hpp"
#include "polyagg/log.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>

namespace polyagg {

std::vector<double> uniformity_factor(const PolyMesh& mesh) {
  std::vector<double> d(static_cast<std::size_t>(mesh.num_cells()));
  for (int i = 0; i < mesh.num_cells(); ++i) d[i] = element_diameter(mesh, i);
  const double h = mesh_size(mesh);
  for (auto& v : d) v /= h;
  return d;
}

std::vector<double> uniformity_factor(const AgglomeratedMesh& agg) {
  std::vector<double> d = agg.diameters();
  if (d.empty()) throw UsageError("uniformity_factor: empty mesh");
  const double h = *std::max_element(d.begin(), d.end());
  for (auto& v : d) v /= h;
  return d;
}

double inscribed_radius(const std::vector<Points2d>& loops) {
  constexpr int kGrid = 64;
  constexpr int kStarts = 8;
  constexpr int kRounds = 3;
  constexpr int kLocal = 8;  // local search spans -kLocal..kLocal sub-steps

  Eigen::AlignedBox2d box;
  for (const auto& loop : loops)
    for (Eigen::Index k = 0; k < loop.rows(); ++k) box.extend(loop.row(k).transpose());
  if (box.isEmpty()) throw NumericalError("inscribed_radius: empty boundary");
  const Eigen::Vector2d extent = box.sizes();

  auto score = [&](const Point2d& p) {
    return geom::inside_loops<double>(p, loops) ? geom::boundary_distance<double>(p, loops) : -1.0;
  };

  std::vector<std::pair<double, Point2d>> samples;
  for (int grid = kGrid; grid <= 4 * kGrid && samples.empty(); grid *= 2) {
    for (int j = 0; j < grid; ++j)
      for (int i = 0; i < grid; ++i) {
        const Point2d p(box.min()(0) + (i + 0.5) * extent(0) / grid, box.min()(1) + (j + 0.5) * extent(1) / grid);
        const double d = score(p);
        if (d > 0) samples.emplace_back(d, p);
      }
  }
  if (samples.empty()) throw NumericalError("inscribed_radius: no interior point found");
  const auto top = std::min<std::size_t>(kStarts, samples.size());
  std::partial_sort(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(top), samples.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });

  double best = samples.front().first;
  for (std::size_t s = 0; s < top; ++s) {
    auto [value, center] = samples[s];
    Eigen::Array2d step = extent.array() / kGrid;
    for (int round = 0; round < kRounds; ++round) {
      const Eigen::Array2d sub = step / kLocal;
      Point2d next = center;
      for (int dj = -kLocal; dj <= kLocal; ++dj)
        for (int di = -kLocal; di <= kLocal; ++di) {
          const Point2d p = center + Point2d(di * sub(0), dj * sub(1));
          const double d = score(p);
          if (d > value) value = d, next = p;
        }
      center = next;
      step = sub;
    }
    best = std::max(best, value);
  }
  return best;
}

namespace {

double loops_diameter(const std::vector<Points2d>& loops) {
  Eigen::Index total = 0;
  for (const auto& l : loops) total += l.rows();
  Points2d all(total, 2);
  Eigen::Index row = 0;
  for (const auto& l : loops) {
    all.middleRows(row, l.rows()) = l;
    row += l.rows();
  }
  return geom::diameter(all);
}

}  // namespace

double circle_ratio(const std::vector<Points2d>& loops) {
  return inscribed_radius(loops) / (0.5 * loops_diameter(loops));
}

double circle_ratio(const PolyMesh& mesh, int cell) { return circle_ratio(std::vector<Points2d>{mesh.cell_points(cell)}); }

std::vector<double> circle_ratios(const PolyMesh& mesh) {
  std::vector<double> out(static_cast<std::size_t>(mesh.num_cells()));
  for (int i = 0; i < mesh.num_cells(); ++i) out[i] = circle_ratio(mesh, i);
  return out;
}

std::vector<double> circle_ratios(const AgglomeratedMesh& agg) {
  const auto loops = coarse_boundaries(agg);
  std::vector<double> out(loops.size());
  for (std::size_t c = 0; c < loops.size(); ++c)
    out[c] = inscribed_radius(loops[c]) / (0.5 * agg.diameters()[c]);
  return out;
}

Summary summarize(std::vector<double> values) {
  if (values.empty()) throw UsageError("summarize: no values");
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  Summary s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  return s;
}

QualityReport quality_report(const PolyMesh& mesh) {
  QualityReport r{uniformity_factor(mesh), circle_ratios(mesh), {}, {}};
  r.uf_summary = summarize(r.uf);
  r.cr_summary = summarize(r.cr);
  return r;
}

QualityReport quality_report(const AgglomeratedMesh& agg) {
  QualityReport r{uniformity_factor(agg), circle_ratios(agg), {}, {}};
  r.uf_summary = summarize(r.uf);
  r.cr_summary = summarize(r.cr);
  return r;
}

std::vector<QualityCell> quality_table(const std::vector<NamedMesh>& meshes, const std::vector<QualityMethod>& methods,
                                       double factor) {
  if (!(factor > 0)) throw UsageError("quality_table: factor must be positive");
  std::vector<QualityCell> out;
  for (const auto& m : meshes) {
    const double h0 = mesh_size(*m.mesh);
    const int count = std::max(1, static_cast<int>(std::lround(m.mesh->num_cells() / (factor * factor))));
    for (const auto& [method, protocol] : methods) {
      QualityCell cell{m.kind, method->name(), std::nullopt, {}, 0};
      try {
        const auto agg = protocol == Protocol::TargetCount ? agglomerate_to_count(m.mesh, count, *method)
                                                           : agglomerate(m.mesh, factor * h0, *method);
        cell.report = quality_report(agg);
        cell.coarse_cells = agg.num_coarse();
      } catch (const Error& e) {
        cell.error = e.what();
        warn("quality_table: " + m.kind + "/" + cell.method + " failed: " + e.what());
      }
      out.push_back(std::move(cell));
    }
  }
  return out;
}

std::vector<RelativeQuality> relative_quality(const std::vector<QualityCell>& table, const std::string& baseline) {
  std::map<std::string, const QualityCell*> base;
  for (const auto& c : table)
    if (c.method == baseline && c.report) base[c.mesh_kind] = &c;
  std::vector<RelativeQuality> out;
  for (const auto& c : table) {
    if (c.method == baseline || !c.report) continue;
    auto it = base.find(c.mesh_kind);
    if (it == base.end()) continue;
    const auto& b = *it->second->report;
    out.push_back({c.mesh_kind, c.method, baseline, c.report->uf_summary.mean / b.uf_summary.mean,
                   c.report->cr_summary.mean / b.cr_summary.mean});
  }
  return out;
}

void write_quality_csv(std::ostream& out, const std::vector<QualityCell>& table) {
  out << "mesh_kind,method,uf_mean,cr_mean,uf_q1,uf_median,uf_q3,cr_q1,cr_median,cr_q3\n";
  char buf[256];
  for (const auto& c : table) {
    out << c.mesh_kind << ',' << c.method;
    if (!c.report) {
      out << ",,,,,,,,\n";
      continue;
    }
    const auto& u = c.report->uf_summary;
    const auto& r = c.report->cr_summary;
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", u.mean, r.mean, u.q1, u.median, u.q3,
                  r.q1, r.median, r.q3);
    out << buf;
  }
}

void write_relative_csv(std::ostream& out, const std::vector<RelativeQuality>& rows) {
  out << "mesh_kind,method,baseline,uf_ratio,cr_ratio\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f\n", r.uf_ratio, r.cr_ratio);
    out << r.mesh_kind << ',' << r.method << ',' << r.baseline << buf;
  }
}

std::vector<int> bench_sizes(const BenchConfig& cfg) {
  if (cfg.min_cells < 4 || cfg.max_cells < cfg.min_cells || cfg.steps < 1 || cfg.samples < 1)
    throw UsageError("bench: need 4 <= min_cells <= max_cells, steps >= 1, samples >= 1");
  std::vector<int> sizes;
  for (int k = 0; k < cfg.steps; ++k) {
    const double t = cfg.steps == 1 ? 0.0 : static_cast<double>(k) / (cfg.steps - 1);
    sizes.push_back(static_cast<int>(std::lround(cfg.min_cells * std::pow(double(cfg.max_cells) / cfg.min_cells, t))));
  }
  return sizes;
}

RuntimeReport runtime_bench(const std::vector<const BisectionModel*>& methods, const BenchConfig& cfg) {
  using clock = std::chrono::steady_clock;
  RuntimeReport report;
  const auto sizes = bench_sizes(cfg);
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const PolyMesh mesh = generate_mesh(MeshKind::Voronoi, sizes[k], cfg.seed + k);
    const Graph g = connectivity_graph(mesh);
    const FeatureMatrix x = extract_features(mesh);
    for (const BisectionModel* method : methods) {
      RuntimeRow row{method->name(), mesh.num_cells(), {}, 0, 0};
      for (int s = 0; s < cfg.samples; ++s) {
        const auto t0 = clock::now();
        const ProbPartition y = method->bisect(g, x);
        const auto t1 = clock::now();
        if (y.rows() != g.num_nodes()) throw DataError("bench: wrong output size");
        row.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
      }
      const double n = static_cast<double>(row.seconds.size());
      row.mean = std::accumulate(row.seconds.begin(), row.seconds.end(), 0.0) / n;
      double var = 0;
      for (double t : row.seconds) var += (t - row.mean) * (t - row.mean);
      row.stddev = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
      if (summarize(row.seconds).median < 1e-6)
        warn("bench: median time of " + row.method + " at n=" + std::to_string(row.n_elements) +
             " is below timer resolution (1us)");
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

void write_runtime_csv(std::ostream& out, const RuntimeReport& report) {
  out << "method,n_elements,sample_idx,seconds\n";
  char buf[64];
  for (const auto& row : report.rows)
    for (std::size_t s = 0; s < row.seconds.size(); ++s) {
      std::snprintf(buf, sizeof buf, ",%.9e\n", row.seconds[s]);
      out << row.method << ',' << row.n_elements << ',' << s << buf;
    }
}

}  // namespace polyagg
