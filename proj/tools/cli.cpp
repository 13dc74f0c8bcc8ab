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

#include "cli.hpp"

#include "polyagg/agglomerate.hpp"
#include "polyagg/error.hpp"
#include "polyagg/gnn.hpp"
#include "polyagg/io.hpp"
#include "polyagg/metrics.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

namespace polyagg::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kDefaultSeed = 7;

/// JSON config files for CLI11: top-level keys are root options, nested
/// objects address subcommands, arrays give multi-value options.
class JsonConfig final : public CLI::Config {
public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw CLI::ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConfigError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

private:
  static std::string scalar(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

  static void flatten(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto nested = parents;
        nested.push_back(key);
        flatten(value, nested, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array())
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      else
        item.inputs.push_back(scalar(value));
      items.push_back(std::move(item));
    }
  }
};

json typed(const std::string& s) {
  try {
    return json::parse(s);
  } catch (const json::exception&) {
    return s;
  }
}

/// Every option of `sub` with its effective value, plus the resolved seed.
json effective_config(const CLI::App& sub, std::uint64_t seed) {
  json options = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      if (opt->get_expected_max() > 1) {
        json arr = json::array();
        for (const auto& v : r) arr.push_back(typed(v));
        options[name] = arr;
      } else if (opt->get_expected_min() == 0) {
        options[name] = true;
      } else {
        options[name] = typed(r.back());
      }
    } else {
      const std::string d = opt->get_default_str();
      options[name] = d.empty() ? json() : typed(d);
    }
  }
  return json{{"command", sub.get_name()}, {"seed", seed}, {"options", options}};
}

/// Echo written next to a file output as <stem>_config.json.
fs::path echo_path_for(const fs::path& output) {
  return output.parent_path() / (output.stem().string() + "_config.json");
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::shared_ptr<const GnnModel> maybe_model(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_shared<const GnnModel>(load_model(path));
}

/// "<k>h0" relative to the mesh size, otherwise an absolute length.
double parse_h_target(const std::string& text, double h0) {
  std::string num = text;
  double scale = 1.0;
  if (num.size() > 2 && num.compare(num.size() - 2, 2, "h0") == 0) {
    num.resize(num.size() - 2);
    scale = h0;
  }
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(num, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != num.size() || !(v > 0)) throw UsageError("--h-target must be a positive length or <k>h0, got '" + text + "'");
  return v * scale;
}

struct ManifestEntry {
  fs::path file;
  std::string kind;
  int n = 0;
  std::uint64_t seed = 0;
};

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  const json j = read_json(path);
  std::vector<ManifestEntry> out;
  try {
    if (j.at("version").get<int>() != 1) throw DataError(path.string() + ": unsupported manifest version");
    for (const auto& m : j.at("meshes"))
      out.push_back({path.parent_path() / m.at("file").get<std::string>(), m.at("kind").get<std::string>(),
                     m.at("n").get<int>(), m.at("seed").get<std::uint64_t>()});
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed manifest: " + e.what());
  }
  return out;
}

json assignment_level(const AgglomeratedMesh& agg) {
  return json{{"num_cells", agg.num_coarse()}, {"assignment", agg.assignment()}};
}

struct AggFile {
  std::string method;
  std::vector<std::pair<std::string, std::vector<int>>> levels;  // label, assignment
};

AggFile read_agg(const fs::path& path) {
  const json j = read_json(path);
  AggFile f;
  try {
    if (j.at("version").get<int>() != 1) throw DataError(path.string() + ": unsupported agglomeration file version");
    f.method = j.at("method").get<std::string>();
    const auto& levels = j.at("levels");
    for (std::size_t k = 0; k < levels.size(); ++k) {
      std::string label = f.method;
      if (levels.size() > 1) label += "@L" + std::to_string(k + 1);
      f.levels.emplace_back(label, levels[k].at("assignment").get<std::vector<int>>());
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed agglomeration file: " + e.what());
  }
  return f;
}

// ---------------------------------------------------------------- commands

struct Context {
  std::uint64_t seed = kDefaultSeed;
  std::ostream& out;
  std::ostream& err;
};

struct GenerateOpts {
  std::string kind = "squares";
  int n = 0;
  int count = -1;
  std::string split = "train";
  std::string out;
};

void cmd_generate(const GenerateOpts& o, const CLI::App& sub, const Context& ctx) {
  const fs::path out = o.out;
  if (o.count < 0) {
    if (o.kind == "all") throw UsageError("generate: --kind all needs --count");
    if (o.n <= 0) throw UsageError("generate: --n is required for a single mesh");
    save_mesh(generate_mesh(parse_mesh_kind(o.kind), o.n, ctx.seed), out);
    write_json(echo_path_for(out), effective_config(sub, ctx.seed));
    ctx.out << json{{"mesh", out.string()}}.dump() << "\n";
    return;
  }

  DatasetSpec spec;
  spec.seed = ctx.seed;
  std::array<int, 4> counts{0, 0, 0, 0};
  for (int k = 0; k < 4; ++k)
    if (o.kind == "all" || parse_mesh_kind(o.kind) == static_cast<MeshKind>(k)) counts[k] = o.count;
  spec.train_per_kind = spec.val_per_kind = {0, 0, 0, 0};
  (o.split == "val" ? spec.val_per_kind : spec.train_per_kind) = counts;
  const auto [train, val] = plan_dataset(spec);
  const auto& entries = o.split == "val" ? val : train;

  fs::create_directories(out);
  json meshes = json::array();
  std::array<int, 4> index{0, 0, 0, 0};
  for (DatasetEntry e : entries) {
    if (o.n > 0) e.n = o.n;
    char name[64];
    std::snprintf(name, sizeof name, "%s_%04d.mesh", to_string(e.kind).c_str(), index[static_cast<int>(e.kind)]++);
    save_mesh(generate_mesh(e.kind, e.n, e.seed), out / name);
    meshes.push_back({{"file", name}, {"kind", to_string(e.kind)}, {"n", e.n}, {"seed", e.seed}});
  }
  write_json(out / "manifest.json", json{{"version", 1}, {"meshes", meshes}});
  write_json(out / "generate_config.json", effective_config(sub, ctx.seed));
  ctx.out << json{{"manifest", (out / "manifest.json").string()}, {"meshes", meshes.size()}}.dump() << "\n";
}

struct TrainOpts {
  std::string manifest, val_manifest;
  int train_per_type = 200, val_per_type = 50;
  int epochs = 300;
  double lr = 1e-5, l2 = 1e-5;
  int batch = 4;
  std::string save = "final";
  std::string out, history;
  bool verbose = false;
};

std::vector<PreparedGraph> prepare(const std::vector<ManifestEntry>& entries) {
  std::vector<PreparedGraph> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(PreparedGraph::from_mesh(load_mesh(e.file)));
  return out;
}

std::vector<PreparedGraph> prepare(const std::vector<DatasetEntry>& entries) {
  std::vector<PreparedGraph> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(PreparedGraph::from_mesh(generate_mesh(e.kind, e.n, e.seed)));
  return out;
}

void cmd_train(const TrainOpts& o, const CLI::App& sub, const Context& ctx) {
  TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.l2_coeff = o.l2;
  cfg.batch_size = o.batch;
  cfg.epochs = o.epochs;
  cfg.seed = ctx.seed;
  cfg.validate();

  std::vector<PreparedGraph> train_set, val_set;
  if (!o.manifest.empty()) {
    train_set = prepare(read_manifest(o.manifest));
    if (!o.val_manifest.empty()) val_set = prepare(read_manifest(o.val_manifest));
  } else {
    if (!o.val_manifest.empty()) throw UsageError("train: --val-manifest needs --manifest");
    DatasetSpec spec;
    spec.seed = ctx.seed;
    spec.train_per_kind.fill(o.train_per_type);
    spec.val_per_kind.fill(o.val_per_type);
    const auto [tr, va] = plan_dataset(spec);
    train_set = prepare(tr);
    val_set = prepare(va);
  }
  if (train_set.empty()) throw UsageError("train: empty training set");

  const fs::path out = o.out;
  const fs::path history = o.history.empty() ? out.parent_path() / (out.stem().string() + "_history.csv") : fs::path(o.history);
  write_json(echo_path_for(out), effective_config(sub, ctx.seed));

  std::ostringstream csv;
  csv << "epoch,train_loss,val_loss\n";
  auto on_epoch = [&](const EpochRecord& r) {
    csv << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss) << '\n';
    if (o.verbose)
      ctx.err << "epoch " << r.epoch << " train " << r.train_loss << " val " << r.val_loss << std::endl;
  };
  TrainResult result;
  try {
    result = train(GnnModel::initialized(Architecture{}, ctx.seed), train_set, val_set, cfg, on_epoch);
  } catch (const NumericalError&) {
    write_file_atomic(history, csv.str());
    throw;
  }
  write_file_atomic(history, csv.str());
  save_model(o.save == "best" ? result.best_model : result.final_model, out);

  json summary{{"model", out.string()}, {"history", history.string()}, {"epochs", result.history.size()},
               {"train_graphs", train_set.size()}, {"val_graphs", val_set.size()}};
  if (!val_set.empty()) {
    summary["initial_val_loss"] = result.initial_val_loss;
    if (!result.history.empty()) summary["final_val_loss"] = result.history.back().val_loss;
  }
  ctx.out << summary.dump() << "\n";
}

struct AggOpts {
  std::string mesh, method = "kmeans", model, h_target = "4h0", out;
  int parts = 0;
  std::vector<double> factors{2, 4, 8};
};

void cmd_agglomerate(const AggOpts& o, const CLI::App& sub, const Context& ctx) {
  const auto mesh = std::make_shared<const PolyMesh>(load_mesh(o.mesh));
  const auto bisector = make_bisector(o.method, ctx.seed, maybe_model(o.model));
  const double h0 = mesh_size(*mesh);
  AgglomerateStats stats;
  json level;
  if (o.parts > 0) {
    if (sub.count("--h-target") > 0) throw UsageError("agglomerate: give either --h-target or --parts");
    level = assignment_level(agglomerate_to_count(mesh, o.parts, *bisector, &stats));
    level["parts"] = o.parts;
  } else {
    const double h = parse_h_target(o.h_target, h0);
    level = assignment_level(agglomerate(mesh, h, *bisector, &stats));
    level["h_target"] = h;
  }
  level["max_depth"] = stats.max_depth;
  level["repaired"] = stats.repaired;
  level["fallbacks"] = stats.fallbacks;
  const json doc{{"version", 1}, {"mesh", o.mesh}, {"method", bisector->name()}, {"h0", h0}, {"levels", {level}}};
  write_json(o.out, doc);
  write_json(echo_path_for(o.out), effective_config(sub, ctx.seed));
  ctx.out << json{{"out", o.out}, {"num_cells", level["num_cells"]}}.dump() << "\n";
}

void cmd_hierarchy(const AggOpts& o, const CLI::App& sub, const Context& ctx) {
  const auto mesh = std::make_shared<const PolyMesh>(load_mesh(o.mesh));
  const auto bisector = make_bisector(o.method, ctx.seed, maybe_model(o.model));
  const Hierarchy h = build_hierarchy(mesh, o.factors, *bisector);
  json levels = json::array();
  json counts = json::array();
  for (std::size_t k = 0; k < h.levels.size(); ++k) {
    json level = assignment_level(h.levels[k]);
    level["factor"] = o.factors[k];
    level["h_target"] = h.target_sizes[k];
    levels.push_back(level);
    counts.push_back(h.levels[k].num_coarse());
  }
  const json doc{{"version", 1}, {"mesh", o.mesh}, {"method", bisector->name()}, {"h0", mesh_size(*mesh)}, {"levels", levels}};
  write_json(o.out, doc);
  write_json(echo_path_for(o.out), effective_config(sub, ctx.seed));
  ctx.out << json{{"out", o.out}, {"num_cells", counts}}.dump() << "\n";
}

struct MetricsOpts {
  std::string mesh, kind, out, elements, model;
  std::vector<std::string> agg;
  bool table = false;
  double factor = 4;
  std::string baseline = "multilevel";
};

void cmd_metrics(const MetricsOpts& o, const CLI::App& sub, const Context& ctx) {
  const fs::path out = o.out;
  if (o.table) {
    std::vector<NamedMesh> meshes;
    for (MeshKind kind : {MeshKind::Triangles, MeshKind::RandomTriangles, MeshKind::Voronoi, MeshKind::Squares})
      meshes.push_back({to_string(kind), std::make_shared<const PolyMesh>(generate_mesh(
                                             kind, kind == MeshKind::Voronoi ? 256 : 16, ctx.seed))});
    const auto ml = make_bisector("multilevel", ctx.seed);
    const auto km = make_bisector("kmeans", ctx.seed);
    std::vector<QualityMethod> methods{{ml.get(), Protocol::TargetCount}, {km.get(), Protocol::TargetSize}};
    std::unique_ptr<BisectionModel> gnn;
    if (!o.model.empty()) {
      gnn = make_bisector("gnn", ctx.seed, maybe_model(o.model));
      methods.push_back({gnn.get(), Protocol::TargetSize});
    }
    const auto table = quality_table(meshes, methods, o.factor);
    fs::create_directories(out);
    std::ostringstream q, r;
    write_quality_csv(q, table);
    write_relative_csv(r, relative_quality(table, o.baseline));
    write_file_atomic(out / "quality.csv", q.str());
    write_file_atomic(out / "relative.csv", r.str());
    write_json(out / "metrics_config.json", effective_config(sub, ctx.seed));
    ctx.out << json{{"quality", (out / "quality.csv").string()}, {"relative", (out / "relative.csv").string()}}.dump()
            << "\n";
    return;
  }

  if (o.mesh.empty()) throw UsageError("metrics: --mesh is required unless --table is given");
  const auto mesh = std::make_shared<const PolyMesh>(load_mesh(o.mesh));
  const std::string kind = o.kind.empty() ? fs::path(o.mesh).stem().string() : o.kind;
  std::vector<std::pair<std::string, AgglomeratedMesh>> levels;
  if (o.agg.empty()) levels.emplace_back("identity", AgglomeratedMesh::identity(mesh));
  for (const auto& file : o.agg) {
    for (auto& [label, assignment] : read_agg(file).levels) {
      if (assignment.size() != static_cast<std::size_t>(mesh->num_cells()))
        throw DataError(file + ": assignment length does not match the mesh");
      levels.emplace_back(label, AgglomeratedMesh(mesh, std::move(assignment)));
    }
  }

  std::vector<QualityCell> table;
  std::ostringstream elements;
  elements << "method,cell,uf,cr\n";
  for (const auto& [label, agg] : levels) {
    QualityCell cell{kind, label, quality_report(agg), {}, agg.num_coarse()};
    for (std::size_t c = 0; c < cell.report->uf.size(); ++c)
      elements << label << ',' << c << ',' << format_double(cell.report->uf[c]) << ','
               << format_double(cell.report->cr[c]) << '\n';
    table.push_back(std::move(cell));
  }
  std::ostringstream q;
  write_quality_csv(q, table);
  write_file_atomic(out, q.str());
  if (!o.elements.empty()) write_file_atomic(o.elements, elements.str());
  write_json(echo_path_for(out), effective_config(sub, ctx.seed));
  json summary = json::array();
  for (const auto& c : table)
    summary.push_back({{"method", c.method},
                       {"num_cells", c.coarse_cells},
                       {"uf_mean", c.report->uf_summary.mean},
                       {"cr_mean", c.report->cr_summary.mean}});
  ctx.out << summary.dump() << "\n";
}

struct BenchOpts {
  std::vector<std::string> methods{"kmeans", "multilevel"};
  std::string model, out;
  int samples = 20, min_cells = 25, max_cells = 5000, steps = 21;
};

void cmd_bench(const BenchOpts& o, const CLI::App& sub, const Context& ctx) {
  const auto model = maybe_model(o.model);
  std::vector<std::unique_ptr<BisectionModel>> owned;
  std::vector<const BisectionModel*> methods;
  for (const auto& m : o.methods) {
    owned.push_back(make_bisector(m, ctx.seed, model));
    methods.push_back(owned.back().get());
  }
  BenchConfig cfg;
  cfg.samples = o.samples;
  cfg.min_cells = o.min_cells;
  cfg.max_cells = o.max_cells;
  cfg.steps = o.steps;
  cfg.seed = ctx.seed;
  const RuntimeReport report = runtime_bench(methods, cfg);
  std::ostringstream csv;
  write_runtime_csv(csv, report);
  write_file_atomic(o.out, csv.str());
  write_json(echo_path_for(o.out), effective_config(sub, ctx.seed));
  json summary = json::array();
  for (const auto& row : report.rows)
    summary.push_back({{"method", row.method}, {"n_elements", row.n_elements}, {"mean", row.mean}, {"stddev", row.stddev}});
  ctx.out << summary.dump() << "\n";
}

std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t flag_value) {
  if (opt->count() > 0) return flag_value;
  if (const char* env = std::getenv("POLYAGG_SEED")) {
    const std::string s = env;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (s.empty() || used != s.size()) throw UsageError("POLYAGG_SEED must be a non-negative integer, got '" + s + "'");
    return v;
  }
  return kDefaultSeed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Polygonal mesh agglomeration with k-means, a multilevel graph partitioner and a GNN", "polyagg"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  std::uint64_t seed = kDefaultSeed;
  CLI::Option* seed_opt = app.add_option("--seed", seed, "Global seed (falls back to POLYAGG_SEED, then 7)");

  std::function<void(const Context&)> action;
  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    sub->option_defaults()->always_capture_default();
    return sub;
  };
  const std::vector<std::string> kinds{"squares", "triangles", "random-triangles", "voronoi", "all"};
  const std::vector<std::string> method_names{"kmeans", "multilevel", "gnn"};

  GenerateOpts gen;
  CLI::App* g = add("generate", "Generate one mesh, or a dataset directory with a manifest");
  g->add_option("--kind", gen.kind, "Mesh kind")->check(CLI::IsMember(kinds));
  g->add_option("--n", gen.n, "Grid resolution, or seed count for voronoi; datasets sample it when omitted");
  g->add_option("--count", gen.count, "Meshes per kind; switches to dataset mode with --out as a directory");
  g->add_option("--split", gen.split, "Dataset split to draw: train or val")->check(CLI::IsMember({"train", "val"}));
  g->add_option("--out", gen.out, "Mesh file, or dataset directory")->required();
  g->callback([&, g] { action = [&, g](const Context& c) { cmd_generate(gen, *g, c); }; });

  TrainOpts tr;
  CLI::App* t = add("train", "Train the GNN bisection model");
  t->add_option("--manifest", tr.manifest, "Training manifest from `generate --count`");
  t->add_option("--val-manifest", tr.val_manifest, "Validation manifest");
  t->add_option("--train-per-type", tr.train_per_type, "In-memory dataset: training meshes per kind")
      ->check(CLI::NonNegativeNumber);
  t->add_option("--val-per-type", tr.val_per_type, "In-memory dataset: validation meshes per kind")
      ->check(CLI::NonNegativeNumber);
  t->add_option("--epochs", tr.epochs, "Epochs")->check(CLI::NonNegativeNumber);
  t->add_option("--lr", tr.lr, "Adam learning rate");
  t->add_option("--l2", tr.l2, "L2 regularisation coefficient");
  t->add_option("--batch", tr.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  t->add_option("--save", tr.save, "Model to write: final or best (lowest validation loss)")
      ->check(CLI::IsMember({"final", "best"}));
  t->add_option("--history", tr.history, "Per-epoch loss CSV (default <out stem>_history.csv)");
  t->add_option("--out", tr.out, "Model file")->required();
  t->add_flag("--verbose", tr.verbose, "Print per-epoch losses to stderr");
  t->callback([&, t] { action = [&, t](const Context& c) { cmd_train(tr, *t, c); }; });

  AggOpts ag;
  CLI::App* a = add("agglomerate", "Agglomerate a mesh by recursive bisection");
  a->add_option("--mesh", ag.mesh, "Input mesh file")->required();
  a->add_option("--method", ag.method, "Bisection model")->check(CLI::IsMember(method_names));
  a->add_option("--model", ag.model, "GNN model file (method gnn)");
  a->add_option("--h-target", ag.h_target, "Target size: absolute length or <k>h0");
  a->add_option("--parts", ag.parts, "Target cell count instead of a size (no adjustment step)")
      ->check(CLI::PositiveNumber);
  a->add_option("--out", ag.out, "Output JSON")->required();
  a->callback([&, a] { action = [&, a](const Context& c) { cmd_agglomerate(ag, *a, c); }; });

  AggOpts hi;
  CLI::App* h = add("hierarchy", "Build nested agglomerations for increasing target sizes");
  h->add_option("--mesh", hi.mesh, "Input mesh file")->required();
  h->add_option("--method", hi.method, "Bisection model")->check(CLI::IsMember(method_names));
  h->add_option("--model", hi.model, "GNN model file (method gnn)");
  h->add_option("--factors", hi.factors, "Target sizes as multiples of h0")->delimiter(',');
  h->add_option("--out", hi.out, "Output JSON")->required();
  h->callback([&, h] { action = [&, h](const Context& c) { cmd_hierarchy(hi, *h, c); }; });

  MetricsOpts me;
  CLI::App* m = add("metrics", "Quality metrics of agglomerations, or the standard comparison table");
  m->add_option("--mesh", me.mesh, "Fine mesh file");
  m->add_option("--agg", me.agg, "Agglomeration JSON files (identity when omitted)");
  m->add_option("--kind", me.kind, "mesh_kind label (default: mesh file stem)");
  m->add_option("--elements", me.elements, "Per-cell UF/CR CSV");
  m->add_flag("--table", me.table, "Run all methods on the four standard meshes");
  m->add_option("--model", me.model, "GNN model file (table mode)");
  m->add_option("--factor", me.factor, "Table mode: target size factor")->check(CLI::PositiveNumber);
  m->add_option("--baseline", me.baseline, "Table mode: method the ratios are relative to");
  m->add_option("--out", me.out, "quality.csv, or an output directory in table mode")->required();
  m->callback([&, m] { action = [&, m](const Context& c) { cmd_metrics(me, *m, c); }; });

  BenchOpts be;
  CLI::App* b = add("bench", "Time single bisections on Voronoi meshes of increasing size");
  b->add_option("--methods", be.methods, "Methods to time")->delimiter(',')->check(CLI::IsMember(method_names));
  b->add_option("--model", be.model, "GNN model file");
  b->add_option("--samples", be.samples, "Timed calls per method and size")->check(CLI::PositiveNumber);
  b->add_option("--min-cells", be.min_cells, "Smallest mesh");
  b->add_option("--max-cells", be.max_cells, "Largest mesh");
  b->add_option("--steps", be.steps, "Number of sizes, geometrically spaced")->check(CLI::PositiveNumber);
  b->add_option("--out", be.out, "runtime.csv")->required();
  b->callback([&, b] { action = [&, b](const Context& c) { cmd_bench(be, *b, c); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ? app.help() : std::string(e.what()));
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    const Context ctx{resolve_seed(seed_opt, seed), out, err};
    action(ctx);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace polyagg::cli
