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

#include "polyagg/io.hpp"
#include "polyagg/mesh.hpp"

#include "doctest.h"
#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = polyagg::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("polyagg_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

json load(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

std::string slurp(const std::string& path) { return polyagg::read_file(path); }

}  // namespace

TEST_CASE("exit codes") {
  TempDir tmp;
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"generate", "--kind", "hexagons", "--n", "4", "--out", tmp / "x.mesh"}).code == 1);
  CHECK(cli({"generate", "--kind", "squares", "--out", tmp / "x.mesh"}).code == 1);  // no --n
  CHECK(cli({"agglomerate", "--mesh", tmp / "missing.mesh", "--out", tmp / "a.json"}).code == 2);

  std::ofstream(tmp / "bad.mesh") << "polyagg-mesh v1\nV 2\n0 0\n";
  const Run r = cli({"metrics", "--mesh", tmp / "bad.mesh", "--out", tmp / "q.csv"});
  CHECK(r.code == 2);
  CHECK(r.err.find("error:") == 0);

  REQUIRE(cli({"generate", "--kind", "squares", "--n", "4", "--out", tmp / "s.mesh"}).code == 0);
  CHECK(cli({"agglomerate", "--mesh", tmp / "s.mesh", "--method", "gnn", "--out", tmp / "a.json"}).code == 1);
  CHECK(cli({"agglomerate", "--mesh", tmp / "s.mesh", "--h-target", "-2h0", "--out", tmp / "a.json"}).code == 1);
  CHECK(cli({"agglomerate", "--mesh", tmp / "s.mesh", "--parts", "17", "--out", tmp / "a.json"}).code == 1);
  CHECK(cli({"train", "--val-manifest", tmp / "m.json", "--out", tmp / "m.gnn"}).code == 1);
}

TEST_CASE("generate, agglomerate, hierarchy and metrics round trip") {
  TempDir tmp;
  REQUIRE(cli({"generate", "--kind", "squares", "--n", "16", "--out", tmp / "sq.mesh"}).code == 0);
  CHECK(polyagg::load_mesh(tmp / "sq.mesh").num_cells() == 256);
  CHECK(fs::exists(tmp / "sq_config.json"));

  REQUIRE(cli({"agglomerate", "--mesh", tmp / "sq.mesh", "--method", "kmeans", "--out", tmp / "a.json"}).code == 0);
  const json a = load(tmp / "a.json");
  CHECK(a["version"] == 1);
  CHECK(a["method"] == "kmeans");
  REQUIRE(a["levels"].size() == 1);
  CHECK(a["levels"][0]["num_cells"] == 16);
  CHECK(a["levels"][0]["assignment"].size() == 256);

  REQUIRE(cli({"agglomerate", "--mesh", tmp / "sq.mesh", "--method", "multilevel", "--parts", "16", "--out",
               tmp / "p.json"})
              .code == 0);
  CHECK(load(tmp / "p.json")["levels"][0]["num_cells"] == 16);

  REQUIRE(cli({"hierarchy", "--mesh", tmp / "sq.mesh", "--factors", "2,4,8", "--out", tmp / "h.json"}).code == 0);
  const json h = load(tmp / "h.json");
  REQUIRE(h["levels"].size() == 3);
  CHECK(h["levels"][0]["factor"] == 2.0);

  const Run m = cli({"metrics", "--mesh", tmp / "sq.mesh", "--agg", tmp / "a.json", tmp / "h.json", "--out",
                     tmp / "q.csv", "--elements", tmp / "e.csv"});
  REQUIRE(m.code == 0);
  std::istringstream q(slurp(tmp / "q.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(q, line)) ++rows;
  CHECK(rows == 4);
  // k-means recovers the 4x4 squares: UF and CR of a square.
  CHECK(slurp(tmp / "q.csv").find("sq,kmeans,1.000000,0.707107") != std::string::npos);
  CHECK(slurp(tmp / "e.csv").rfind("method,cell,uf,cr\n", 0) == 0);

  REQUIRE(cli({"metrics", "--mesh", tmp / "sq.mesh", "--out", tmp / "id.csv"}).code == 0);
  CHECK(slurp(tmp / "id.csv").find("sq,identity,1.000000,0.707107") != std::string::npos);
}

TEST_CASE("dataset generation and training") {
  TempDir tmp;
  REQUIRE(cli({"generate", "--kind", "all", "--count", "1", "--out", tmp / "train"}).code == 0);
  REQUIRE(cli({"generate", "--kind", "voronoi", "--count", "2", "--split", "val", "--out", tmp / "val"}).code == 0);
  const json manifest = load(tmp / "train/manifest.json");
  CHECK(manifest["meshes"].size() == 4);
  CHECK(load(tmp / "val/manifest.json")["meshes"].size() == 2);
  for (const auto& m : manifest["meshes"]) CHECK(fs::exists(tmp.path / "train" / m["file"].get<std::string>()));

  REQUIRE(cli({"generate", "--kind", "all", "--count", "0", "--out", tmp / "empty"}).code == 0);
  CHECK(load(tmp / "empty/manifest.json")["meshes"].empty());

  const Run t = cli({"train", "--manifest", tmp / "train/manifest.json", "--val-manifest", tmp / "val/manifest.json",
                     "--epochs", "2", "--lr", "1e-3", "--out", tmp / "m.gnn"});
  REQUIRE(t.code == 0);
  const json summary = json::parse(t.out);
  CHECK(summary["epochs"] == 2);
  CHECK(fs::exists(tmp / "m.gnn"));
  CHECK(slurp(tmp / "m_history.csv").rfind("epoch,train_loss,val_loss\n1,", 0) == 0);
  const json echo = load(tmp / "m_config.json");
  CHECK(echo["options"]["lr"] == 1e-3);
  CHECK(echo["options"]["l2"] == 1e-5);

  CHECK(cli({"agglomerate", "--mesh", tmp.path / "train" / manifest["meshes"][0]["file"].get<std::string>(),
             "--method", "gnn", "--model", tmp / "m.gnn", "--out", tmp / "g.json"})
            .code == 0);
  CHECK(cli({"bench", "--methods", "kmeans,gnn", "--model", tmp / "m.gnn", "--samples", "1", "--steps", "2",
             "--max-cells", "40", "--out", tmp / "rt.csv"})
            .code == 0);
  CHECK(slurp(tmp / "rt.csv").rfind("method,n_elements,sample_idx,seconds\n", 0) == 0);
}

TEST_CASE("seed precedence: flag over config over environment") {
  TempDir tmp;
  std::ofstream(tmp / "c.json") << R"({"seed": 11, "generate": {"n": 6}})";
  auto seed_of = [&](const std::string& echo) { return load(tmp / echo)["seed"].get<std::uint64_t>(); };

  ::setenv("POLYAGG_SEED", "5", 1);
  REQUIRE(cli({"generate", "--kind", "voronoi", "--n", "20", "--out", tmp / "env.mesh"}).code == 0);
  CHECK(seed_of("env_config.json") == 5);
  REQUIRE(cli({"--config", tmp / "c.json", "generate", "--kind", "voronoi", "--out", tmp / "cfg.mesh"}).code == 0);
  CHECK(seed_of("cfg_config.json") == 11);
  CHECK(load(tmp / "cfg_config.json")["options"]["n"] == 6);
  REQUIRE(cli({"--config", tmp / "c.json", "--seed", "3", "generate", "--kind", "voronoi", "--n", "20", "--out",
               tmp / "flag.mesh"})
              .code == 0);
  CHECK(seed_of("flag_config.json") == 3);
  CHECK(load(tmp / "flag_config.json")["options"]["n"] == 20);
  ::setenv("POLYAGG_SEED", "seven", 1);
  CHECK(cli({"generate", "--kind", "voronoi", "--n", "20", "--out", tmp / "bad.mesh"}).code == 1);
  ::unsetenv("POLYAGG_SEED");

  REQUIRE(cli({"generate", "--kind", "voronoi", "--n", "20", "--out", tmp / "d.mesh"}).code == 0);
  CHECK(seed_of("d_config.json") == 7);

  std::ofstream(tmp / "bogus.json") << R"({"colour": "blue"})";
  CHECK(cli({"--config", tmp / "bogus.json", "generate", "--n", "4", "--out", tmp / "b.mesh"}).code == 1);
  std::ofstream(tmp / "broken.json") << "{";
  CHECK(cli({"--config", tmp / "broken.json", "generate", "--n", "4", "--out", tmp / "b.mesh"}).code == 1);
}

TEST_CASE("same seed, same bytes") {
  TempDir tmp;
  for (const char* name : {"a", "b"}) {
    const std::string base = tmp / name;
    REQUIRE(cli({"--seed", "42", "generate", "--kind", "random-triangles", "--n", "10", "--out", base + ".mesh"}).code == 0);
    REQUIRE(cli({"--seed", "42", "hierarchy", "--mesh", base + ".mesh", "--method", "kmeans", "--out", base + ".json"})
                .code == 0);
  }
  CHECK(slurp(tmp / "a.mesh") == slurp(tmp / "b.mesh"));
  json ha = load(tmp / "a.json"), hb = load(tmp / "b.json");
  CHECK(ha["levels"] == hb["levels"]);
}
