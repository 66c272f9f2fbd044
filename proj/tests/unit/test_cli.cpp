// Copyright 2026 The wlclass Authors
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


#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "wlc/archive.hpp"
#include "wlc/cli.hpp"
#include "wlc/model.hpp"

using namespace wlc;

namespace {

int wlclass(std::vector<std::string> args) {
  args.insert(args.begin(), "wlclass");
  args.insert(args.begin() + 1, {"--log-level", "warn"});
  return cli::run(args);
}

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(wlclass({"--help"}) == 0);
  CHECK(wlclass({"--version"}) == 0);
  CHECK(wlclass({"evaluate", "--features", "x.csv"}) == 1);
  CHECK(wlclass({"frobnicate"}) == 1);
  CHECK(wlclass({"synth", "--classes", "5", "--out", "x"}) == 1);
  CHECK(wlclass({}) == 1);
}

TEST_CASE("data errors exit with 2") {
  testing::TempDir dir("cli-errors");
  CHECK(wlclass({"featurize", "--archive", (dir / "none.npz").string(), "--out", (dir / "f").string()}) == 2);
  std::ofstream(dir / "junk.npz") << "not a zip";
  CHECK(wlclass({"featurize", "--archive", (dir / "junk.npz").string(), "--out", (dir / "f").string()}) == 2);
}

TEST_CASE("full pipeline from synthetic telemetry to a report") {
  testing::TempDir dir("cli-pipeline");
  const auto p = [&](const char* leaf) { return (dir / leaf).string(); };
  REQUIRE(wlclass({"synth", "--classes", "4", "--jobs", "12", "--noise", "0.3", "--min-length", "560", "--max-length", "700",
                   "--seed", "2", "--out", p("raw")}) == 0);
  CHECK(std::filesystem::exists(dir / "raw" / "manifest.json"));
  REQUIRE(wlclass({"window", "--input", p("raw"), "--policy", "middle", "--seed", "2", "--out", p("mid.npz")}) == 0);
  const auto data = read_challenge_archive(dir / "mid.npz");
  CHECK(data.samples() == 540);
  CHECK(data.x_train.trials() + data.x_test.trials() == 48);
  CHECK(std::filesystem::exists(p("mid.npz.manifest.json")));

  REQUIRE(wlclass({"featurize", "--archive", p("mid.npz"), "--reduction", "cov", "--out", p("cov")}) == 0);
  const auto train = cli::read_feature_file(dir / "cov.train.csv");
  CHECK(train.features.data.cols() == 28);
  CHECK(train.features.data.rows() == static_cast<Eigen::Index>(data.x_train.trials()));
  CHECK(train.labels == data.y_train);
  CHECK(train.sidecar["standardized"] == true);
  const auto test = cli::read_feature_file(dir / "cov.test.csv");
  CHECK(test.sidecar["standardizer_id"] == train.sidecar["standardizer_id"]);

  REQUIRE(wlclass({"train", "--model", "rf", "--features", p("cov.train.csv"), "--n-trees", "20", "--seed", "4", "--out",
                   p("rf.wlc")}) == 0);
  const auto model = load_model(dir / "rf.wlc");
  CHECK(std::get<ForestModel>(model.model).trees.size() == 20);

  REQUIRE(wlclass({"evaluate", "--model-path", p("rf.wlc"), "--features", p("cov.test.csv"), "--report", p("eval.jsonl")}) == 0);
  std::ifstream report(dir / "eval.jsonl");
  std::string line;
  REQUIRE(std::getline(report, line));
  const auto rec = nlohmann::json::parse(line);
  CHECK(rec["accuracy"].get<double>() >= 80.0);
  CHECK(rec["total"] == data.x_test.trials());

  REQUIRE(wlclass({"predict", "--model-path", p("rf.wlc"), "--features", p("cov.test.csv"), "--out", p("pred.csv")}) == 0);
  std::ifstream pred(dir / "pred.csv");
  std::size_t rows = 0;
  while (std::getline(pred, line)) ++rows;
  CHECK(rows == data.x_test.trials() + 1);

  const auto manifest = read_json(p("rf.wlc.manifest.json"));
  CHECK(manifest["subcommand"] == "train");
  CHECK(manifest["inputs"][p("cov.train.csv")] == cli::sha256_file(dir / "cov.train.csv"));
  CHECK(manifest["tool_version"] == cli::kVersion);

  // the model does not fit features of another width
  REQUIRE(wlclass({"featurize", "--archive", p("mid.npz"), "--reduction", "pca", "--pca-k", "5", "--out", p("pca")}) == 0);
  CHECK(wlclass({"evaluate", "--model-path", p("rf.wlc"), "--features", p("pca.test.csv")}) == 2);

  REQUIRE(wlclass({"gridsearch", "--archive", p("mid.npz"), "--model", "gbt", "--grid", "lambda=1,10", "--grid", "rounds=3",
                   "--folds", "3", "--out", p("grid.json"), "--model-out", p("grid.wlc")}) == 0);
  CHECK(read_json(p("grid.json"))["cells"].size() == 2);
  CHECK(std::filesystem::exists(dir / "grid.wlc"));
}

TEST_CASE("config files fill in flags the command line leaves out") {
  testing::TempDir dir("cli-config");
  std::ofstream(dir / "run.cfg") << "# synth settings\nseed = 5\njobs = 3\nmin-length = 600\nmax-length = 610\n";
  REQUIRE(wlclass({"--config", (dir / "run.cfg").string(), "synth", "--classes", "4", "--seed", "9", "--out",
                   (dir / "a").string()}) == 0);
  const auto m = read_json(dir / "a" / "manifest.json");
  CHECK(m["flags"]["--seed"] == "9");
  CHECK(m["flags"]["--jobs"] == "3");
  CHECK(m["seeds"]["synth"] == 9);
  CHECK(wlclass({"--config", (dir / "missing.cfg").string(), "synth", "--out", (dir / "b").string()}) != 0);
}

TEST_CASE("thread count falls back to the environment") {
  testing::TempDir dir("cli-threads");
  ::setenv("WLCLASS_THREADS", "3", 1);
  REQUIRE(wlclass({"synth", "--jobs", "3", "--min-length", "600", "--max-length", "600", "--out", (dir / "a").string()}) == 0);
  CHECK(read_json(dir / "a" / "manifest.json")["threads"] == 3);
  REQUIRE(wlclass({"--threads", "2", "synth", "--jobs", "3", "--min-length", "600", "--max-length", "600", "--out",
                   (dir / "b").string()}) == 0);
  CHECK(read_json(dir / "b" / "manifest.json")["threads"] == 2);
  ::unsetenv("WLCLASS_THREADS");
  CHECK(slurp(dir / "a" / "gpu_telemetry.csv") == slurp(dir / "b" / "gpu_telemetry.csv"));
}

TEST_CASE("feature files keep names with commas") {
  testing::TempDir dir("cli-features");
  cli::FeatureFile f;
  f.features.data = Matrix(2, 2);
  f.features.data << 0.1, 1.0 / 3.0, -2.5e-300, 7;
  f.features.feature_names = {"cov(a,b)", "plain"};
  f.labels = {1, 0};
  f.class_names = {"x", "y"};
  cli::write_feature_file(f, dir / "f.csv");
  const auto back = cli::read_feature_file(dir / "f.csv");
  CHECK(back.features.data == f.features.data);
  CHECK(back.features.feature_names == f.features.feature_names);
  CHECK(back.labels == f.labels);
  CHECK(back.class_names == f.class_names);
}
