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


#include "wlc/cli.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <sys/resource.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "wlc/archive.hpp"
#include "wlc/error.hpp"
#include "wlc/gbt.hpp"
#include "wlc/model.hpp"
#include "wlc/model_selection.hpp"
#include "wlc/parallel.hpp"
#include "wlc/raw_csv.hpp"
#include "wlc/synth.hpp"
#include "wlc/taxonomy.hpp"
#include "wlc/windowing.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wlc::cli {
namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
}

fs::path with_suffix(const fs::path& path, const std::string& suffix) { return fs::path(path.string() + suffix); }

const std::string& ensure_parent(const std::string& path) {
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  return path;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Every run leaves one of these next to its primary output.
class RunManifest {
 public:
  explicit RunManifest(std::string subcommand) : start_(std::chrono::steady_clock::now()) {
    doc_["subcommand"] = std::move(subcommand);
    doc_["tool_version"] = kVersion;
    doc_["inputs"] = json::object();
    doc_["outputs"] = json::array();
    doc_["seeds"] = json::object();
  }
  void flags(const CLI::App& app) {
    json f = json::object();
    for (const CLI::Option* opt : app.get_options()) {
      if (opt->get_name() == "--help" || (opt->count() == 0 && opt->get_default_str().empty())) continue;
      const auto results = opt->results();
      std::string key = opt->get_name();
      if (results.empty()) f[key] = opt->get_default_str();
      else if (results.size() == 1) f[key] = results.front();
      else f[key] = results;
    }
    doc_["flags"] = std::move(f);
  }
  void input(const fs::path& path) { doc_["inputs"][path.string()] = sha256_file(path); }
  void output(const fs::path& path) { doc_["outputs"].push_back(path.string()); }
  void seed(const std::string& name, std::uint64_t value) { doc_["seeds"][name] = value; }
  void threads(unsigned n) { doc_["threads"] = n; }
  void note(const std::string& key, json value) { doc_[key] = std::move(value); }

  void write(const fs::path& path) {
    doc_["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    rusage usage{};
    getrusage(RUSAGE_SELF, &usage);
    doc_["peak_rss_kib"] = usage.ru_maxrss;
    write_text(path, doc_.dump(2) + "\n");
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

// key = value lines; each key is injected as --key unless already on the
// command line, so flags win over the file.
std::vector<std::string> apply_config(std::vector<std::string> args) {
  std::optional<fs::path> config;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config = args[i].substr(9);
  }
  if (!config) return args;
  const std::string text = read_text(*config);
  std::istringstream lines(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Usage, config->string() + ":" + std::to_string(number) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    for (auto& ch : key) ch = ch == '_' ? '-' : ch;
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin() + 1, args.end(),
                                   [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
    if (given) continue;
    if (value == "true") args.push_back(flag);
    else if (value != "false") {
      args.push_back(flag);
      args.push_back(value);
    }
  }
  return args;
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.emplace_back(in);
    }
  }
  return out;
}

std::map<std::string, fs::path> read_dataset_manifest(const fs::path& path) {
  const std::string text = read_text(path);
  std::map<std::string, fs::path> out;
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() || base.empty() ? fs::path(p) : base / p; };
  const json doc = json::parse(text, nullptr, false);
  if (!doc.is_discarded()) {
    if (!doc.is_object()) throw Error(ErrorCode::SchemaMismatch, "manifest must map dataset names to paths");
    for (const auto& [name, value] : doc.items()) {
      if (!value.is_string()) throw Error(ErrorCode::SchemaMismatch, "manifest entry " + name + " is not a path");
      out[name] = resolve(value.get<std::string>());
    }
    return out;
  }
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    if (eq == std::string::npos) throw Error(ErrorCode::SchemaMismatch, "manifest line without '=': " + line);
    auto strip = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    out[strip(line.substr(0, eq))] = resolve(strip(line.substr(eq + 1)));
  }
  return out;
}

struct Common {
  int threads = -1;
  std::string log_level = "info";
  std::string config;
};

unsigned thread_count(const Common& c) {
  if (c.threads >= 0) return static_cast<unsigned>(c.threads);
  if (const char* env = std::getenv("WLCLASS_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 0) throw Error(ErrorCode::Usage, "WLCLASS_THREADS must be a nonnegative integer");
    return static_cast<unsigned>(v);
  }
  return 0;
}

void print_cv_table(const CvResult& cv) {
  std::printf("%-40s %9s %7s\n", "cell", "mean_acc", "std");
  for (std::size_t c = 0; c < cv.cells.size(); ++c) {
    const auto& r = cv.cells[c];
    std::printf("%-40s %9.2f %7.2f%s\n", r.cell.label().c_str(), r.mean_accuracy, r.std_accuracy,
                c == cv.best_cell ? "  *" : "");
  }
}

// ---- subcommands ----

struct SynthArgs {
  int classes = 4;
  double scale = 0.1;
  std::size_t jobs = 100;
  double noise = 0.3;
  std::size_t warmup = 0;
  double warmup_amplitude = 8.0;
  std::size_t min_length = 0;
  std::size_t max_length = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string emit_archive;
  std::string policy = "middle";
  std::size_t length = 540;
  double split = 0.8;
};

int do_synth(const SynthArgs& a, unsigned threads, RunManifest& m) {
  if (a.out.empty() == a.emit_archive.empty()) throw Error(ErrorCode::Usage, "synth needs exactly one of --out or --emit-archive");
  SynthCorpusSpec spec = a.classes == 26 ? default_26_class_spec(a.seed, a.scale) : default_4_class_spec(a.seed, a.jobs);
  spec.job_noise = a.noise;
  spec.warmup_samples = a.warmup;
  spec.warmup_amplitude = a.warmup_amplitude;
  spec.threads = threads;
  for (auto& c : spec.classes) {
    if (a.min_length) c.min_length = a.min_length;
    if (a.max_length) c.max_length = a.max_length;
  }
  const auto trials = generate_corpus(spec);
  m.seed("synth", a.seed);
  spdlog::info("generated {} trials in {} classes", trials.size(), spec.classes.size());
  fs::path manifest_path;
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    const fs::path path = fs::path(a.out) / "gpu_telemetry.csv";
    write_raw_csv(trials, path);
    m.output(path);
    manifest_path = fs::path(a.out) / "manifest.json";
  } else {
    WindowPolicy policy{parse_window_kind(a.policy), a.seed, a.length};
    const auto ds = build_challenge_dataset(filter_min_length(trials, a.length), policy, {a.split, a.seed, threads});
    write_challenge_archive(ds, ensure_parent(a.emit_archive));
    m.output(a.emit_archive);
    m.seed("split", a.seed);
    manifest_path = with_suffix(a.emit_archive, ".manifest.json");
    std::printf("train %zu test %zu classes %zu\n", ds.x_train.trials(), ds.x_test.trials(), ds.class_count());
  }
  m.write(manifest_path);
  return 0;
}

struct WindowArgs {
  std::vector<std::string> inputs;
  std::string policy = "middle";
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> split_seed;
  std::size_t length = 540;
  double split = 0.8;
  std::string out;
  std::string non_finite = "drop";
};

int do_window(const WindowArgs& a, unsigned threads, RunManifest& m) {
  IngestOptions ingest;
  if (a.non_finite == "ffill") ingest.non_finite = NonFinitePolicy::ForwardFill;
  else if (a.non_finite != "drop") throw Error(ErrorCode::Usage, "--non-finite must be drop or ffill");
  std::vector<RawTrial> trials;
  for (const auto& path : expand_inputs(a.inputs)) {
    m.input(path);
    auto part = ingest_raw_csv(path, SensorKind::Gpu, ingest);
    trials.insert(trials.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  const auto kept = filter_min_length(trials, a.length);
  if (kept.size() != trials.size()) spdlog::info("dropped {} series shorter than {} samples", trials.size() - kept.size(), a.length);
  const std::uint64_t split_seed = a.split_seed.value_or(a.seed);
  const WindowPolicy policy{parse_window_kind(a.policy), a.seed, a.length};
  const auto ds = build_challenge_dataset(kept, policy, {a.split, split_seed, threads});
  write_challenge_archive(ds, ensure_parent(a.out));
  m.seed("window", a.seed);
  m.seed("split", split_seed);
  m.output(a.out);
  m.write(with_suffix(a.out, ".manifest.json"));
  std::printf("train %zu test %zu classes %zu\n", ds.x_train.trials(), ds.x_test.trials(), ds.class_count());
  return 0;
}

struct FeaturizeArgs {
  std::string archive;
  std::string reduction = "cov";
  std::size_t pca_k = 28;
  bool center = false;
  bool unbiased = false;
  std::string out;
};

ReductionSpec reduction_from(const std::string& name, std::size_t k, bool center, bool unbiased) {
  ReductionSpec spec;
  if (name == "pca") spec.kind = Reduction::Pca;
  else if (name != "cov") throw Error(ErrorCode::Usage, "--reduction must be cov or pca");
  spec.pca_k = k;
  spec.covariance.center_per_trial = center;
  spec.covariance.unbiased_scale = unbiased;
  return spec;
}

int do_featurize(const FeaturizeArgs& a, unsigned threads, RunManifest& m) {
  const auto ds = read_challenge_archive(a.archive);
  m.input(a.archive);
  const std::string archive_hash = sha256_file(a.archive);
  const auto spec = reduction_from(a.reduction, a.pca_k, a.center, a.unbiased);
  const FeaturePipeline pipeline(ds.x_train, spec, threads);
  std::vector<std::string> names(ds.class_count());
  for (std::size_t c = 0; c < names.size(); ++c) names[c] = ds.class_name(static_cast<int>(c));
  for (const auto& [split, x, y] : {std::tuple{"train", &ds.x_train, &ds.y_train}, std::tuple{"test", &ds.x_test, &ds.y_test}}) {
    FeatureFile f;
    f.features = pipeline.transform(*x);
    f.labels = *y;
    f.class_names = names;
    f.sidecar = {{"split", split},
                 {"archive_sha256", archive_hash},
                 {"reduction", spec.label()},
                 {"standardizer_id", f.features.provenance.standardizer_id},
                 {"reduction_id", f.features.provenance.reduction_id},
                 {"standardized", f.features.provenance.standardized}};
    const fs::path path = with_suffix(a.out, std::string(".") + split + ".csv");
    write_feature_file(f, path);
    m.output(path);
  }
  m.write(with_suffix(a.out, ".manifest.json"));
  return 0;
}

struct TrainArgs {
  std::string model = "rf";
  std::string features;
  std::string out;
  std::uint64_t seed = 0;
  std::vector<std::string> params;
  std::map<std::string, double> named;
};

int do_train(const TrainArgs& a, unsigned threads, RunManifest& m) {
  ModelConfig config;
  config.family = parse_family(a.model);
  config.forest.seed = a.seed;
  for (const auto& [name, value] : a.named) config.set(name, value);
  for (const auto& p : a.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Usage, "--param expects name=value");
    char* end = nullptr;
    const double v = std::strtod(p.c_str() + eq + 1, &end);
    if (*end != '\0') throw Error(ErrorCode::Usage, "--param value is not a number: " + p);
    config.set(p.substr(0, eq), v);
  }
  config.set_threads(threads);
  const auto file = read_feature_file(a.features);
  m.input(a.features);
  const int classes = static_cast<int>(file.class_names.size());
  ModelFile out{train_model(config, file.features.data, file.labels, classes), {}};
  out.provenance = {{"config", config.to_json()},
                    {"features_sha256", sha256_file(a.features)},
                    {"feature_names", file.features.feature_names},
                    {"class_names", file.class_names},
                    {"reduction", file.sidecar.value("reduction", "")},
                    {"standardizer_id", file.features.provenance.standardizer_id},
                    {"reduction_id", file.features.provenance.reduction_id},
                    {"seed", a.seed},
                    {"tool_version", kVersion}};
  save_model(out, ensure_parent(a.out));
  m.seed("train", a.seed);
  m.output(a.out);
  m.write(with_suffix(a.out, ".manifest.json"));
  if (const auto* svm = std::get_if<SvmEnsemble>(&out.model); svm && !svm->converged()) {
    throw Error(ErrorCode::NoConvergence, "SMO hit its iteration limit; model written to " + a.out);
  }
  if (const auto* gbt = std::get_if<GbtModel>(&out.model)) {
    const auto report = feature_importance_report(*gbt, file.features.feature_names);
    for (std::size_t i = 0; i < std::min<std::size_t>(report.size(), 5); ++i) {
      spdlog::info("importance {} splits={} gain={:.4g}", report[i].name, report[i].split_count, report[i].total_gain);
    }
  }
  return 0;
}

FeatureFile load_matching_features(const fs::path& path, const ModelFile& model) {
  auto f = read_feature_file(path);
  if (model.provenance.contains("feature_names") && model.provenance["feature_names"] != json(f.features.feature_names)) {
    throw Error(ErrorCode::ShapeMismatch, "feature columns differ from the ones the model was trained on");
  }
  return f;
}

int do_predict(const std::string& model_path, const std::string& features, const std::string& out, RunManifest& m) {
  const auto model = load_model(model_path);
  const auto f = load_matching_features(features, model);
  m.input(model_path);
  m.input(features);
  const auto pred = predict(model.model, f.features.data);
  const auto names = model.provenance.value("class_names", f.class_names);
  std::string text = "row,label,class\n";
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto c = static_cast<std::size_t>(pred[i]);
    text += std::to_string(i) + "," + std::to_string(pred[i]) + "," + (c < names.size() ? names[c] : "") + "\n";
  }
  write_text(out, text);
  m.output(out);
  m.write(with_suffix(out, ".manifest.json"));
  return 0;
}

int do_evaluate(const std::string& model_path, const std::string& features, std::string report, RunManifest& m) {
  const auto model = load_model(model_path);
  const auto f = load_matching_features(features, model);
  m.input(model_path);
  m.input(features);
  const auto names = model.provenance.value("class_names", f.class_names);
  auto r = evaluate(model.model, f.features.data, f.labels, names);
  r.dataset_id = sha256_file(features);
  r.model_provenance = model.provenance;
  if (report.empty()) report = features + ".eval.jsonl";
  write_text(report, r.to_json().dump() + "\n");
  m.output(report);
  m.write(with_suffix(report, ".manifest.json"));
  std::fputs(r.to_table().c_str(), stdout);
  return 0;
}

struct GridArgs {
  std::string archive;
  std::string model = "rf";
  std::vector<std::string> reductions{"cov"};
  std::vector<std::size_t> pca_ks{28};
  bool center = false;
  bool unbiased = false;
  std::vector<std::string> grid;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  std::string out;
  std::string model_out;
};

std::pair<std::string, std::vector<double>> parse_grid_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::Usage, "--grid expects name=v1,v2,...");
  std::vector<double> values;
  std::istringstream list(text.substr(eq + 1));
  std::string item;
  while (std::getline(list, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') throw Error(ErrorCode::Usage, "--grid value is not a number: " + item);
    values.push_back(v);
  }
  if (values.empty()) throw Error(ErrorCode::Usage, "--grid axis " + text.substr(0, eq) + " has no values");
  return {text.substr(0, eq), values};
}

int do_gridsearch(const GridArgs& a, unsigned threads, RunManifest& m) {
  const auto ds = read_challenge_archive(a.archive);
  m.input(a.archive);
  GridSpec spec;
  spec.base.family = parse_family(a.model);
  spec.base.forest.seed = a.seed;
  spec.folds = a.folds;
  spec.seed = a.seed;
  spec.threads = threads;
  spec.reductions.clear();
  for (const auto& r : a.reductions) {
    if (r == "pca") {
      for (auto k : a.pca_ks) spec.reductions.push_back(reduction_from("pca", k, a.center, a.unbiased));
    } else {
      spec.reductions.push_back(reduction_from(r, 0, a.center, a.unbiased));
    }
  }
  for (const auto& g : a.grid) spec.hyperparameters.push_back(parse_grid_axis(g));
  const auto cv = grid_search(ds.x_train, ds.y_train, static_cast<int>(ds.class_count()), spec);
  print_cv_table(cv);
  std::vector<std::string> names(ds.class_count());
  for (std::size_t c = 0; c < names.size(); ++c) names[c] = ds.class_name(static_cast<int>(c));
  const auto test = cv.pipeline->transform(ds.x_test);
  auto eval = evaluate(cv.refit_model, test.data, ds.y_test, names);
  eval.dataset_id = sha256_file(a.archive);
  eval.model_provenance = cv.refit_config.to_json();
  std::printf("refit %s: test accuracy %.2f%%\n", cv.cells[cv.best_cell].cell.label().c_str(), eval.accuracy);
  json doc = cv.to_json();
  doc["record"] = "gridsearch";
  doc["test"] = eval.to_json();
  m.seed("kfold", a.seed);
  m.seed("forest", a.seed);
  if (!a.model_out.empty()) {
    ModelFile file{cv.refit_model,
                   {{"config", cv.refit_config.to_json()},
                    {"class_names", names},
                    {"reduction", cv.pipeline->spec().label()},
                    {"standardizer_id", cv.pipeline->standardizer().id()},
                    {"archive_sha256", eval.dataset_id},
                    {"seed", a.seed},
                    {"tool_version", kVersion}}};
    save_model(file, ensure_parent(a.model_out));
    m.output(a.model_out);
  }
  const fs::path out = a.out.empty() ? with_suffix(a.archive, ".gridsearch.json") : fs::path(a.out);
  write_text(out, doc.dump(2) + "\n");
  m.output(out);
  m.write(with_suffix(out, ".manifest.json"));
  return 0;
}

struct ReproduceArgs {
  std::string family = "all";
  std::string manifest;
  std::string out = "reproduce";
  std::uint64_t seed = 0;
  std::size_t folds_rf_svm = 10;
  std::size_t folds_gbt = 5;
  std::size_t gbt_rounds = 40;
};

int do_reproduce(const ReproduceArgs& a, unsigned threads, RunManifest& m) {
  const auto manifest = read_dataset_manifest(a.manifest);
  m.input(a.manifest);
  for (const auto& [name, path] : manifest) {
    if (fs::exists(path)) m.input(path);
    else spdlog::warn("{}: archive missing at {}", to_string(ErrorCode::MissingArchive), path.string());
  }
  ReproduceOptions options;
  options.seed = a.seed;
  options.threads = threads;
  options.folds_rf_svm = a.folds_rf_svm;
  options.folds_gbt = a.folds_gbt;
  options.gbt_rounds = a.gbt_rounds;
  std::vector<ModelFamily> families;
  if (a.family == "all") families = {ModelFamily::Svm, ModelFamily::Rf, ModelFamily::Gbt};
  else families = {parse_family(a.family)};

  std::string records;
  std::size_t produced = 0;
  for (auto family : families) {
    ResultsTable table;
    try {
      table = reproduce_table(manifest, family, options);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingArchive) throw;
      spdlog::warn("{}: {}", to_string(family), e.what());
      continue;
    }
    std::fputs(table.to_text().c_str(), stdout);
    for (const auto& c : table.cells) {
      if (!c.accuracy) continue;
      ++produced;
      std::printf("  %-9s %-12s ours %6.2f", c.row.c_str(), c.dataset.c_str(), *c.accuracy);
      if (c.reference) std::printf("  target %6.2f  delta %+6.2f", *c.reference, *c.accuracy - *c.reference);
      std::printf("  [%s]\n", c.best_cell.c_str());
    }
    for (auto cell : table.to_json()["cells"]) records += cell.dump() + "\n";
  }
  if (produced == 0) throw Error(ErrorCode::MissingArchive, "no archive in the manifest could be read");
  const fs::path out = with_suffix(a.out, ".jsonl");
  write_text(out, records);
  m.seed("reproduce", a.seed);
  m.output(out);
  m.write(with_suffix(a.out, ".manifest.json"));
  return 0;
}

int dispatch(std::vector<std::string> args) {
  args = apply_config(std::move(args));
  CLI::App app{"Workload classification from GPU telemetry", "wlclass"};
  app.set_version_flag("--version", std::string("wlclass ") + kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--threads", common.threads, "Worker threads, 0 = all cores (fallback: WLCLASS_THREADS)");
  app.add_option("--log-level", common.log_level, "trace, debug, info, warn, error or off");
  app.add_option("--config", common.config, "key = value file mirroring the flags; flags win");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate synthetic labelled GPU telemetry");
  s->add_option("--classes", synth.classes, "4 or 26")->check(CLI::IsMember({4, 26}));
  s->add_option("--scale", synth.scale, "Job-count scale for 26 classes");
  s->add_option("--jobs", synth.jobs, "Jobs per class for 4 classes");
  s->add_option("--noise", synth.noise, "Job-specific disturbance amplitude");
  s->add_option("--warmup", synth.warmup, "Leading class-independent samples per trial");
  s->add_option("--warmup-amplitude", synth.warmup_amplitude);
  s->add_option("--min-length", synth.min_length);
  s->add_option("--max-length", synth.max_length);
  s->add_option("--seed", synth.seed);
  s->add_option("--out", synth.out, "Directory for raw CSV output");
  s->add_option("--emit-archive", synth.emit_archive, "Write a windowed archive instead");
  s->add_option("--policy", synth.policy, "Window policy for --emit-archive");
  s->add_option("--length", synth.length);
  s->add_option("--split", synth.split);

  WindowArgs window;
  auto* w = app.add_subcommand("window", "Window raw telemetry CSVs into a challenge archive");
  w->add_option("--input", window.inputs, "CSV files or directories")->required();
  w->add_option("--policy", window.policy, "start, middle or random");
  w->add_option("--seed", window.seed);
  w->add_option("--split-seed", window.split_seed);
  w->add_option("--length", window.length)->check(CLI::PositiveNumber);
  w->add_option("--split", window.split)->check(CLI::Range(0.0, 1.0));
  w->add_option("--non-finite", window.non_finite, "drop or ffill");
  w->add_option("--out", window.out)->required();

  FeaturizeArgs feat;
  auto* f = app.add_subcommand("featurize", "Standardize and reduce an archive to feature files");
  f->add_option("--archive", feat.archive)->required();
  f->add_option("--reduction", feat.reduction, "cov or pca");
  f->add_option("--pca-k", feat.pca_k);
  f->add_flag("--center-per-trial", feat.center);
  f->add_flag("--scale-unbiased", feat.unbiased);
  f->add_option("--out", feat.out, "Output prefix; writes <prefix>.train.csv and <prefix>.test.csv")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a classifier on a feature file");
  t->add_option("--model", train.model, "rf, svm or gbt");
  t->add_option("--features", train.features)->required();
  t->add_option("--out", train.out)->required();
  t->add_option("--seed", train.seed);
  t->add_option("--param", train.params, "name=value hyperparameter");
  const std::vector<std::pair<std::string, std::string>> hyper = {
      {"--n-trees", "n_trees"}, {"--max-depth", "max_depth"}, {"--min-leaf", "min_leaf"}, {"--max-features", "max_features"},
      {"--C", "C"}, {"--gamma", "gamma"}, {"--rounds", "rounds"}, {"--learning-rate", "learning_rate"},
      {"--alpha", "alpha"}, {"--lambda", "lambda"}, {"--min-child-weight", "min_child_weight"}};
  for (const auto& [flag, name] : hyper) {
    t->add_option_function<double>(flag, [&train, name = name](double v) { train.named[name] = v; });
  }
  t->add_flag_function("--linear", [&train](std::int64_t) { train.named["linear"] = 1.0; }, "Linear SVM kernel");

  std::string model_path, features, out, report;
  auto* p = app.add_subcommand("predict", "Predict labels for a feature file");
  p->add_option("--model-path", model_path)->required();
  p->add_option("--features", features)->required();
  p->add_option("--out", out, "Labels CSV")->required();

  auto* e = app.add_subcommand("evaluate", "Accuracy and per-class report");
  e->add_option("--model-path", model_path)->required();
  e->add_option("--features", features)->required();
  e->add_option("--report", report, "JSONL report path (default <features>.eval.jsonl)");

  GridArgs grid;
  auto* g = app.add_subcommand("gridsearch", "k-fold grid search on an archive's training split");
  g->add_option("--archive", grid.archive)->required();
  g->add_option("--model", grid.model);
  g->add_option("--reduction", grid.reductions, "cov and/or pca")->delimiter(',');
  g->add_option("--pca-k", grid.pca_ks)->delimiter(',');
  g->add_flag("--center-per-trial", grid.center);
  g->add_flag("--scale-unbiased", grid.unbiased);
  g->add_option("--grid", grid.grid, "name=v1,v2,... (repeatable)");
  g->add_option("--folds", grid.folds);
  g->add_option("--seed", grid.seed);
  g->add_option("--out", grid.out);
  g->add_option("--model-out", grid.model_out);

  ReproduceArgs repro;
  auto* r = app.add_subcommand("reproduce", "Rebuild the reference accuracy table from archives");
  r->add_option("--family", repro.family, "svm, rf, gbt or all");
  r->add_option("--manifest", repro.manifest, "JSON or key = value map of dataset name to path")->required();
  r->add_option("--out", repro.out, "Output prefix");
  r->add_option("--seed", repro.seed);
  r->add_option("--folds", repro.folds_rf_svm);
  r->add_option("--gbt-folds", repro.folds_gbt);
  r->add_option("--gbt-rounds", repro.gbt_rounds);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), const_cast<char**>(argv.data()));
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : exit_code_for(ErrorCode::Usage);
  }

  auto logger = std::make_shared<spdlog::logger>("wlclass", std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
  spdlog::set_default_logger(logger);
  const auto level = spdlog::level::from_str(common.log_level);
  if (level == spdlog::level::off && common.log_level != "off") throw Error(ErrorCode::Usage, "unknown --log-level " + common.log_level);
  spdlog::set_level(level);

  const unsigned threads = thread_count(common);
  CLI::App* sub = app.get_subcommands().front();
  RunManifest manifest(sub->get_name());
  manifest.flags(*sub);
  manifest.threads(resolve_threads(threads));
  if (sub == s) return do_synth(synth, threads, manifest);
  if (sub == w) return do_window(window, threads, manifest);
  if (sub == f) return do_featurize(feat, threads, manifest);
  if (sub == t) return do_train(train, threads, manifest);
  if (sub == p) return do_predict(model_path, features, out, manifest);
  if (sub == e) return do_evaluate(model_path, features, report, manifest);
  if (sub == g) return do_gridsearch(grid, threads, manifest);
  return do_reproduce(repro, threads, manifest);
}

}  // namespace

void write_feature_file(const FeatureFile& file, const fs::path& path) {
  const auto& x = file.features.data;
  if (static_cast<std::size_t>(x.rows()) != file.labels.size() ||
      static_cast<std::size_t>(x.cols()) != file.features.feature_names.size()) {
    throw Error(ErrorCode::ShapeMismatch, "feature matrix, names and labels disagree");
  }
  std::string text = "label";
  for (const auto& n : file.features.feature_names) {
    if (n.find_first_of(",\"") == std::string::npos) {
      text += "," + n;
      continue;
    }
    text += ",\"";
    for (char ch : n) text += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    text += "\"";
  }
  text += "\n";
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    text += std::to_string(file.labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < x.cols(); ++j) text += "," + format_g17(x(i, j));
    text += "\n";
  }
  write_text(path, text);
  json side = file.sidecar;
  side["class_names"] = file.class_names;
  side["standardizer_id"] = file.features.provenance.standardizer_id;
  side["reduction_id"] = file.features.provenance.reduction_id;
  side["standardized"] = file.features.provenance.standardized;
  write_text(with_suffix(path, ".json"), side.dump(2) + "\n");
}

FeatureFile read_feature_file(const fs::path& path) {
  FeatureFile f;
  const std::string text = read_text(path);
  const fs::path side_path = with_suffix(path, ".json");
  if (!fs::exists(side_path)) throw Error(ErrorCode::IoError, "missing sidecar " + side_path.string());
  f.sidecar = json::parse(read_text(side_path), nullptr, false);
  if (f.sidecar.is_discarded() || !f.sidecar.is_object()) throw Error(ErrorCode::SchemaMismatch, "sidecar is not a JSON object");
  f.class_names = f.sidecar.value("class_names", std::vector<std::string>{});
  f.features.provenance.standardizer_id = f.sidecar.value("standardizer_id", "");
  f.features.provenance.reduction_id = f.sidecar.value("reduction_id", "");
  f.features.provenance.standardized = f.sidecar.value("standardized", false);

  std::istringstream lines(text);
  std::string line;
  if (!std::getline(lines, line) || line.rfind("label", 0) != 0) throw Error(ErrorCode::SchemaMismatch, "feature file must start with a label column");
  {
    // RFC 4180 quoting: names such as cov(a,b) contain commas
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char ch = line[i];
      if (quoted) {
        if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') fields.back() += line[++i];
        else if (ch == '"') quoted = false;
        else fields.back() += ch;
      } else if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        fields.emplace_back();
      } else if (ch != '\r') {
        fields.back() += ch;
      }
    }
    if (quoted) throw Error(ErrorCode::SchemaMismatch, "unterminated quote in feature header");
    f.features.feature_names.assign(fields.begin() + 1, fields.end());
  }
  const std::size_t d = f.features.feature_names.size();
  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    ++row;
    const char* cur = line.c_str();
    char* end = nullptr;
    const long label = std::strtol(cur, &end, 10);
    if (end == cur || label < 0) throw Error(ErrorCode::SchemaMismatch, "bad label on data row " + std::to_string(row));
    f.labels.push_back(static_cast<int>(label));
    cur = end;
    for (std::size_t j = 0; j < d; ++j) {
      if (*cur != ',') throw Error(ErrorCode::ShapeMismatch, "row " + std::to_string(row) + " has too few columns");
      values.push_back(std::strtod(cur + 1, &end));
      if (end == cur + 1) throw Error(ErrorCode::SchemaMismatch, "non-numeric value on row " + std::to_string(row));
      cur = end;
    }
    if (*cur != '\0' && *cur != '\r') throw Error(ErrorCode::ShapeMismatch, "row " + std::to_string(row) + " has too many columns");
  }
  f.features.data = Matrix(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(d));
  std::copy(values.begin(), values.end(), f.features.data.data());
  if (f.class_names.empty()) {
    const int k = f.labels.empty() ? 0 : *std::max_element(f.labels.begin(), f.labels.end()) + 1;
    for (int c = 0; c < k; ++c) f.class_names.push_back(std::to_string(c));
  }
  for (int l : f.labels) {
    if (static_cast<std::size_t>(l) >= f.class_names.size()) throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(l));
  }
  return f;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

int run(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const Error& e) {
    std::fprintf(stderr, "wlclass: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "wlclass: error: %s\n", e.what());
    return 2;
  }
}

int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace wlc::cli
