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


#include "wlc/model_selection.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "wlc/archive.hpp"
#include "wlc/error.hpp"
#include "wlc/parallel.hpp"
#include "wlc/rng.hpp"

namespace wlc {
namespace {

struct Reference {
  std::string_view row;
  std::array<double, 7> values;
};

// Start, Middle, R1..R5
constexpr std::array<Reference, 4> kTable = {{
    {"SVM PCA", {82.13, 80.84, 76.62, 75.32, 76.78, 75.29, 75.46}},
    {"SVM Cov.", {67.24, 73.21, 71.66, 71.32, 71.05, 70.55, 70.61}},
    {"RF PCA", {83.17, 89.76, 85.58, 86.69, 86.51, 86.31, 86.42}},
    {"RF Cov.", {81.80, 93.02, 90.05, 90.64, 90.01, 90.73, 90.90}},
}};
constexpr double kGbtRandom1 = 88.47;

std::string format_double(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

double accuracy_percent(std::span<const int> predicted, std::span<const int> truth) {
  if (truth.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i];
  return 100.0 * static_cast<double>(correct) / static_cast<double>(truth.size());
}

}  // namespace

std::string to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::Rf: return "rf";
    case ModelFamily::Svm: return "svm";
    case ModelFamily::Gbt: return "gbt";
  }
  return "?";
}

ModelFamily parse_family(std::string_view text) {
  if (text == "rf") return ModelFamily::Rf;
  if (text == "svm") return ModelFamily::Svm;
  if (text == "gbt") return ModelFamily::Gbt;
  throw Error(ErrorCode::Usage, "unknown model family '" + std::string(text) + "'");
}

void ModelConfig::set(const std::string& name, double value) {
  auto count = [&](double v) {
    if (!(v >= 0.0) || v != std::floor(v)) throw Error(ErrorCode::InvalidArgument, name + " must be a non-negative integer");
    return static_cast<std::size_t>(v);
  };
  switch (family) {
    case ModelFamily::Rf:
      if (name == "n_trees") forest.n_trees = count(value);
      else if (name == "max_depth") forest.max_depth = count(value);
      else if (name == "min_leaf") forest.min_leaf = count(value);
      else if (name == "max_features") forest.max_features = count(value);
      else if (name == "seed") forest.seed = count(value);
      else break;
      return;
    case ModelFamily::Svm:
      if (name == "C") svm.C = value;
      else if (name == "gamma") svm.kernel.gamma = value;
      else if (name == "linear") svm.kernel.kind = value != 0.0 ? KernelKind::Linear : KernelKind::Rbf;
      else if (name == "tolerance") svm.smo.tolerance = value;
      else break;
      return;
    case ModelFamily::Gbt:
      if (name == "rounds") gbt.rounds = count(value);
      else if (name == "learning_rate") gbt.learning_rate = value;
      else if (name == "max_depth") gbt.max_depth = count(value);
      else if (name == "gamma") gbt.gamma = value;
      else if (name == "alpha") gbt.alpha = value;
      else if (name == "lambda") gbt.lambda = value;
      else if (name == "min_child_weight") gbt.min_child_weight = value;
      else break;
      return;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown " + to_string(family) + " hyperparameter '" + name + "'");
}

void ModelConfig::set_threads(unsigned threads) {
  forest.threads = threads;
  svm.threads = threads;
  gbt.threads = threads;
}

nlohmann::json ModelConfig::to_json() const {
  nlohmann::json j;
  j["family"] = to_string(family);
  switch (family) {
    case ModelFamily::Rf:
      j["n_trees"] = forest.n_trees;
      j["seed"] = forest.seed;
      j["max_depth"] = forest.max_depth;
      j["min_leaf"] = forest.min_leaf;
      j["max_features"] = forest.max_features;
      break;
    case ModelFamily::Svm:
      j["C"] = svm.C;
      j["kernel"] = svm.kernel.kind == KernelKind::Linear ? "linear" : "rbf";
      j["gamma"] = svm.kernel.gamma;
      j["tolerance"] = svm.smo.tolerance;
      break;
    case ModelFamily::Gbt:
      j["rounds"] = gbt.rounds;
      j["learning_rate"] = gbt.learning_rate;
      j["max_depth"] = gbt.max_depth;
      j["gamma"] = std::isinf(gbt.gamma) ? nlohmann::json("inf") : nlohmann::json(gbt.gamma);
      j["alpha"] = gbt.alpha;
      j["lambda"] = gbt.lambda;
      j["min_child_weight"] = gbt.min_child_weight;
      break;
  }
  return j;
}

Model train_model(const ModelConfig& config, const Matrix& x, std::span<const int> y, int class_count) {
  switch (config.family) {
    case ModelFamily::Rf: return train_forest(x, y, class_count, config.forest);
    case ModelFamily::Svm: return train_svm_multiclass(x, y, class_count, config.svm);
    case ModelFamily::Gbt: return train_gbt(x, y, class_count, config.gbt);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model family");
}

std::vector<Fold> kfold_indices(std::size_t n, std::size_t k, std::span<const int> labels, std::uint64_t seed) {
  if (k < 2 || k > n) throw Error(ErrorCode::BadK, "k = " + std::to_string(k) + " for n = " + std::to_string(n));
  if (labels.size() != n) throw Error(ErrorCode::ShapeMismatch, "label count differs from n");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);

  std::vector<std::size_t> fold_of(n);
  std::size_t cursor = 0;
  for (auto& [label, members] : by_class) {
    if (members.size() < k) {
      spdlog::warn("class {} has {} members for {} folds; some folds will lack it", label, members.size(), k);
    }
    Rng rng(derive_seed(seed, "kfold", static_cast<std::uint64_t>(label)));
    rng.shuffle(std::span<std::size_t>(members));
    for (auto i : members) fold_of[i] = cursor++ % k;
  }
  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < k; ++f) (f == fold_of[i] ? folds[f].validation : folds[f].train).push_back(i);
  }
  return folds;
}

std::string GridCell::label() const {
  std::string s = reduction.label();
  for (const auto& [name, value] : params) s += " " + name + "=" + format_double(value);
  return s;
}

std::vector<GridCell> expand_grid(const GridSpec& spec) {
  if (spec.reductions.empty()) throw Error(ErrorCode::InvalidArgument, "grid has no reductions");
  std::vector<GridCell> cells;
  for (const auto& reduction : spec.reductions) {
    std::vector<std::vector<std::pair<std::string, double>>> combos{{}};
    for (const auto& [name, values] : spec.hyperparameters) {
      if (values.empty()) throw Error(ErrorCode::InvalidArgument, "grid list '" + name + "' is empty");
      std::vector<std::vector<std::pair<std::string, double>>> next;
      for (const auto& partial : combos) {
        for (double v : values) {
          auto c = partial;
          c.emplace_back(name, v);
          next.push_back(std::move(c));
        }
      }
      combos = std::move(next);
    }
    for (auto& c : combos) cells.push_back({reduction, std::move(c)});
  }
  return cells;
}

CvResult grid_search(const Tensor3& x, std::span<const int> y, int class_count, const GridSpec& spec) {
  if (y.size() != x.trials()) throw Error(ErrorCode::ShapeMismatch, "label count differs from trial count");
  const auto cells = expand_grid(spec);
  const auto folds = kfold_indices(x.trials(), spec.folds, y, spec.seed);
  const std::size_t nr = spec.reductions.size();
  const std::size_t per_reduction = cells.size() / nr;

  // accuracy[fold][cell]
  std::vector<std::vector<double>> accuracy(folds.size(), std::vector<double>(cells.size(), 0.0));
  std::vector<FoldProvenance> provenance(folds.size() * nr);
  const unsigned outer = resolve_threads(spec.threads);
  const unsigned inner = outer > 1 ? 1 : spec.threads;

  parallel_for(folds.size() * nr, outer, [&](std::size_t task) {
    const std::size_t f = task / nr;
    const std::size_t r = task % nr;
    const auto& fold = folds[f];
    const auto train_x = x.select(fold.train);
    const auto val_x = x.select(fold.validation);
    const auto train_y = select_items<int>(y, fold.train);
    const auto val_y = select_items<int>(y, fold.validation);
    try {
      const FeaturePipeline pipeline(train_x, spec.reductions[r], inner);
      const auto train_f = pipeline.transform(train_x);
      const auto val_f = pipeline.transform(val_x);
      provenance[task] = {f, spec.reductions[r].label(), pipeline.standardizer().id(), train_f.provenance.reduction_id};
      for (std::size_t c = r * per_reduction; c < (r + 1) * per_reduction; ++c) {
        ModelConfig config = spec.base;
        for (const auto& [name, value] : cells[c].params) config.set(name, value);
        config.set_threads(inner);
        const auto model = train_model(config, train_f.data, train_y, class_count);
        accuracy[f][c] = accuracy_percent(predict(model, val_f.data), val_y);
      }
    } catch (const Error& e) {
      throw Error(e.code(), e.detail() + " (grid reduction " + spec.reductions[r].label() + ", fold " +
                                std::to_string(f) + ")");
    }
  });

  CvResult result;
  result.fold_provenance = std::move(provenance);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellResult cr;
    cr.cell = cells[c];
    for (std::size_t f = 0; f < folds.size(); ++f) cr.fold_accuracy.push_back(accuracy[f][c]);
    const double mean = std::accumulate(cr.fold_accuracy.begin(), cr.fold_accuracy.end(), 0.0) / static_cast<double>(folds.size());
    double var = 0.0;
    for (double a : cr.fold_accuracy) var += (a - mean) * (a - mean);
    cr.mean_accuracy = mean;
    cr.std_accuracy = std::sqrt(var / static_cast<double>(folds.size()));
    result.cells.push_back(std::move(cr));
  }
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    if (result.cells[c].mean_accuracy > result.cells[result.best_cell].mean_accuracy) result.best_cell = c;
  }

  const auto& best = cells[result.best_cell];
  result.refit_config = spec.base;
  for (const auto& [name, value] : best.params) result.refit_config.set(name, value);
  result.refit_config.set_threads(spec.threads);
  result.pipeline.emplace(x, best.reduction, spec.threads);
  const auto features = result.pipeline->transform(x);
  result.refit_model = train_model(result.refit_config, features.data, y, class_count);
  return result;
}

nlohmann::json CvResult::to_json() const {
  nlohmann::json j;
  j["best_cell"] = best_cell;
  j["best"] = cells.empty() ? "" : cells[best_cell].cell.label();
  auto& arr = j["cells"] = nlohmann::json::array();
  for (const auto& c : cells) {
    arr.push_back({{"cell", c.cell.label()}, {"mean_accuracy", c.mean_accuracy}, {"std_accuracy", c.std_accuracy},
                   {"fold_accuracy", c.fold_accuracy}});
  }
  auto& prov = j["fold_provenance"] = nlohmann::json::array();
  for (const auto& p : fold_provenance) {
    prov.push_back({{"fold", p.fold}, {"reduction", p.reduction}, {"standardizer", p.standardizer_id}, {"reduction_id", p.reduction_id}});
  }
  j["refit"] = refit_config.to_json();
  return j;
}

EvalReport evaluate_predictions(std::span<const int> predicted, std::span<const int> truth,
                                std::span<const std::string> class_names) {
  if (predicted.size() != truth.size()) throw Error(ErrorCode::ShapeMismatch, "prediction and label counts differ");
  const std::size_t k = class_names.size();
  EvalReport r;
  r.total = truth.size();
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || static_cast<std::size_t>(t) >= k || p < 0 || static_cast<std::size_t>(p) >= k) {
      throw Error(ErrorCode::LabelOutOfRange, "label outside the class table");
    }
    ++r.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  for (std::size_t c = 0; c < k; ++c) r.correct += r.confusion[c][c];
  r.accuracy = r.total == 0 ? 0.0 : 100.0 * static_cast<double>(r.correct) / static_cast<double>(r.total);
  for (std::size_t c = 0; c < k; ++c) {
    ClassMetrics m;
    m.name = class_names[c];
    std::size_t predicted_c = 0;
    for (std::size_t t = 0; t < k; ++t) {
      m.support += r.confusion[c][t];
      predicted_c += r.confusion[t][c];
    }
    m.precision = predicted_c == 0 ? 0.0 : static_cast<double>(r.confusion[c][c]) / static_cast<double>(predicted_c);
    m.recall = m.support == 0 ? 0.0 : static_cast<double>(r.confusion[c][c]) / static_cast<double>(m.support);
    r.per_class.push_back(std::move(m));
  }
  return r;
}

EvalReport evaluate(const Model& model, const Matrix& x_test, std::span<const int> y_test,
                    std::span<const std::string> class_names) {
  if (static_cast<std::size_t>(x_test.rows()) != y_test.size()) throw Error(ErrorCode::ShapeMismatch, "X rows and y length differ");
  return evaluate_predictions(predict(model, x_test), y_test, class_names);
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["record"] = "eval";
  j["accuracy"] = accuracy;
  j["correct"] = correct;
  j["total"] = total;
  j["confusion"] = confusion;
  auto& pc = j["per_class"] = nlohmann::json::array();
  for (const auto& m : per_class) {
    pc.push_back({{"name", m.name}, {"support", m.support}, {"precision", m.precision}, {"recall", m.recall}});
  }
  j["dataset_id"] = dataset_id;
  j["model_provenance"] = model_provenance;
  return j;
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  out << "accuracy " << fixed2(accuracy) << "% (" << correct << "/" << total << ")\n";
  std::size_t width = 5;
  for (const auto& m : per_class) width = std::max(width, m.name.size());
  char line[256];
  std::snprintf(line, sizeof line, "%-*s %8s %9s %7s\n", static_cast<int>(width), "class", "support", "precision", "recall");
  out << line;
  for (const auto& m : per_class) {
    std::snprintf(line, sizeof line, "%-*s %8zu %9.4f %7.4f\n", static_cast<int>(width), m.name.c_str(), m.support, m.precision,
                  m.recall);
    out << line;
  }
  return out.str();
}

std::optional<double> reference_accuracy(std::string_view row, std::string_view dataset) {
  const auto col = std::find(kDatasetNames.begin(), kDatasetNames.end(), dataset);
  if (col == kDatasetNames.end()) return std::nullopt;
  if (row == "GBT Cov.") {
    if (dataset == "60-random-1") return kGbtRandom1;
    return std::nullopt;
  }
  for (const auto& r : kTable) {
    if (r.row == row) return r.values[static_cast<std::size_t>(col - kDatasetNames.begin())];
  }
  return std::nullopt;
}

const TableCell* ResultsTable::find(std::string_view row, std::string_view dataset) const {
  for (const auto& c : cells) {
    if (c.row == row && c.dataset == dataset) return &c;
  }
  return nullptr;
}

nlohmann::json ResultsTable::to_json() const {
  nlohmann::json j;
  j["rows"] = rows;
  j["datasets"] = datasets;
  auto& arr = j["cells"] = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json cell;
    cell["record"] = "table_cell";
    cell["row"] = c.row;
    cell["dataset"] = c.dataset;
    cell["accuracy"] = c.accuracy ? nlohmann::json(*c.accuracy) : nlohmann::json(nullptr);
    cell["reference"] = c.reference ? nlohmann::json(*c.reference) : nlohmann::json(nullptr);
    cell["delta"] = c.accuracy && c.reference ? nlohmann::json(*c.accuracy - *c.reference) : nlohmann::json(nullptr);
    cell["best_cell"] = c.best_cell;
    cell["note"] = c.note;
    cell["predictions"] = c.predictions;
    cell["truth"] = c.truth;
    arr.push_back(std::move(cell));
  }
  return j;
}

std::string ResultsTable::to_text() const {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-10s", "Model");
  out << buf;
  for (const auto& d : datasets) {
    const auto it = std::find(kDatasetNames.begin(), kDatasetNames.end(), d);
    const std::string col = it == kDatasetNames.end() ? d : std::string(kDatasetColumns[static_cast<std::size_t>(it - kDatasetNames.begin())]);
    std::snprintf(buf, sizeof buf, " %16s", col.c_str());
    out << buf;
  }
  out << "\n";
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%-10s", row.c_str());
    out << buf;
    for (const auto& d : datasets) {
      const auto* c = find(row, d);
      std::string text = "-";
      if (c && c->accuracy) {
        text = fixed2(*c->accuracy);
        if (c->reference) text += " (" + fixed2(*c->reference) + ")";
      }
      std::snprintf(buf, sizeof buf, " %16s", text.c_str());
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

ResultsTable reproduce_table(const std::map<std::string, std::filesystem::path>& manifest, ModelFamily family,
                             const ReproduceOptions& options) {
  ResultsTable table;
  const std::string prefix = family == ModelFamily::Svm ? "SVM" : family == ModelFamily::Rf ? "RF" : "GBT";
  if (family == ModelFamily::Gbt) {
    table.rows = {"GBT Cov."};
    table.datasets = {"60-random-1"};
  } else {
    table.rows = {prefix + " PCA", prefix + " Cov."};
    table.datasets.assign(kDatasetNames.begin(), kDatasetNames.end());
  }

  std::size_t found = 0;
  for (const auto& dataset : table.datasets) {
    const auto entry = manifest.find(dataset);
    const bool present = entry != manifest.end() && std::filesystem::exists(entry->second);
    std::optional<ChallengeDataset> data;
    if (present) {
      data = read_challenge_archive(entry->second);
      ++found;
    }
    for (const auto& row : table.rows) {
      TableCell cell;
      cell.row = row;
      cell.dataset = dataset;
      cell.reference = reference_accuracy(row, dataset);
      if (!data) {
        cell.note = entry == manifest.end() ? "not in manifest" : "archive missing: " + entry->second.string();
        table.cells.push_back(std::move(cell));
        continue;
      }
      GridSpec spec;
      spec.base.family = family;
      spec.seed = options.seed;
      spec.threads = options.threads;
      if (family == ModelFamily::Gbt) {
        spec.base.gbt.rounds = options.gbt_rounds;
        spec.folds = options.folds_gbt;
        spec.hyperparameters = {{"gamma", options.gbt_gamma}, {"alpha", options.gbt_alpha}, {"lambda", options.gbt_lambda}};
      } else {
        spec.folds = options.folds_rf_svm;
        spec.base.forest.seed = derive_seed(options.seed, "reproduce.rf");
        if (family == ModelFamily::Rf) spec.hyperparameters = {{"n_trees", options.rf_trees}};
        else spec.hyperparameters = {{"C", options.svm_C}};
      }
      if (row.ends_with("PCA")) {
        spec.reductions.clear();
        // each fold trains on about (folds - 1) / folds of the split
        const std::size_t fold_rows = data->x_train.trials() * (spec.folds - 1) / spec.folds;
        const std::size_t width = data->x_train.samples() * data->x_train.sensors();
        for (auto k : options.pca_ks) {
          if (k <= fold_rows && k <= width) spec.reductions.push_back({Reduction::Pca, k, {}});
        }
        if (spec.reductions.empty()) {
          cell.note = "no PCA dimension fits the training split";
          table.cells.push_back(std::move(cell));
          continue;
        }
      } else {
        spec.reductions = {ReductionSpec{}};
      }
      const int class_count = static_cast<int>(data->class_count());
      spdlog::info("reproduce {} on {}", row, dataset);
      const auto cv = grid_search(data->x_train, data->y_train, class_count, spec);
      const auto test_features = cv.pipeline->transform(data->x_test);
      cell.predictions = predict(cv.refit_model, test_features.data);
      cell.truth = data->y_test;
      cell.accuracy = accuracy_percent(cell.predictions, cell.truth);
      cell.best_cell = cv.cells[cv.best_cell].cell.label();
      table.cells.push_back(std::move(cell));
    }
  }
  if (found == 0) throw Error(ErrorCode::MissingArchive, "none of the manifest's archives exist");
  return table;
}

}  // namespace wlc
