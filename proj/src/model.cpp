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


#include "wlc/model.hpp"

#include <bit>
#include <cstring>

#include "wlc/error.hpp"
#include "wlc/zip.hpp"

namespace wlc {
namespace {

constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void tag(const char (&t)[5]) { out_.insert(out_.end(), t, t + 4); }
  void matrix(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
  }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint64_t uint(unsigned width) {
    need(width);
    std::uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += width;
    return v;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(uint(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  std::uint64_t u64() { return uint(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::span<const std::uint8_t> take(std::uint64_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  /// Element count that must fit in the remaining bytes at `unit` bytes each.
  std::size_t count(std::size_t unit) {
    const auto n = u64();
    if (unit != 0 && n > (in_.size() - pos_) / unit) throw Error(ErrorCode::CorruptModel, "count exceeds remaining bytes");
    return static_cast<std::size_t>(n);
  }
  Matrix matrix() {
    const auto rows = u64();
    const auto cols = u64();
    if (cols != 0 && rows > (in_.size() - pos_) / 8 / cols) throw Error(ErrorCode::CorruptModel, "matrix exceeds remaining bytes");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
    return m;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > in_.size() - pos_) throw Error(ErrorCode::CorruptModel, "truncated model file");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void check_child(int child, std::size_t count) {
  if (child <= 0 || static_cast<std::size_t>(child) >= count) throw Error(ErrorCode::CorruptModel, "tree child index out of range");
}

void write_forest(Writer& w, const ForestModel& m) {
  w.u64(m.n_trees);
  w.u64(m.seed);
  w.i32(m.feature_count);
  w.i32(m.class_count);
  w.u64(m.trees.size());
  for (const auto& t : m.trees) {
    w.u64(t.nodes().size());
    for (const auto& n : t.nodes()) {
      w.i32(n.feature);
      if (n.is_leaf()) {
        w.u64(n.histogram.size());
        for (auto c : n.histogram) w.u32(c);
      } else {
        w.f64(n.threshold);
        w.i32(n.left);
        w.i32(n.right);
      }
    }
  }
}

ForestModel read_forest(Reader& r) {
  ForestModel m;
  m.n_trees = static_cast<std::size_t>(r.u64());
  m.seed = r.u64();
  m.feature_count = r.i32();
  m.class_count = r.i32();
  if (m.feature_count < 0 || m.class_count < 1) throw Error(ErrorCode::CorruptModel, "bad forest dimensions");
  const auto trees = r.count(8);
  if (trees != m.n_trees) throw Error(ErrorCode::CorruptModel, "tree count mismatch");
  for (std::size_t t = 0; t < trees; ++t) {
    const auto count = r.count(4);
    if (count == 0) throw Error(ErrorCode::CorruptModel, "empty tree");
    std::vector<TreeNode> nodes(count);
    for (auto& n : nodes) {
      n.feature = r.i32();
      if (n.feature < 0) {
        n.feature = -1;
        const auto k = r.count(4);
        if (k != static_cast<std::size_t>(m.class_count)) throw Error(ErrorCode::CorruptModel, "histogram width mismatch");
        n.histogram.resize(k);
        for (auto& c : n.histogram) c = r.u32();
      } else {
        if (n.feature >= m.feature_count) throw Error(ErrorCode::CorruptModel, "split feature out of range");
        n.threshold = r.f64();
        n.left = r.i32();
        n.right = r.i32();
        check_child(n.left, count);
        check_child(n.right, count);
      }
    }
    m.trees.emplace_back(std::move(nodes), m.feature_count, m.class_count);
  }
  return m;
}

void write_svm(Writer& w, const SvmEnsemble& m) {
  w.i32(m.class_count);
  w.i32(m.feature_count);
  w.u64(m.machines.size());
  for (const auto& s : m.machines) {
    w.u8(s.kernel.kind == KernelKind::Linear ? 0 : 1);
    w.f64(s.kernel.gamma);
    w.f64(s.C);
    w.f64(s.bias);
    w.f64(s.dual_objective);
    w.u64(s.iterations);
    w.u8(s.converged ? 1 : 0);
    w.u64(s.alphas.size());
    for (double a : s.alphas) w.f64(a);
    w.u64(s.support_indices.size());
    for (auto i : s.support_indices) w.u64(i);
    for (double c : s.coefficients) w.f64(c);
    w.matrix(s.support_vectors);
  }
}

SvmEnsemble read_svm(Reader& r) {
  SvmEnsemble m;
  m.class_count = r.i32();
  m.feature_count = r.i32();
  const auto count = r.count(8);
  if (m.class_count < 2 || count != static_cast<std::size_t>(m.class_count) || m.feature_count < 0) {
    throw Error(ErrorCode::CorruptModel, "bad SVM dimensions");
  }
  for (std::size_t c = 0; c < count; ++c) {
    SvmBinary s;
    const auto kind = r.u8();
    if (kind > 1) throw Error(ErrorCode::CorruptModel, "unknown kernel");
    s.kernel.kind = kind == 0 ? KernelKind::Linear : KernelKind::Rbf;
    s.kernel.gamma = r.f64();
    s.C = r.f64();
    s.bias = r.f64();
    s.dual_objective = r.f64();
    s.iterations = static_cast<std::size_t>(r.u64());
    s.converged = r.u8() != 0;
    s.alphas.resize(r.count(8));
    for (auto& a : s.alphas) a = r.f64();
    s.support_indices.resize(r.count(16));
    for (auto& i : s.support_indices) i = static_cast<std::size_t>(r.u64());
    s.coefficients.resize(s.support_indices.size());
    for (auto& v : s.coefficients) v = r.f64();
    s.support_vectors = r.matrix();
    if (static_cast<std::size_t>(s.support_vectors.rows()) != s.support_indices.size() ||
        (s.support_vectors.rows() > 0 && s.support_vectors.cols() != m.feature_count)) {
      throw Error(ErrorCode::CorruptModel, "support vector shape mismatch");
    }
    m.machines.push_back(std::move(s));
  }
  return m;
}

void write_gbt(Writer& w, const GbtModel& m) {
  w.i32(m.class_count);
  w.i32(m.feature_count);
  w.f64(m.learning_rate);
  w.f64(m.gamma);
  w.f64(m.alpha);
  w.f64(m.lambda);
  w.f64(m.min_child_weight);
  w.u64(m.max_depth);
  w.f64(m.base_score);
  w.u64(m.rounds.size());
  for (const auto& round : m.rounds) {
    for (const auto& tree : round) {
      w.u64(tree.nodes.size());
      for (const auto& n : tree.nodes) {
        w.i32(n.feature);
        w.f64(n.threshold);
        w.i32(n.left);
        w.i32(n.right);
        w.f64(n.weight);
        w.f64(n.gain);
        w.f64(n.sum_grad);
        w.f64(n.sum_hess);
      }
    }
  }
  for (auto c : m.importance.split_count) w.u64(c);
  for (auto g : m.importance.total_gain) w.f64(g);
  w.u64(m.train_loss.size());
  for (auto l : m.train_loss) w.f64(l);
}

GbtModel read_gbt(Reader& r) {
  GbtModel m;
  m.class_count = r.i32();
  m.feature_count = r.i32();
  if (m.class_count < 2 || m.feature_count < 0) throw Error(ErrorCode::CorruptModel, "bad boosted model dimensions");
  m.learning_rate = r.f64();
  m.gamma = r.f64();
  m.alpha = r.f64();
  m.lambda = r.f64();
  m.min_child_weight = r.f64();
  m.max_depth = static_cast<std::size_t>(r.u64());
  m.base_score = r.f64();
  const auto rounds = r.count(8 * static_cast<std::size_t>(m.class_count));
  for (std::size_t i = 0; i < rounds; ++i) {
    std::vector<RegressionTree> trees(static_cast<std::size_t>(m.class_count));
    for (auto& tree : trees) {
      const auto count = r.count(52);
      if (count == 0) throw Error(ErrorCode::CorruptModel, "empty regression tree");
      tree.nodes.resize(count);
      for (auto& n : tree.nodes) {
        n.feature = r.i32();
        n.threshold = r.f64();
        n.left = r.i32();
        n.right = r.i32();
        n.weight = r.f64();
        n.gain = r.f64();
        n.sum_grad = r.f64();
        n.sum_hess = r.f64();
        if (n.feature >= m.feature_count) throw Error(ErrorCode::CorruptModel, "split feature out of range");
        if (n.feature >= 0) {
          check_child(n.left, count);
          check_child(n.right, count);
        } else {
          n.feature = -1;
        }
      }
    }
    m.rounds.push_back(std::move(trees));
  }
  m.importance.split_count.resize(static_cast<std::size_t>(m.feature_count));
  for (auto& c : m.importance.split_count) c = static_cast<std::size_t>(r.u64());
  m.importance.total_gain.resize(static_cast<std::size_t>(m.feature_count));
  for (auto& g : m.importance.total_gain) g = r.f64();
  m.train_loss.resize(r.count(8));
  for (auto& l : m.train_loss) l = r.f64();
  return m;
}

}  // namespace

std::string family_of(const Model& model) {
  struct {
    std::string operator()(const ForestModel&) const { return "rf"; }
    std::string operator()(const SvmEnsemble&) const { return "svm"; }
    std::string operator()(const GbtModel&) const { return "gbt"; }
  } visitor;
  return std::visit(visitor, model);
}

int feature_count_of(const Model& model) {
  return std::visit([](const auto& m) { return m.feature_count; }, model);
}

int class_count_of(const Model& model) {
  return std::visit([](const auto& m) { return m.class_count; }, model);
}

std::vector<int> predict(const Model& model, const Matrix& x) {
  if (x.rows() > 0 && x.cols() != feature_count_of(model)) {
    throw Error(ErrorCode::ShapeMismatch, "model expects " + std::to_string(feature_count_of(model)) + " features, got " +
                                              std::to_string(x.cols()));
  }
  return std::visit([&](const auto& m) { return predict(m, x); }, model);
}

std::vector<std::uint8_t> serialize_model(const ModelFile& file) {
  Writer body;
  const char* tag = "FRST";
  if (const auto* f = std::get_if<ForestModel>(&file.model)) {
    write_forest(body, *f);
  } else if (const auto* s = std::get_if<SvmEnsemble>(&file.model)) {
    tag = "SVME";
    write_svm(body, *s);
  } else {
    tag = "GBTM";
    write_gbt(body, std::get<GbtModel>(file.model));
  }
  const std::string prov = file.provenance.is_null() ? "{}" : file.provenance.dump();

  Writer w;
  w.tag("WLC1");
  w.u32(kFormatVersion);
  w.u32(2);
  w.tag("PROV");
  w.u64(prov.size());
  w.bytes({reinterpret_cast<const std::uint8_t*>(prov.data()), prov.size()});
  w.data().insert(w.data().end(), tag, tag + 4);
  w.u64(body.data().size());
  w.bytes(body.data());
  return std::move(w.data());
}

ModelFile deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(4);
  if (std::memcmp(magic.data(), "WLC1", 4) != 0) throw Error(ErrorCode::CorruptModel, "missing WLC1 magic");
  const auto version = r.u32();
  if (version != kFormatVersion) throw Error(ErrorCode::CorruptModel, "unsupported model format version " + std::to_string(version));
  const auto sections = r.u32();
  ModelFile file;
  bool have_model = false;
  for (std::uint32_t s = 0; s < sections; ++s) {
    const auto tag_bytes = r.take(4);
    const std::string tag(reinterpret_cast<const char*>(tag_bytes.data()), 4);
    const auto length = r.u64();
    Reader section(r.take(length));
    if (tag == "PROV") {
      const auto text = section.take(length);
      file.provenance = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
      if (file.provenance.is_discarded()) throw Error(ErrorCode::CorruptModel, "provenance is not valid JSON");
      continue;
    }
    if (have_model) throw Error(ErrorCode::CorruptModel, "more than one model section");
    if (tag == "FRST") file.model = read_forest(section);
    else if (tag == "SVME") file.model = read_svm(section);
    else if (tag == "GBTM") file.model = read_gbt(section);
    else continue;  // unknown sections are skipped
    if (!section.done()) throw Error(ErrorCode::CorruptModel, "trailing bytes in " + tag + " section");
    have_model = true;
  }
  if (!have_model) throw Error(ErrorCode::CorruptModel, "no model section");
  if (!r.done()) throw Error(ErrorCode::CorruptModel, "trailing bytes after last section");
  return file;
}

void save_model(const ModelFile& file, const std::filesystem::path& path) { zip::write_file(path, serialize_model(file)); }

ModelFile load_model(const std::filesystem::path& path) { return deserialize_model(zip::read_file(path)); }

}  // namespace wlc
