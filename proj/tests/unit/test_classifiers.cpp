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

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "oracles.hpp"
#include "wlc/forest.hpp"
#include "wlc/gbt.hpp"
#include "wlc/model.hpp"
#include "wlc/svm.hpp"

using namespace wlc;

namespace {

Matrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

oracle::Grid to_grid(const Matrix& m) {
  oracle::Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return g;
}

std::span<const double> row_of(const Matrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

// Gaussian blobs around well separated centres.
void blobs(Rng& rng, int classes, int per_class, double spread, Matrix& x, std::vector<int>& y, Matrix* centres = nullptr) {
  x = Matrix(classes * per_class, 2);
  y.clear();
  if (centres) *centres = Matrix(classes, 2);
  for (int c = 0; c < classes; ++c) {
    const double cx = 6.0 * std::cos(2.0 * M_PI * c / classes);
    const double cy = 6.0 * std::sin(2.0 * M_PI * c / classes);
    if (centres) centres->row(c) << cx, cy;
    for (int i = 0; i < per_class; ++i) {
      x.row(c * per_class + i) << cx + spread * rng.normal(), cy + spread * rng.normal();
      y.push_back(c);
    }
  }
}

double accuracy(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ok += a[i] == b[i];
  return static_cast<double>(ok) / static_cast<double>(a.size());
}

oracle::Grid kernel_matrix(const Matrix& x, const std::vector<int>& y, const Kernel& k) {
  const auto n = static_cast<std::size_t>(x.rows());
  oracle::Grid q(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      if (k.kind == KernelKind::Linear) {
        for (Eigen::Index f = 0; f < x.cols(); ++f) v += x(static_cast<Eigen::Index>(i), f) * x(static_cast<Eigen::Index>(j), f);
      } else {
        double d2 = 0.0;
        for (Eigen::Index f = 0; f < x.cols(); ++f) {
          const double d = x(static_cast<Eigen::Index>(i), f) - x(static_cast<Eigen::Index>(j), f);
          d2 += d * d;
        }
        v = std::exp(-k.gamma * d2);
      }
      q[i][j] = y[i] * y[j] * v;
    }
  }
  return q;
}

}  // namespace

// ---- decision trees ----

TEST_CASE("tree on a single class is one leaf") {
  Rng rng(1);
  const Matrix x = testing::random_matrix(rng, 10, 3);
  const std::vector<int> y(10, 2);
  const auto t = train_tree(x, y, 3, TreeParams{}, rng);
  REQUIRE(t.nodes().size() == 1);
  CHECK(t.nodes()[0].is_leaf());
  CHECK(t.nodes()[0].histogram == std::vector<std::uint32_t>{0, 0, 10});
}

TEST_CASE("one-dimensional split at the midpoint") {
  Rng rng(1);
  const auto t = train_tree(column({1, 2, 3, 4}), std::vector<int>{0, 0, 1, 1}, 2, TreeParams{}, rng);
  REQUIRE(t.nodes().size() == 3);
  CHECK(t.nodes()[0].feature == 0);
  CHECK(t.nodes()[0].threshold == 2.5);
}

TEST_CASE("XOR is fit exactly at depth two") {
  Matrix x(4, 2);
  x << 0, 0, 0, 1, 1, 0, 1, 1;
  const std::vector<int> y{0, 1, 1, 0};
  Rng rng(2);
  const auto t = train_tree(x, y, 2, TreeParams{}, rng);
  CHECK(t.depth() == 2);
  CHECK(t.predict(x) == y);
}

TEST_CASE("root split matches an exhaustive Gini scan") {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const auto n = static_cast<Eigen::Index>(6 + rng.below(20));
    Matrix x(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < 3; ++j) x(i, j) = static_cast<double>(rng.below(6));
    std::vector<int> y;
    for (Eigen::Index i = 0; i < n; ++i) y.push_back(static_cast<int>(rng.below(3)));
    const auto t = train_tree(x, y, 3, TreeParams{0, 1, 0}, rng);
    const double want = oracle::best_gini_decrease(to_grid(x), y);
    const auto& root = t.nodes()[0];
    if (root.is_leaf()) {
      CHECK(want <= 1e-12);
      continue;
    }
    std::map<int, double> all, l, r;
    double nl = 0, nr = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      all[y[static_cast<std::size_t>(i)]] += 1;
      if (x(i, root.feature) <= root.threshold) { l[y[static_cast<std::size_t>(i)]] += 1; nl += 1; }
      else { r[y[static_cast<std::size_t>(i)]] += 1; nr += 1; }
    }
    const double nn = static_cast<double>(n);
    const double got = oracle::gini(all, nn) - (nl / nn * oracle::gini(l, nl) + nr / nn * oracle::gini(r, nr));
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("tree routing and leaf counts are consistent") {
  Rng rng(4);
  const Matrix x = testing::random_matrix(rng, 60, 4);
  std::vector<int> y;
  for (int i = 0; i < 60; ++i) y.push_back(x(i, 0) + x(i, 1) > 0 ? 1 : 0);
  const auto t = train_tree(x, y, 2, TreeParams{}, rng);
  // each row: walk the tree checking the <= rule, then count arrivals per leaf
  std::map<const TreeNode*, std::uint32_t> arrivals;
  for (Eigen::Index i = 0; i < 60; ++i) {
    int node = 0;
    while (!t.nodes()[static_cast<std::size_t>(node)].is_leaf()) {
      const auto& nd = t.nodes()[static_cast<std::size_t>(node)];
      CHECK(std::isfinite(nd.threshold));
      node = x(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    ++arrivals[&t.nodes()[static_cast<std::size_t>(node)]];
  }
  for (const auto& [leaf, count] : arrivals) {
    std::uint32_t total = 0;
    for (auto h : leaf->histogram) total += h;
    CHECK(total == count);
  }
  CHECK(t.predict(x) == y);
}

TEST_CASE("tree depth and leaf size limits") {
  Rng rng(5);
  const Matrix x = testing::random_matrix(rng, 80, 3);
  std::vector<int> y;
  for (int i = 0; i < 80; ++i) y.push_back(static_cast<int>(rng.below(2)));
  CHECK(train_tree(x, y, 2, TreeParams{2, 1, 0}, rng).depth() <= 2);
  const auto t = train_tree(x, y, 2, TreeParams{0, 10, 0}, rng);
  for (const auto& n : t.nodes()) {
    if (!n.is_leaf()) continue;
    std::uint32_t total = 0;
    for (auto h : n.histogram) total += h;
    CHECK(total >= 10);
  }
  CHECK_ERROR_CODE(train_tree(Matrix(0, 3), std::vector<int>{}, 2, TreeParams{}, rng), ErrorCode::EmptyInput);
}

// ---- forests ----

TEST_CASE("forest with one tree on separable data") {
  Rng rng(6);
  Matrix x;
  std::vector<int> y;
  blobs(rng, 3, 20, 0.3, x, y);
  ForestParams p;
  p.n_trees = 1;
  p.seed = 3;
  const auto f = train_forest(x, y, 3, p);
  REQUIRE(f.trees.size() == 1);
  CHECK(predict(f, x) == f.trees[0].predict(x));
  CHECK(accuracy(predict(f, x), y) >= 0.9);
}

TEST_CASE("forest determinism across runs and threads") {
  Rng rng(7);
  Matrix x;
  std::vector<int> y;
  blobs(rng, 4, 25, 2.5, x, y);
  ForestParams p;
  p.n_trees = 30;
  p.seed = 11;
  p.threads = 1;
  const auto a = train_forest(x, y, 4, p);
  p.threads = 4;
  const auto b = train_forest(x, y, 4, p);
  CHECK(a == b);
  CHECK(serialize_model({a, {}}) == serialize_model({b, {}}));
  CHECK(a.trees.size() == 30);
  for (const auto& t : a.trees)
    for (const auto& n : t.nodes()) CHECK(n.feature < a.feature_count);
  p.seed = 12;
  CHECK_FALSE(train_forest(x, y, 4, p) == a);
}

TEST_CASE("forest vote matches an independent recount") {
  Rng rng(8);
  Matrix x;
  std::vector<int> y;
  blobs(rng, 3, 15, 3.0, x, y);
  ForestParams p;
  p.n_trees = 25;
  p.seed = 5;
  const auto f = train_forest(x, y, 3, p);
  Matrix probe = testing::random_matrix(rng, 40, 2) * 5.0;
  const auto got = predict(f, probe);
  const auto votes = forest_votes(f, probe);
  for (Eigen::Index i = 0; i < probe.rows(); ++i) {
    std::vector<int> ballots;
    for (const auto& t : f.trees) ballots.push_back(t.predict_row(row_of(probe, i)));
    CHECK(got[static_cast<std::size_t>(i)] == oracle::vote(ballots, 3));
    int total = 0;
    for (int v : votes[static_cast<std::size_t>(i)]) total += v;
    CHECK(total == 25);
  }
  CHECK(predict(f, Matrix(0, 2)).empty());
  CHECK_ERROR_CODE(predict(Model{f}, Matrix::Zero(2, 3)), ErrorCode::ShapeMismatch);
}

// ---- SVM ----

TEST_CASE("symmetric pair gives a boundary at zero and margin two") {
  const auto m = train_svm_binary(column({-1, 1}), std::vector<int>{-1, 1}, 1000.0, Kernel::linear(), {1e-9});
  const std::array<double, 1> zero{0.0}, plus{1.0}, minus{-1.0};
  CHECK(m.decision(zero) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(m.decision(plus) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(m.decision(minus) == doctest::Approx(-1.0).epsilon(1e-9));
  // |w| = sum_i alpha_i y_i x_i
  double w = 0.0;
  for (std::size_t i = 0; i < m.support_indices.size(); ++i) w += m.coefficients[i] * m.support_vectors(static_cast<Eigen::Index>(i), 0);
  CHECK(2.0 / std::abs(w) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("four-point problem reaches the QP optimum") {
  Matrix x(4, 2);
  x << 0, 0, 1, 0.5, 3, 3, 4, 2;
  const std::vector<int> y{-1, -1, 1, 1};
  for (double c : {0.1, 1.0, 10.0}) {
    for (const auto& k : {Kernel::linear(), Kernel::rbf(0.5)}) {
      const auto m = train_svm_binary(x, y, c, k, {1e-8});
      CHECK(m.converged);
      CHECK(m.dual_objective == doctest::Approx(oracle::svm_dual_optimum(kernel_matrix(x, y, k), y, c)).epsilon(1e-6));
    }
  }
}

TEST_CASE("SMO iterates stay feasible") {
  Rng rng(9);
  const Matrix x = testing::random_matrix(rng, 30, 3);
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) y.push_back(x(i, 0) + 0.5 * rng.normal() > 0 ? 1 : -1);
  SmoOptions opts;
  opts.tolerance = 1e-6;
  std::size_t calls = 0;
  double worst_box = 0.0, worst_sum = 0.0;
  const double c = 1.0;
  opts.on_iteration = [&](std::span<const double> a) {
    ++calls;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      worst_box = std::max({worst_box, -a[i], a[i] - c});
      s += a[i] * y[i];
    }
    worst_sum = std::max(worst_sum, std::abs(s));
  };
  const auto m = train_svm_binary(x, y, c, Kernel::rbf(0.3), opts);
  CHECK(calls == m.iterations);
  CHECK(worst_box <= 0.0);
  CHECK(worst_sum <= 1e-10);
}

TEST_CASE("SMO reports an exhausted iteration budget") {
  Rng rng(10);
  const Matrix x = testing::random_matrix(rng, 40, 2);
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) y.push_back(rng.below(2) ? 1 : -1);
  SmoOptions opts;
  opts.max_iterations = 2;
  const auto m = train_svm_binary(x, y, 10.0, Kernel::rbf(1.0), opts);
  CHECK_FALSE(m.converged);
  CHECK(m.iterations == 2);
  CHECK_ERROR_CODE(train_svm_binary(x, std::vector<int>(40, 1), 1.0, Kernel::linear()), ErrorCode::ClassAbsent);
}

TEST_CASE("one-vs-rest with two classes agrees with the binary machine") {
  Rng rng(11);
  Matrix x;
  std::vector<int> y;
  blobs(rng, 2, 20, 2.0, x, y);
  SvmParams p;
  p.kernel = Kernel::linear();
  const auto ens = train_svm_multiclass(x, y, 2, p);
  std::vector<int> sign(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) sign[i] = y[i] == 1 ? 1 : -1;
  const auto bin = train_svm_binary(x, sign, 1.0, Kernel::linear());
  const auto pred = predict(ens, x);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (std::abs(bin.decision(row_of(x, i))) < 1e-6) continue;
    CHECK(pred[static_cast<std::size_t>(i)] == (bin.decision(row_of(x, i)) > 0 ? 1 : 0));
  }
}

TEST_CASE("three blobs are classified like their nearest centroid") {
  Rng rng(12);
  Matrix x, centres;
  std::vector<int> y;
  blobs(rng, 3, 20, 0.7, x, y, &centres);
  const auto ens = train_svm_multiclass(x, y, 3, SvmParams{});
  CHECK(predict(ens, x) == y);
  std::vector<int> nearest;
  for (Eigen::Index c = 0; c < 3; ++c) {
    Eigen::Index best = 0;
    (centres.rowwise() - centres.row(c)).rowwise().squaredNorm().minCoeff(&best);
    nearest.push_back(static_cast<int>(best));
  }
  CHECK(predict(ens, centres) == nearest);

  const Matrix dv = ens.decision_values(x);
  const Matrix shifted = (dv.array() + 17.0).matrix();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index a = 0, b = 0;
    dv.row(i).maxCoeff(&a);
    shifted.row(i).maxCoeff(&b);
    CHECK(a == b);
  }
  CHECK_ERROR_CODE(train_svm_multiclass(x, y, 4, SvmParams{}), ErrorCode::ClassAbsent);
}

// ---- gradient boosting ----

TEST_CASE("soft-threshold leaf weight and gain") {
  CHECK(leaf_weight(-1.0, 1.0, 0.0, 0.0) == 1.0);
  CHECK(leaf_weight(-1.0, 1.0, 0.25, 1.0) == -(-0.75) / 2.0);
  CHECK(leaf_weight(0.2, 3.0, 0.5, 1.0) == 0.0);
  CHECK(split_gain(-1.0, 1.0, 1.0, 1.0, 0.0, 0.0) == 1.0);
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const double g = 4.0 * rng.normal();
    const double h = 0.1 + rng.uniform();
    double prev = std::numeric_limits<double>::infinity();
    for (double a = 0.0; a <= 5.0; a += 0.25) {
      const double w = std::abs(leaf_weight(g, h, a, 1.0));
      CHECK(w <= prev);
      prev = w;
    }
  }
}

TEST_CASE("one boosting round on four points matches hand gradients") {
  const Matrix x = column({1, 2, 3, 4});
  const std::vector<int> y{0, 0, 1, 1};
  GbtParams p;
  p.rounds = 1;
  p.max_depth = 1;
  p.lambda = 0.0;
  p.alpha = 0.0;
  p.min_child_weight = 0.0;
  const auto m = train_gbt(x, y, 2, p);
  // base margin 0: p = 1/2, g = p - onehot = -1/2 or +1/2, h = 2 p (1 - p) = 1/2
  const auto& t0 = m.rounds[0][0].nodes;
  REQUIRE(t0.size() == 3);
  CHECK(t0[0].threshold == 2.5);
  CHECK(t0[0].gain == 1.0);
  CHECK(t0[t0[0].left].sum_grad == -1.0);
  CHECK(t0[t0[0].left].sum_hess == 1.0);
  CHECK(t0[t0[0].left].weight == 1.0);
  CHECK(t0[t0[0].right].weight == -1.0);
  const auto& t1 = m.rounds[0][1].nodes;
  CHECK(t1[t1[0].left].weight == -1.0);
  CHECK(predict(m, x) == y);
}

TEST_CASE("infinite gamma leaves every tree a single leaf") {
  Rng rng(14);
  Matrix x;
  std::vector<int> y;
  blobs(rng, 3, 10, 1.0, x, y);
  GbtParams p;
  p.rounds = 5;
  p.gamma = std::numeric_limits<double>::infinity();
  const auto m = train_gbt(x, y, 3, p);
  for (const auto& round : m.rounds)
    for (const auto& t : round) CHECK(t.nodes.size() == 1);
  const Matrix margins = m.margins(x);
  for (Eigen::Index i = 1; i < x.rows(); ++i) CHECK(margins.row(i) == margins.row(0));
  CHECK(feature_importance_report(m, std::vector<std::string>{"a", "b"}).empty());
}

TEST_CASE("stored splits clear gamma and leaves follow their statistics") {
  Rng rng(15);
  Matrix x;
  std::vector<int> y;
  blobs(rng, 4, 25, 3.0, x, y);
  for (double gamma : {0.0, 0.5, 2.0}) {
    GbtParams p;
    p.rounds = 10;
    p.gamma = gamma;
    p.alpha = 0.3;
    p.lambda = 2.0;
    const auto m = deserialize_model(serialize_model({train_gbt(x, y, 4, p), {}}));
    const auto& g = std::get<GbtModel>(m.model);
    for (const auto& round : g.rounds) {
      for (const auto& t : round) {
        for (const auto& n : t.nodes) {
          if (!n.is_leaf()) CHECK(n.gain > gamma);
          else CHECK(std::abs(n.weight - leaf_weight(n.sum_grad, n.sum_hess, 0.3, 2.0)) <= 1e-10);
        }
      }
    }
  }
}

TEST_CASE("training loss does not increase") {
  Rng rng(16);
  Matrix x;
  std::vector<int> y;
  blobs(rng, 3, 30, 4.0, x, y);
  const auto m = train_gbt(x, y, 3, GbtParams{});
  REQUIRE(m.train_loss.size() == 40);
  CHECK(m.train_loss.front() < std::log(3.0));
  for (std::size_t r = 1; r < m.train_loss.size(); ++r) CHECK(m.train_loss[r] <= m.train_loss[r - 1] + 1e-9);
  CHECK(multiclass_log_loss(m.margins(x), y) == doctest::Approx(m.train_loss.back()).epsilon(1e-12));
}

TEST_CASE("the only informative feature ranks first") {
  Rng rng(17);
  Matrix x = testing::random_matrix(rng, 200, 6);
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) y.push_back(x(i, 3) > 0.3 ? 1 : 0);
  GbtParams p;
  p.rounds = 10;
  p.max_depth = 2;
  const auto m = train_gbt(x, y, 2, p);
  const std::vector<std::string> names{"f0", "f1", "f2", "f3", "f4", "f5"};
  const auto report = feature_importance_report(m, names);
  REQUIRE_FALSE(report.empty());
  CHECK(report.front().feature == 3);
  CHECK(report.front().name == "f3");
  for (std::size_t i = 1; i < report.size(); ++i) {
    CHECK(report[i - 1].split_count >= report[i].split_count);
  }
  CHECK(predict(m, Matrix(0, 6)).empty());
}

TEST_CASE("boosting is independent of the thread count") {
  Rng rng(18);
  Matrix x;
  std::vector<int> y;
  blobs(rng, 3, 20, 3.0, x, y);
  GbtParams p;
  p.rounds = 5;
  p.threads = 1;
  const auto a = train_gbt(x, y, 3, p);
  p.threads = 3;
  CHECK(train_gbt(x, y, 3, p) == a);
}

// ---- model files ----

TEST_CASE("model files round trip and reject damage") {
  Rng rng(19);
  Matrix x;
  std::vector<int> y;
  blobs(rng, 3, 10, 1.0, x, y);
  ForestParams fp;
  fp.n_trees = 3;
  GbtParams gp;
  gp.rounds = 3;
  const std::vector<Model> models{train_forest(x, y, 3, fp), train_svm_multiclass(x, y, 3, SvmParams{}), train_gbt(x, y, 3, gp)};
  for (const auto& model : models) {
    ModelFile file{model, {{"note", "x"}}};
    const auto bytes = serialize_model(file);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "WLC1");
    const auto back = deserialize_model(bytes);
    CHECK(back.model == model);
    CHECK(back.provenance["note"] == "x");
    CHECK(predict(back.model, x) == predict(model, x));

    auto bad = bytes;
    bad[0] = 'X';
    CHECK_ERROR_CODE(deserialize_model(bad), ErrorCode::CorruptModel);
    for (std::size_t cut : {std::size_t{3}, std::size_t{12}, bytes.size() / 2, bytes.size() - 1}) {
      CHECK_ERROR_CODE(deserialize_model(std::span(bytes).first(cut)), ErrorCode::CorruptModel);
    }
    for (int i = 0; i < 300; ++i) {
      auto mutated = bytes;
      mutated[rng.below(mutated.size())] ^= static_cast<std::uint8_t>(1 + rng.below(255));
      try {
        (void)deserialize_model(mutated);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CorruptModel);
      }
    }
  }
}
