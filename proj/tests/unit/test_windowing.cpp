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
#include <set>

#include "helpers.hpp"
#include "wlc/taxonomy.hpp"
#include "wlc/windowing.hpp"

using namespace wlc;

namespace {

RawTrial make_trial(const std::string& job, int label, std::size_t n, double tag = 0.0, const std::string& device = "") {
  RawTrial t;
  t.job_id = job;
  t.device = device;
  t.label = label;
  t.series = Matrix(static_cast<Eigen::Index>(n), 7);
  for (std::size_t s = 0; s < n; ++s) {
    t.series(static_cast<Eigen::Index>(s), 0) = tag;
    for (Eigen::Index j = 1; j < 7; ++j) t.series(static_cast<Eigen::Index>(s), j) = static_cast<double>(s) + 0.01 * j;
    t.timestamps.push_back(static_cast<double>(s));
  }
  return t;
}

// Jobs numbered from 0; sensor 0 of every sample holds the job number.
std::vector<RawTrial> corpus(const std::vector<int>& labels, std::size_t jobs_per_class, std::size_t n, std::size_t gpus = 1) {
  std::vector<RawTrial> out;
  int job = 0;
  for (int label : labels) {
    for (std::size_t j = 0; j < jobs_per_class; ++j, ++job) {
      for (std::size_t g = 0; g < gpus; ++g) {
        out.push_back(make_trial("job" + std::to_string(job), label, n + static_cast<std::size_t>(job), job, "n/gpu" + std::to_string(g)));
      }
    }
  }
  return out;
}

std::set<int> jobs_in(const Tensor3& x) {
  std::set<int> out;
  for (std::size_t t = 0; t < x.trials(); ++t) out.insert(static_cast<int>(x.at(t, 0, 0)));
  return out;
}

}  // namespace

TEST_CASE("length filter keeps trials at or above the length in order") {
  std::vector<RawTrial> trials{make_trial("a", 0, 539), make_trial("b", 0, 540), make_trial("c", 0, 541)};
  const auto kept = filter_min_length(trials, 540);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].job_id == "b");
  CHECK(kept[1].job_id == "c");
  CHECK(filter_min_length(std::vector<RawTrial>{}, 540).empty());

  Rng rng(1);
  std::vector<RawTrial> mixed;
  std::size_t expected = 0;
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = 400 + rng.below(300);
    expected += n >= 540;
    mixed.push_back(make_trial("m" + std::to_string(i), 0, n));
  }
  CHECK(filter_min_length(mixed, 540).size() == expected);
}

TEST_CASE("window offsets") {
  for (auto policy : {WindowPolicy::start(), WindowPolicy::middle(), WindowPolicy::random(3)}) {
    CHECK(window_offset(540, "j", policy) == 0);
  }
  CHECK(window_offset(1000, "j", WindowPolicy::middle()) == 230);
  CHECK(window_offset(1001, "j", WindowPolicy::middle()) == 230);
  CHECK(window_offset(1000, "j", WindowPolicy::start()) == 0);
  CHECK_ERROR_CODE(window_offset(539, "j", WindowPolicy::start()), ErrorCode::TooShort);
  CHECK_ERROR_CODE(extract_window(make_trial("short", 0, 10), WindowPolicy::middle()), ErrorCode::TooShort);
}

TEST_CASE("windows are contiguous slices of their parent") {
  const auto parent = make_trial("p", 4, 1234, 9.0);
  for (auto policy : {WindowPolicy::start(), WindowPolicy::middle(), WindowPolicy::random(8)}) {
    const auto w = extract_window(parent, policy);
    REQUIRE(w.data.rows() == 540);
    CHECK(w.label == 4);
    CHECK(w.source_offset + 540 <= parent.n_samples());
    CHECK(w.data == parent.series.middleRows(static_cast<Eigen::Index>(w.source_offset), 540));
  }
}

TEST_CASE("random offsets are reproducible and uniform") {
  const auto policy = WindowPolicy::random(42);
  CHECK(window_offset(1540, "job-x", policy) == window_offset(1540, "job-x", policy));
  std::vector<double> counts(1001, 0.0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto off = window_offset(1540, "job-" + std::to_string(i), policy);
    REQUIRE(off <= 1000);
    counts[off] += 1;
  }
  const double expected = static_cast<double>(draws) / 1001.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // Wilson-Hilferty upper 0.001 quantile for 1000 degrees of freedom
  const double k = 1000.0;
  const double z = 3.090232;
  const double critical = k * std::pow(1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k)), 3.0);
  CHECK(chi2 < critical);
}

TEST_CASE("window kind names") {
  CHECK(parse_window_kind("middle") == WindowKind::Middle);
  CHECK(to_string(WindowKind::Random) == "random");
  CHECK_ERROR_CODE(parse_window_kind("end"), ErrorCode::Usage);
}

TEST_CASE("100 jobs split 80/20 at the job level") {
  const auto trials = corpus({0, 5, 9, 20}, 25, 540);
  const auto d = build_challenge_dataset(trials, WindowPolicy::start(), {0.8, 7, 1});
  CHECK(d.x_train.trials() == 80);
  CHECK(d.x_test.trials() == 20);
  CHECK(d.model_train == std::vector<std::string>{std::string(taxonomy()[0].name), std::string(taxonomy()[5].name),
                                                  std::string(taxonomy()[9].name), std::string(taxonomy()[20].name)});
  std::vector<int> per_class(4, 0);
  for (int y : d.y_test) ++per_class[static_cast<std::size_t>(y)];
  CHECK(per_class == std::vector<int>{5, 5, 5, 5});
}

TEST_CASE("no job lands in both splits") {
  const auto trials = corpus({1, 2, 3}, 9, 600, 3);
  const auto d = build_challenge_dataset(trials, WindowPolicy::middle(), {0.8, 99, 2});
  CHECK(d.x_train.trials() + d.x_test.trials() == trials.size());
  const auto train = jobs_in(d.x_train);
  const auto test = jobs_in(d.x_test);
  for (int j : test) CHECK(train.count(j) == 0);
  CHECK(train.size() + test.size() == 27);
}

TEST_CASE("splits are reproducible and change with the seed") {
  const auto trials = corpus({0, 1}, 20, 560);
  const auto a = build_challenge_dataset(trials, WindowPolicy::random(5), {0.8, 1, 1});
  const auto b = build_challenge_dataset(trials, WindowPolicy::random(5), {0.8, 1, 4});
  CHECK(a == b);
  const auto c = build_challenge_dataset(trials, WindowPolicy::random(5), {0.8, 2, 1});
  CHECK(jobs_in(a.x_test) != jobs_in(c.x_test));
}

TEST_CASE("five random-window seeds give five distinct datasets") {
  const auto trials = corpus({0, 1}, 10, 700);
  std::vector<ChallengeDataset> sets;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) sets.push_back(build_challenge_dataset(trials, WindowPolicy::random(seed), {0.8, 0, 1}));
  for (std::size_t i = 0; i < sets.size(); ++i)
    for (std::size_t j = i + 1; j < sets.size(); ++j) CHECK_FALSE(sets[i] == sets[j]);
}

TEST_CASE("policies change window contents but not dataset sizes") {
  const auto trials = corpus({3, 4, 7}, 6, 800);
  const auto s = build_challenge_dataset(trials, WindowPolicy::start(), {0.8, 3, 1});
  const auto m = build_challenge_dataset(trials, WindowPolicy::middle(), {0.8, 3, 1});
  CHECK(s.x_train.trials() == m.x_train.trials());
  CHECK(s.x_test.trials() == m.x_test.trials());
  CHECK(s.y_train == m.y_train);
  CHECK_FALSE(s.x_train == m.x_train);
}

TEST_CASE("a class with one job cannot be split") {
  auto trials = corpus({0}, 5, 540);
  trials.push_back(make_trial("lonely", 3, 540));
  CHECK_ERROR_CODE(build_challenge_dataset(trials, WindowPolicy::start(), {0.8, 0, 1}), ErrorCode::TooFewTrials);
}
