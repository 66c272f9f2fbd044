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


#include "wlc/synth.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <set>

#include "wlc/error.hpp"
#include "wlc/parallel.hpp"
#include "wlc/rng.hpp"
#include "wlc/taxonomy.hpp"

namespace wlc {
namespace {

constexpr double kSampleRateHz = 9.0;
constexpr std::size_t kMemFree = 2;
constexpr std::size_t kMemUsed = 3;

Matrix cholesky_of(const Matrix& m, const std::string& what) {
  if (m.rows() != m.cols() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw Error(ErrorCode::NotPositiveDefinite, what + " is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, what + " is not positive definite");
  return llt.matrixL();
}

void validate(const SynthCorpusSpec& spec) {
  std::set<std::string> names;
  for (const auto& c : spec.classes) {
    if (!names.insert(c.class_name).second) throw Error(ErrorCode::InvalidArgument, "duplicate class " + c.class_name);
    if (!find_class(c.class_name)) throw Error(ErrorCode::InvalidArgument, "unknown class " + c.class_name);
    const auto d = static_cast<Eigen::Index>(kSensorCount);
    if (c.mean_profile.size() != d || c.noise_scale.size() != d || c.correlation.rows() != d) {
      throw Error(ErrorCode::ShapeMismatch, "class " + c.class_name + " needs 7 sensors");
    }
    if (c.min_length == 0 || c.min_length > c.max_length) {
      throw Error(ErrorCode::InvalidArgument, "class " + c.class_name + " has an empty length range");
    }
    if (c.min_length <= spec.warmup_samples) {
      throw Error(ErrorCode::InvalidArgument, "warm-up is longer than the shortest trial");
    }
  }
  if (!(spec.job_noise >= 0.0)) throw Error(ErrorCode::InvalidArgument, "job noise must be nonnegative");
}

void clip_sample(Eigen::Ref<Eigen::RowVectorXd> row, std::optional<double> memory_total) {
  row[0] = std::clamp(row[0], 0.0, 100.0);
  row[1] = std::clamp(row[1], 0.0, 100.0);
  for (std::size_t j = 2; j < kSensorCount; ++j) row[static_cast<Eigen::Index>(j)] = std::max(0.0, row[static_cast<Eigen::Index>(j)]);
  if (memory_total) row[kMemUsed] = std::min(row[kMemUsed], *memory_total);
}

}  // namespace

Vector default_mean_profile() {
  Vector v(kSensorCount);
  v << 60.0, 40.0, 16384.0, 16384.0, 60.0, 55.0, 180.0;
  return v;
}

Vector default_noise_scale() {
  Vector v(kSensorCount);
  v << 12.0, 10.0, 2500.0, 2500.0, 5.0, 4.0, 35.0;
  return v;
}

Matrix random_correlation(std::span<const double> eigenvalues, std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(eigenvalues.size());
  Rng rng(seed);
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  Eigen::VectorXd lambda(d);
  for (Eigen::Index i = 0; i < d; ++i) lambda[i] = eigenvalues[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd c = q * lambda.asDiagonal() * q.transpose();
  const Eigen::VectorXd inv = c.diagonal().cwiseSqrt().cwiseInverse();
  Matrix corr = inv.asDiagonal() * c * inv.asDiagonal();
  corr = 0.5 * (corr + corr.transpose()).eval();
  corr.diagonal().setOnes();
  return corr;
}

std::vector<RawTrial> generate_corpus(const SynthCorpusSpec& spec) {
  validate(spec);
  struct Job {
    std::size_t cls;
    std::size_t index;
  };
  std::vector<Job> jobs;
  std::vector<Matrix> chol;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    chol.push_back(cholesky_of(spec.classes[c].correlation, "correlation of " + spec.classes[c].class_name));
    for (std::size_t j = 0; j < spec.classes[c].job_count; ++j) jobs.push_back({c, j});
  }
  const std::array<double, kSensorCount> job_profile{2.2, 1.6, 1.1, 0.8, 0.6, 0.4, 0.3};

  std::vector<RawTrial> out(jobs.size());
  parallel_for(jobs.size(), spec.threads, [&](std::size_t n) {
    const auto& cls = spec.classes[jobs[n].cls];
    const std::uint64_t key = (static_cast<std::uint64_t>(jobs[n].cls) << 32) | jobs[n].index;
    Rng rng(derive_seed(spec.seed, "synth.job", key));
    const auto d = static_cast<Eigen::Index>(kSensorCount);
    const std::size_t length = cls.min_length + rng.below(cls.max_length - cls.min_length + 1);
    const Matrix job_chol = spec.job_noise > 0.0 ? cholesky_of(random_correlation(job_profile, rng.next()), "job correlation")
                                                 : Matrix::Zero(d, d);
    const Matrix warmup_chol = spec.warmup_samples > 0
                                   ? Matrix(spec.warmup_amplitude * cholesky_of(random_correlation(job_profile, rng.next()), "warm-up correlation"))
                                   : Matrix::Zero(d, d);
    Vector offset(d);
    for (Eigen::Index j = 0; j < d; ++j) offset[j] = 0.5 * spec.job_noise * rng.normal();

    RawTrial& t = out[n];
    char id[96];
    std::snprintf(id, sizeof id, "synth-%s-%04zu", cls.class_name.c_str(), jobs[n].index);
    t.job_id = id;
    t.device = "node" + std::to_string(key % 97) + "/gpu" + std::to_string(jobs[n].index % 2);
    t.label = find_class(cls.class_name);
    t.sensor_kind = SensorKind::Gpu;
    t.timestamps.resize(length);
    t.series.resize(static_cast<Eigen::Index>(length), d);
    Eigen::VectorXd z(d), w(d);
    for (std::size_t s = 0; s < length; ++s) {
      for (Eigen::Index j = 0; j < d; ++j) z[j] = rng.normal();
      for (Eigen::Index j = 0; j < d; ++j) w[j] = rng.normal();
      const bool warm = s < spec.warmup_samples;
      const Eigen::VectorXd u = warm ? Eigen::VectorXd(warmup_chol * z)
                                     : Eigen::VectorXd(chol[jobs[n].cls] * z + spec.job_noise * (job_chol * w) + offset);
      auto row = t.series.row(static_cast<Eigen::Index>(s));
      row = (cls.mean_profile.array() + cls.noise_scale.array() * u.array()).transpose();
      if (spec.clip) clip_sample(row, spec.memory_total_mib);
      if (spec.memory_total_mib) row[kMemFree] = *spec.memory_total_mib - row[kMemUsed];
      t.timestamps[s] = static_cast<double>(s) / kSampleRateHz;
    }
  });
  return out;
}

namespace {

SynthClassSpec make_class(std::string_view name, const Matrix& correlation, std::size_t jobs) {
  SynthClassSpec c;
  c.class_name = std::string(name);
  c.mean_profile = default_mean_profile();
  c.noise_scale = default_noise_scale();
  c.correlation = correlation;
  c.job_count = jobs;
  return c;
}

// Distinct decay rate per class; rotations are redrawn until every pair of
// correlations is at least `min_distance` apart in Frobenius norm.
std::vector<Matrix> class_correlations(std::size_t count, std::uint64_t seed, double min_distance) {
  std::vector<Matrix> out;
  for (std::size_t c = 0; c < count; ++c) {
    const double decay = 0.35 + 0.65 * static_cast<double>(c) / static_cast<double>(std::max<std::size_t>(count - 1, 1));
    std::array<double, kSensorCount> lambda{};
    double sum = 0.0;
    for (std::size_t i = 0; i < kSensorCount; ++i) sum += lambda[i] = std::exp(-decay * static_cast<double>(i));
    for (auto& l : lambda) l *= static_cast<double>(kSensorCount) / sum;
    for (std::uint64_t attempt = 0;; ++attempt) {
      Matrix m = random_correlation(lambda, derive_seed(seed, "synth.class", (c << 16) | attempt));
      const bool far = std::all_of(out.begin(), out.end(), [&](const Matrix& o) { return (o - m).norm() > min_distance; });
      if (far) {
        out.push_back(std::move(m));
        break;
      }
    }
  }
  return out;
}

// Job totals per architecture family.
constexpr std::array<std::pair<std::string_view, int>, 10> kFamilyTotals{{
    {"VGG", 560}, {"ResNet", 464}, {"Inception", 484}, {"U-Net", 1431}, {"Bert", 189},
    {"DistillBert", 172}, {"DimeNet", 33}, {"SchNet", 39}, {"PNA", 27}, {"NNConv", 32}}};

// Each family's scaled total is split over its classes by largest remainder,
// weighted by the per-class counts; every class gets at least 3 jobs.
std::vector<std::size_t> scaled_job_counts(double scale) {
  const auto tax = taxonomy();
  std::vector<std::size_t> out(tax.size(), 0);
  for (const auto& [family, total] : kFamilyTotals) {
    std::vector<std::size_t> members;
    double weight = 0.0;
    for (std::size_t c = 0; c < tax.size(); ++c) {
      if (tax[c].family == family) {
        members.push_back(c);
        weight += tax[c].job_count;
      }
    }
    const auto target = static_cast<std::size_t>(std::lround(scale * total));
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (auto c : members) {
      const double share = static_cast<double>(target) * tax[c].job_count / weight;
      out[c] = static_cast<std::size_t>(std::floor(share));
      assigned += out[c];
      remainders.emplace_back(share - std::floor(share), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < target && i < remainders.size(); ++i, ++assigned) ++out[remainders[i].second];
    for (auto c : members) out[c] = std::max<std::size_t>(out[c], 3);
  }
  return out;
}

}  // namespace

SynthCorpusSpec default_26_class_spec(std::uint64_t seed, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "scale must be positive");
  SynthCorpusSpec spec;
  spec.seed = seed;
  const auto tax = taxonomy();
  const auto corr = class_correlations(tax.size(), seed, 0.6);
  const auto jobs = scaled_job_counts(scale);
  for (std::size_t c = 0; c < tax.size(); ++c) spec.classes.push_back(make_class(tax[c].name, corr[c], jobs[c]));
  return spec;
}

SynthCorpusSpec default_4_class_spec(std::uint64_t seed, std::size_t jobs) {
  SynthCorpusSpec spec;
  spec.seed = seed;
  constexpr std::array<std::string_view, 4> names{"VGG16", "ResNet50", "U4-64", "Bert"};
  const auto corr = class_correlations(names.size(), seed, 1.5);
  for (std::size_t c = 0; c < names.size(); ++c) spec.classes.push_back(make_class(names[c], corr[c], jobs));
  return spec;
}

}  // namespace wlc
