#include "brainseg/discriminant.hpp"

#include <cmath>
#include <random>

#include "helpers.hpp"

using namespace brainseg;

namespace {

TrainingSet gaussian_classes(std::size_t n_per_class, std::uint64_t seed, double separation) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  TrainingSet ts;
  for (int cls : {1, -1}) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const double a = z(gen), b = z(gen), c = z(gen);
      const double shift = cls == 1 ? separation : 0.0;
      ts.samples.push_back({0.3 * a + shift, 0.2 * a + 0.4 * b, 0.1 * c - 0.5 * shift});
      ts.labels.push_back(cls);
    }
  }
  return ts;
}

struct Lda {
  Eigen::Vector3d w;
  double threshold = 0.0;
  double pooled = 0.0;
  double margin(const IntensityVector& x) const {
    return (w.dot(Eigen::Vector3d(x[0], x[1], x[2])) - threshold) / pooled;
  }
};

Lda fisher_lda(const TrainingSet& ts) {
  Eigen::Vector3d ma = Eigen::Vector3d::Zero(), mb = Eigen::Vector3d::Zero();
  double na = 0, nb = 0;
  for (std::size_t i = 0; i < ts.samples.size(); ++i) {
    const Eigen::Vector3d x(ts.samples[i][0], ts.samples[i][1], ts.samples[i][2]);
    (ts.labels[i] == 1 ? ma : mb) += x;
    (ts.labels[i] == 1 ? na : nb) += 1;
  }
  ma /= na;
  mb /= nb;
  Eigen::Matrix3d sw = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < ts.samples.size(); ++i) {
    const Eigen::Vector3d x(ts.samples[i][0], ts.samples[i][1], ts.samples[i][2]);
    const Eigen::Vector3d d = x - (ts.labels[i] == 1 ? ma : mb);
    sw += d * d.transpose();
  }
  Lda l;
  l.w = sw.ldlt().solve(ma - mb);
  l.threshold = (l.w.dot(ma) + l.w.dot(mb)) / 2.0;
  double va = 0, vb = 0;
  for (std::size_t i = 0; i < ts.samples.size(); ++i) {
    const Eigen::Vector3d x(ts.samples[i][0], ts.samples[i][1], ts.samples[i][2]);
    const double y = l.w.dot(x) - (ts.labels[i] == 1 ? l.w.dot(ma) : l.w.dot(mb));
    (ts.labels[i] == 1 ? va : vb) += y * y;
  }
  l.pooled = std::sqrt((va / na + vb / nb) / 2.0);
  return l;
}

}  // namespace

TEST_CASE("linear KFDA agrees with Fisher LDA") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const TrainingSet ts = gaussian_classes(60, seed, 0.4);
    const DiscriminantModel m = train_discriminant(ts, KernelSpec::linear(), 1e-9);
    const Lda lda = fisher_lda(ts);
    const TrainingSet probe = gaussian_classes(100, seed + 1000, 0.4);
    for (const auto& x : probe.samples) {
      const double lm = lda.margin(x);
      const BinaryDecision d = classify_binary(m, x);
      if (std::abs(lm) > 1e-6) CHECK((lm > 0) == (d.cls == BinaryClass::A));
      CHECK(d.margin == doctest::Approx(lm).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("model orientation and threshold") {
  const TrainingSet ts = gaussian_classes(50, 3, 1.0);
  for (const KernelSpec& k : {KernelSpec::linear(), KernelSpec::rbf(0.5), KernelSpec::sigmoid(1.0, -1.0)}) {
    const DiscriminantModel m = train_discriminant(ts, k, 1e-3);
    CHECK(m.stats.mean_a > m.stats.mean_b);
    CHECK(m.threshold == doctest::Approx((m.stats.mean_a + m.stats.mean_b) / 2.0));
    // Projections of the training set reproduce the stored moments.
    double sa = 0, sb = 0;
    for (std::size_t i = 0; i < ts.samples.size(); ++i) (ts.labels[i] == 1 ? sa : sb) += project(m, ts.samples[i]);
    CHECK(sa / 50 == doctest::Approx(m.stats.mean_a));
    CHECK(sb / 50 == doctest::Approx(m.stats.mean_b));
    // Well separated classes are mostly classified correctly.
    int correct = 0;
    for (std::size_t i = 0; i < ts.samples.size(); ++i) {
      correct += (classify_binary(m, ts.samples[i]).cls == BinaryClass::A) == (ts.labels[i] == 1);
    }
    CHECK(correct >= 95);
  }
}

TEST_CASE("singular and degenerate systems") {
  const TrainingSet ts = gaussian_classes(20, 5, 1.0);
  // Linear Gram matrix has rank 3, so N (40 x 40) is singular without regularization.
  CHECK_FAILS_WITH(train_discriminant(ts, KernelSpec::linear(), 0.0), ErrorKind::Singular);
  CHECK_NOTHROW(train_discriminant(ts, KernelSpec::linear(), 1e-6));

  TrainingSet same;
  for (int i = 0; i < 4; ++i) {
    same.samples.push_back({0.1 * i, 0.5, 0.5});
    same.labels.push_back(i % 2 == 0 ? 1 : -1);
  }
  same.samples[1] = same.samples[0];
  same.samples[3] = same.samples[2];
  CHECK_FAILS_WITH(train_discriminant(same, KernelSpec::rbf(1.0), 1e-3), ErrorKind::Degenerate);

  CHECK_FAILS_WITH(train_discriminant(ts, KernelSpec::linear(), -1.0), ErrorKind::Validation);
}

TEST_CASE("training set validation") {
  TrainingSet ts = gaussian_classes(3, 1, 1.0);
  ts.labels[0] = 2;
  CHECK_FAILS_WITH(ts.validate(), ErrorKind::Validation);
  ts = gaussian_classes(3, 1, 1.0);
  ts.labels.assign(6, 1);
  CHECK_FAILS_WITH(ts.validate(), ErrorKind::Validation);
  ts = gaussian_classes(3, 1, 1.0);
  ts.source_voxels = {1, 2, 3, 4, 5, 5};
  CHECK_FAILS_WITH(ts.validate(), ErrorKind::Validation);
  ts = gaussian_classes(3, 1, 1.0);
  ts.samples[2] = IntensityVector{1.0};
  CHECK_FAILS_WITH(ts.validate(), ErrorKind::Dimension);
}

TEST_CASE("voxel categories") {
  const TrainingSet ts = gaussian_classes(40, 8, 0.6);
  const DiscriminantModel m = train_discriminant(ts, KernelSpec::linear(), 1e-6);
  CategoryParams params;
  std::vector<IntensityVector> voxels = gaussian_classes(200, 77, 0.6).samples;
  // A far-away point must be an outlier.
  voxels.push_back({25.0, 0.0, -12.0});
  std::vector<std::uint8_t> proto(voxels.size(), 0);
  proto[0] = 1;
  const auto cats = categorize_voxels(m, voxels, proto, params);
  REQUIRE(cats.size() == voxels.size());
  CHECK(cats[0].category == VoxelCategory::Prototype);
  CHECK(cats.back().category == VoxelCategory::Outlier);

  std::size_t overlapping = 0;
  for (std::size_t i = 1; i < voxels.size(); ++i) {
    const auto& c = cats[i];
    const BinaryDecision d = classify_binary(m, voxels[i]);
    CHECK(c.discriminant_class == d.cls);
    CHECK(c.margin == d.margin);
    if (std::abs(d.margin) <= params.delta) {
      CHECK(c.category == VoxelCategory::Overlapping);
      ++overlapping;
      // Oracle vote over the 9 nearest prototypes.
      std::vector<std::pair<double, int>> dist;
      for (std::size_t j = 0; j < ts.samples.size(); ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += (ts.samples[j][k] - voxels[i][k]) * (ts.samples[j][k] - voxels[i][k]);
        dist.emplace_back(s, ts.labels[j]);
      }
      std::sort(dist.begin(), dist.end());
      int votes = 0;
      for (int k = 0; k < 9; ++k) votes += dist[k].second;
      if (votes != 0) CHECK((c.cls == BinaryClass::A) == (votes > 0));
    } else {
      CHECK(c.cls == c.discriminant_class);
      CHECK(c.category != VoxelCategory::Overlapping);
    }
  }
  CHECK(overlapping > 0);

  std::vector<std::uint8_t> short_flags(3, 0);
  CHECK_FAILS_WITH(categorize_voxels(m, voxels, short_flags, params), ErrorKind::Dimension);
  CHECK(std::string(category_name(VoxelCategory::Outlier)) == "outlier");
}
