#include "brainseg/discriminant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace brainseg {

std::size_t TrainingSet::count(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

void TrainingSet::validate() const {
  if (samples.size() != labels.size()) fail(ErrorKind::Validation, "samples and labels differ in length");
  if (!source_voxels.empty() && source_voxels.size() != samples.size()) {
    fail(ErrorKind::Validation, "source voxel list differs in length");
  }
  for (int l : labels) {
    if (l != 1 && l != -1) fail(ErrorKind::Validation, "training labels must be +1 or -1");
  }
  if (count(1) < 2 || count(-1) < 2) fail(ErrorKind::Validation, "each class needs at least 2 samples");
  const std::size_t dim = samples.front().size();
  for (const auto& s : samples) {
    if (s.size() != dim) fail(ErrorKind::Dimension, "training samples differ in dimension");
  }
  std::unordered_set<std::size_t> seen;
  for (std::size_t v : source_voxels) {
    if (!seen.insert(v).second) fail(ErrorKind::Validation, "duplicate training voxel");
  }
}

double ProjectionStats::pooled_std() const { return std::sqrt((std_a * std_a + std_b * std_b) / 2.0); }

namespace {

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

Moments moments(const std::vector<double>& y, const std::vector<int>& labels, int which) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (labels[i] == which) {
      sum += y[i];
      ++n;
    }
  }
  Moments m;
  m.mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (labels[i] == which) ss += (y[i] - m.mean) * (y[i] - m.mean);
  }
  m.std = std::sqrt(ss / static_cast<double>(n));
  return m;
}

}  // namespace

DiscriminantModel train_discriminant(const TrainingSet& ts, const KernelSpec& spec, double mu) {
  ts.validate();
  spec.validate();
  if (!(mu >= 0.0) || !std::isfinite(mu)) fail(ErrorKind::Validation, "mu must be >= 0");

  const Eigen::MatrixXd k = kernel_matrix(spec, ts.samples);
  const Eigen::Index n = k.rows();
  const double n_a = static_cast<double>(ts.count(1));
  const double n_b = static_cast<double>(ts.count(-1));

  Eigen::VectorXd mean_a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd mean_b = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (ts.labels[j] == 1) {
      mean_a += k.col(j);
    } else {
      mean_b += k.col(j);
    }
  }
  mean_a /= n_a;
  mean_b /= n_b;
  const Eigen::VectorXd rhs = mean_a - mean_b;
  const double scale = std::max(1.0, std::max(mean_a.cwiseAbs().maxCoeff(), mean_b.cwiseAbs().maxCoeff()));
  if (rhs.cwiseAbs().maxCoeff() <= 1e-14 * scale) {
    fail(ErrorKind::Degenerate, "class means coincide in feature space");
  }

  // Class-centred kernel columns; N = Kc Kc^T.
  Eigen::MatrixXd centred = k;
  for (Eigen::Index j = 0; j < n; ++j) centred.col(j) -= ts.labels[j] == 1 ? mean_a : mean_b;
  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(n, n);
  within.selfadjointView<Eigen::Lower>().rankUpdate(centred);
  within.triangularView<Eigen::StrictlyUpper>() = within.transpose();

  Eigen::VectorXd alpha;
  if (mu == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(within);
    if (!lu.isInvertible()) {
      fail(ErrorKind::Singular, "within-class matrix is singular; use a regularization mu > 0");
    }
    alpha = lu.solve(rhs);
  } else {
    const double reg = mu * within.trace() / static_cast<double>(n);
    if (!(reg > 0.0)) fail(ErrorKind::Singular, "within-class scatter vanishes; regularization has no scale");
    within.diagonal().array() += reg;
    Eigen::LLT<Eigen::MatrixXd> llt(within);
    if (llt.info() != Eigen::Success) fail(ErrorKind::Singular, "regularized system is not positive definite");
    alpha = llt.solve(rhs);
  }
  if (!alpha.allFinite()) fail(ErrorKind::Singular, "discriminant solve produced non-finite coefficients");

  // y_j = sum_i alpha_i K(s_i, s_j), accumulated in the same order as project().
  std::vector<double> y(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += alpha[i] * k(i, j);
    y[static_cast<std::size_t>(j)] = s;
  }
  Moments ma = moments(y, ts.labels, 1);
  Moments mb = moments(y, ts.labels, -1);
  if (ma.mean < mb.mean) {
    alpha = -alpha;
    for (double& v : y) v = -v;
    ma = moments(y, ts.labels, 1);
    mb = moments(y, ts.labels, -1);
  }
  const double spread = std::max(std::abs(ma.mean), std::abs(mb.mean));
  if (!(ma.mean - mb.mean > 1e-12 * spread)) fail(ErrorKind::Degenerate, "projected class means coincide");

  DiscriminantModel model;
  model.kernel = spec;
  model.samples = ts.samples;
  model.labels = ts.labels;
  model.alpha = std::move(alpha);
  model.stats = ProjectionStats{ma.mean, ma.std, mb.mean, mb.std};
  model.threshold = (ma.mean + mb.mean) / 2.0;
  model.mu = mu;
  return model;
}

double project(const DiscriminantModel& model, const IntensityVector& x) {
  if (model.samples.empty() || x.size() != model.samples.front().size()) {
    fail(ErrorKind::Dimension, "voxel dimension does not match the model");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < model.samples.size(); ++i) {
    s += model.alpha[static_cast<Eigen::Index>(i)] * kernel_eval(model.kernel, model.samples[i].values(), x.values());
  }
  return s;
}

BinaryDecision classify_binary(const DiscriminantModel& model, const IntensityVector& x) {
  BinaryDecision d;
  d.projection = project(model, x);
  const double diff = d.projection - model.threshold;
  d.cls = diff >= 0.0 ? BinaryClass::A : BinaryClass::B;
  const double pooled = model.stats.pooled_std();
  if (pooled > 0.0) {
    d.margin = diff / pooled;
  } else if (diff == 0.0) {
    d.margin = 0.0;
  } else {
    d.margin = diff > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return d;
}

const char* category_name(VoxelCategory c) noexcept {
  switch (c) {
    case VoxelCategory::Prototype: return "prototype";
    case VoxelCategory::Interior: return "interior";
    case VoxelCategory::Overlapping: return "overlapping";
    case VoxelCategory::Outlier: return "outlier";
  }
  return "?";
}

namespace {

BinaryClass vote_nearest_prototypes(const DiscriminantModel& model, const IntensityVector& x, int k,
                                    BinaryClass fallback, std::vector<std::pair<double, std::size_t>>& scratch) {
  scratch.clear();
  for (std::size_t i = 0; i < model.samples.size(); ++i) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
      double t = model.samples[i][c] - x[c];
      d2 += t * t;
    }
    scratch.emplace_back(d2, i);
  }
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), scratch.size());
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(kk), scratch.end());
  int votes_a = 0, votes_b = 0;
  for (std::size_t i = 0; i < kk; ++i) (model.labels[scratch[i].second] == 1 ? votes_a : votes_b)++;
  if (votes_a > votes_b) return BinaryClass::A;
  if (votes_b > votes_a) return BinaryClass::B;
  return fallback;
}

}  // namespace

std::vector<CategorizedVoxel> categorize_voxels(const DiscriminantModel& model, std::span<const IntensityVector> voxels,
                                                std::span<const std::uint8_t> is_prototype,
                                                const CategoryParams& params) {
  if (!is_prototype.empty() && is_prototype.size() != voxels.size()) {
    fail(ErrorKind::Dimension, "prototype flags differ in length from the voxel list");
  }
  std::vector<CategorizedVoxel> out(voxels.size());
  std::vector<std::pair<double, std::size_t>> scratch;
  scratch.reserve(model.samples.size());
  for (std::size_t v = 0; v < voxels.size(); ++v) {
    const BinaryDecision d = classify_binary(model, voxels[v]);
    CategorizedVoxel& cv = out[v];
    cv.discriminant_class = d.cls;
    cv.cls = d.cls;
    cv.margin = d.margin;
    const bool a = d.cls == BinaryClass::A;
    const double m = a ? model.stats.mean_a : model.stats.mean_b;
    const double s = a ? model.stats.std_a : model.stats.std_b;
    if (!is_prototype.empty() && is_prototype[v]) {
      cv.category = VoxelCategory::Prototype;
    } else if (std::abs(d.margin) <= params.delta) {
      cv.category = VoxelCategory::Overlapping;
      cv.cls = vote_nearest_prototypes(model, voxels[v], params.k_vote, d.cls, scratch);
    } else if (std::abs(d.projection - m) > params.outlier_stds * s + 1e-12 * (1.0 + std::abs(m))) {
      cv.category = VoxelCategory::Outlier;
    } else {
      cv.category = VoxelCategory::Interior;
    }
  }
  return out;
}

}  // namespace brainseg
