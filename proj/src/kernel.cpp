#include "brainseg/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace brainseg {

void KernelSpec::validate() const {
  switch (kind) {
    case Kind::Linear: break;
    case Kind::Sigmoid:
      if (a == 0.0 || !std::isfinite(a) || !std::isfinite(b)) fail(ErrorKind::Config, "sigmoid kernel needs a != 0");
      break;
    case Kind::Rbf:
      if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorKind::Config, "rbf kernel needs sigma > 0");
      break;
  }
}

const char* kernel_name(KernelSpec::Kind kind) noexcept {
  switch (kind) {
    case KernelSpec::Kind::Linear: return "linear";
    case KernelSpec::Kind::Sigmoid: return "sigmoid";
    case KernelSpec::Kind::Rbf: return "rbf";
  }
  return "?";
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorKind::Dimension, "kernel arguments differ in dimension");
  switch (spec.kind) {
    case KernelSpec::Kind::Linear: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
      return s;
    }
    case KernelSpec::Kind::Sigmoid: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
      return std::tanh(spec.a * s + spec.b);
    }
    case KernelSpec::Kind::Rbf: {
      double d2 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - y[i];
        d2 += d * d;
      }
      return std::exp(-d2 / (2.0 * spec.sigma * spec.sigma));
    }
  }
  return 0.0;
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, std::span<const IntensityVector> samples) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n < 2) fail(ErrorKind::Validation, "kernel matrix needs at least 2 samples");
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      double v = kernel_eval(spec, samples[i], samples[j]);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

double median_pairwise_distance(std::span<const IntensityVector> samples) {
  const std::size_t n = samples.size();
  if (n < 2) fail(ErrorKind::Validation, "median heuristic needs at least 2 samples");
  std::vector<double> d;
  d.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < samples[i].size(); ++c) {
        double t = samples[i][c] - samples[j][c];
        s += t * t;
      }
      d.push_back(std::sqrt(s));
    }
  }
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  if (*mid > 0.0) return *mid;
  std::erase(d, 0.0);
  if (d.empty()) fail(ErrorKind::Degenerate, "all training samples coincide");
  mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

}  // namespace brainseg
