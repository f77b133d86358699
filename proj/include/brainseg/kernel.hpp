#pragma once

#include <Eigen/Dense>
#include <span>

#include "brainseg/volume.hpp"

namespace brainseg {

struct KernelSpec {
  enum class Kind { Linear, Sigmoid, Rbf };

  Kind kind = Kind::Linear;
  double a = 1.0;      // sigmoid slope
  double b = 0.0;      // sigmoid offset
  double sigma = 1.0;  // rbf width

  static KernelSpec linear() { return {Kind::Linear}; }
  static KernelSpec sigmoid(double a, double b) { return {Kind::Sigmoid, a, b}; }
  static KernelSpec rbf(double sigma) { return {Kind::Rbf, 1.0, 0.0, sigma}; }

  void validate() const;
};

const char* kernel_name(KernelSpec::Kind kind) noexcept;

// Linear: x.y; Sigmoid: tanh(a x.y + b); Rbf: exp(-|x-y|^2 / (2 sigma^2)).
double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);
inline double kernel_eval(const KernelSpec& spec, const IntensityVector& x, const IntensityVector& y) {
  return kernel_eval(spec, x.values(), y.values());
}

// Symmetric Gram matrix; each unordered pair is evaluated once and mirrored.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, std::span<const IntensityVector> samples);

// Median of all pairwise Euclidean distances. Zero distances are skipped when
// they form the median so duplicated samples cannot collapse the width;
// throws DegenerateError if every pair coincides.
double median_pairwise_distance(std::span<const IntensityVector> samples);

}  // namespace brainseg
