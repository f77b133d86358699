#pragma once

#include <array>
#include <span>
#include <vector>

#include "brainseg/volume.hpp"

namespace brainseg {

// Two-component univariate Gaussian mixture, components ordered by mean.
struct Gmm2 {
  std::array<double, 2> weights{0.5, 0.5};
  std::array<double, 2> means{0.0, 1.0};
  std::array<double, 2> stds{1.0, 1.0};
  std::vector<double> log_likelihood;  // one entry per completed iteration
  int iterations = 0;

  void canonicalize();
  // Posterior of the higher-mean component.
  double posterior_high(double v) const;
};

inline constexpr double kStdFloor = 1e-4;

// PDw - T1w inside the mask, 0 outside.
ScalarVolume difference_image(const ScalarVolume& pdw, const ScalarVolume& t1w, const BrainMask& mask);

// Split at the median; each side's moments seed one component.
Gmm2 gmm2_init(std::span<const double> values);

double gmm2_log_likelihood(const Gmm2& model, std::span<const double> values);

Gmm2 gmm2_em(std::span<const double> values, const Gmm2& init, double tol = 1e-8, int max_iters = 200,
             double std_floor = kStdFloor);

// Smallest value at which the high component wins, i.e. voxels above it are MWM.
double myelin_threshold(const Gmm2& model);

// MWM for in-mask values above myelin_threshold(model), BG elsewhere.
LabelVolume classify_myelin(const ScalarVolume& diff, const BrainMask& mask, const Gmm2& model);

}  // namespace brainseg
