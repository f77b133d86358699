#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "brainseg/kernel.hpp"
#include "brainseg/volume.hpp"

namespace brainseg {

// Two-class training data; label +1 is class A, -1 is class B.
struct TrainingSet {
  std::vector<IntensityVector> samples;
  std::vector<int> labels;
  std::vector<std::size_t> source_voxels;

  std::size_t count(int label) const;
  void validate() const;
};

struct ProjectionStats {
  double mean_a = 0.0;
  double std_a = 0.0;
  double mean_b = 0.0;
  double std_b = 0.0;

  double pooled_std() const;
};

// Kernel Fisher discriminant: y(x) = sum_i alpha_i K(s_i, x), oriented so the
// class A projections lie above the class B projections.
struct DiscriminantModel {
  KernelSpec kernel;
  std::vector<IntensityVector> samples;
  std::vector<int> labels;
  Eigen::VectorXd alpha;
  double threshold = 0.0;
  ProjectionStats stats;
  double mu = 0.0;
};

// Builds the class kernel-mean vectors M_a, M_b and the within-class matrix
// N = sum_j K_j (I - 1/n_j) K_j^T, then solves (N + mu' I) alpha = M_a - M_b
// with mu' = mu * trace(N) / n. The threshold is the midpoint of the
// projected class means. mu = 0 with a singular N throws SingularError;
// indistinguishable classes throw DegenerateError.
DiscriminantModel train_discriminant(const TrainingSet& ts, const KernelSpec& spec, double mu);

double project(const DiscriminantModel& model, const IntensityVector& x);

enum class BinaryClass : std::uint8_t { A, B };

struct BinaryDecision {
  BinaryClass cls = BinaryClass::A;
  // (y - threshold) in pooled projected std units; +/-inf when the pooled
  // std is zero.
  double margin = 0.0;
  double projection = 0.0;
};

// y >= threshold is class A.
BinaryDecision classify_binary(const DiscriminantModel& model, const IntensityVector& x);

enum class VoxelCategory : std::uint8_t { Prototype, Interior, Overlapping, Outlier };
const char* category_name(VoxelCategory c) noexcept;

struct CategoryParams {
  double delta = 0.5;  // overlapping band half-width, pooled stds
  int k_vote = 9;
  double outlier_stds = 3.0;
};

struct CategorizedVoxel {
  VoxelCategory category = VoxelCategory::Interior;
  BinaryClass discriminant_class = BinaryClass::A;
  // Final class: the discriminant class, or the k-nearest-prototype majority
  // for overlapping voxels (ties keep the discriminant class).
  BinaryClass cls = BinaryClass::A;
  double margin = 0.0;
};

// `is_prototype[i]` marks voxels that are training-set members.
std::vector<CategorizedVoxel> categorize_voxels(const DiscriminantModel& model, std::span<const IntensityVector> voxels,
                                                std::span<const std::uint8_t> is_prototype,
                                                const CategoryParams& params);

}  // namespace brainseg
