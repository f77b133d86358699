#pragma once

#include <optional>
#include <span>
#include <vector>

#include "brainseg/cnr.hpp"
#include "brainseg/volume.hpp"

namespace brainseg {

struct PartitionParams {
  int bin_count = 64;
  int max_regions = 48;
  double min_gain_bits = 1e-3;
  int min_extent_voxels = 8;
  int margin = 2;

  void validate() const;
};

// Equal-width histogram of in-mask intensities with the bin index of every
// voxel cached, so region histograms are plain counts.
class HistogramModel {
 public:
  HistogramModel(const ScalarVolume& image, const BrainMask& mask, int bins);

  int bins() const noexcept { return bins_; }
  const Dims& dims() const noexcept { return dims_; }
  const std::vector<double>& edges() const noexcept { return edges_; }
  // -1 outside the mask.
  int bin_of(std::size_t voxel) const noexcept { return bin_index_[voxel]; }
  int bin_of(int x, int y, int z) const noexcept {
    return bin_index_[static_cast<std::size_t>(x) + static_cast<std::size_t>(dims_.nx) * (y + static_cast<std::size_t>(dims_.ny) * z)];
  }
  std::size_t total() const noexcept { return total_; }
  const std::vector<std::size_t>& global_counts() const noexcept { return global_; }

  std::vector<double> global_probs() const;
  std::vector<std::size_t> region_counts(const Box& box) const;
  // In-mask fraction p(r).
  double region_prob(const Box& box) const;
  // p(b|r); throws DegenerateError for a region without in-mask voxels.
  std::vector<double> conditional_probs(const Box& box) const;

  // n * log2(n) for integer counts.
  double xlog2x(std::size_t n) const noexcept { return n < xlogx_.size() ? xlogx_[n] : 0.0; }

 private:
  Dims dims_;
  int bins_ = 0;
  std::vector<double> edges_;
  std::vector<std::int16_t> bin_index_;
  std::vector<std::size_t> global_;
  std::size_t total_ = 0;
  std::vector<double> xlogx_;
};

HistogramModel build_histogram(const ScalarVolume& image, const BrainMask& mask, int bins);

// I(R;B) in bits for disjoint regions covering the mask.
double region_mi(const HistogramModel& model, std::span<const Box> regions);

// MI gain of cutting `region` so that the lower child ends at plane - 1 and
// the upper child starts at `plane` along `axis`: p(r) times the weighted
// Jensen-Shannon divergence of the child histograms.
double split_gain(const HistogramModel& model, const Box& region, int axis, int plane);

struct Split {
  int axis = 0;
  int plane = 0;
  double gain = 0.0;
};

// Exhaustive scan over all admissible planes on x, y, z. Ties go to the
// lower axis, then the lower plane.
std::optional<Split> best_split(const HistogramModel& model, const Box& region, const PartitionParams& params);

struct Subdomain {
  int id = 0;
  Box core_box;
  Box overlap_box;
  double mean_intensity = 0.0;
  Cnr cnr;
};

struct PartitionNode {
  Box box;
  int parent = -1;
  int left = -1;
  int right = -1;
  int axis = -1;
  int plane = -1;
  double gain = 0.0;
  int leaf_id = -1;

  bool is_leaf() const noexcept { return left < 0; }
};

struct PartitionTree {
  Dims dims;
  int margin = 0;
  std::vector<PartitionNode> nodes;  // nodes[0] is the root
  std::vector<Subdomain> leaves;     // indexed by id
  double total_mi = 0.0;
};

// Greedy best-first binary space partitioning on `image`, then every leaf
// is grown by `margin` voxels across each internal face.
PartitionTree partition_volume(const ScalarVolume& image, const BrainMask& mask, const PartitionParams& params);

Box expand_internal_faces(const Box& core, const Dims& dims, int margin);

struct SubdomainStats {
  double mean = 0.0;
  Cnr cnr;
};

// In-mask mean over the core box, and GM/WM CNR from the labels inside it.
// CNR is absent when either class has fewer than 10 voxels.
SubdomainStats subdomain_stats(const ScalarVolume& image, const BrainMask& mask, const LabelVolume& labels,
                               const Subdomain& sub);

}  // namespace brainseg
