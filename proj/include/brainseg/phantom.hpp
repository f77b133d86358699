#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "brainseg/cnr.hpp"
#include "brainseg/volume.hpp"

namespace brainseg {

using ChannelTriple = std::array<double, kMaxChannels>;

// Nested-ellipsoid head phantom. Radii are fractions of each axis half-extent,
// so the geometry scales with the grid.
struct PhantomSpec {
  Dims dims{64, 64, 64};
  Spacing spacing{};
  std::uint64_t seed = 1;
  // Indexed by tissue code; the background row is ignored (background is 0).
  std::array<ChannelTriple, kTissueCodes> tissue_means{};
  std::array<ChannelTriple, kTissueCodes> tissue_stds{};
  // Peak multiplicative deviation of the smooth bias field.
  double bias_amplitude = 0.0;

  struct Streaks {
    int count = 0;
    double radius = 1.0;             // voxels
    double intensity_factor = 0.85;  // applied to the WM T1w mean
  } wm_streaks;

  struct Geometry {
    double csf_radius = 0.9;
    double gm_radius = 0.75;
    double wm_radius = 0.5;
  } geometry;

  // Optional myelinated-WM sphere planted inside the WM core.
  struct MwmRegion {
    std::array<double, 3> center{0.0, 0.0, 0.0};  // fractions of half-extent, in [-1, 1]
    double radius = 0.15;
  };
  std::optional<MwmRegion> mwm_region;

  // Throws ValidationError on violated invariants.
  void validate() const;

  // Three-channel phantom with T1w GM/WM CNR of 2 (means 0.5/0.7, stds 0.1)
  // and a mild bias field.
  static PhantomSpec standard(std::uint64_t seed = 1);
  // Same geometry with T1w GM/WM CNR of 1.
  static PhantomSpec low_contrast(std::uint64_t seed = 1);
};

struct Phantom {
  MultiChannelVolume volume;
  LabelVolume truth;
};

Phantom generate_phantom(const PhantomSpec& spec);

// Nominal GM/WM CNR of a channel, ignoring the bias field.
Cnr phantom_cnr(const PhantomSpec& spec, Channel channel);

// Flawed initialization synthesized from ground truth: CSF voxels touching GM
// are relabelled GM `csf_erode_iters` times, then each GM/WM voxel swaps class
// with probability `gm_wm_swap_fraction`.
struct DegradeSpec {
  int csf_erode_iters = 0;
  double gm_wm_swap_fraction = 0.0;
  std::uint64_t seed = 1;
};

LabelVolume degrade_labels(const LabelVolume& truth, const DegradeSpec& spec);

}  // namespace brainseg
