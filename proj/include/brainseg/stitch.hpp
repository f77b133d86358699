#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "brainseg/partition.hpp"
#include "brainseg/subdomain_classifier.hpp"
#include "brainseg/volume.hpp"

namespace brainseg {

// Row-major 2D label grid; rows run along y, columns along x.
struct LabelGrid {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> cells;

  LabelGrid() = default;
  LabelGrid(int r, int c, std::uint8_t fill = 0) : rows(r), cols(c), cells(static_cast<std::size_t>(r) * c, fill) {}

  std::size_t index(int r, int c) const noexcept { return static_cast<std::size_t>(r) * cols + c; }
  std::uint8_t& at(int r, int c) noexcept { return cells[index(r, c)]; }
  std::uint8_t at(int r, int c) const noexcept { return cells[index(r, c)]; }
  bool operator==(const LabelGrid&) const = default;
};

// Horizontal: left/right neighbours, strip is nrows x 4 with the first and
// last columns clamped. Vertical: upper/lower neighbours, strip is 4 x ncols
// with the first and last rows clamped.
enum class Orientation { Horizontal, Vertical };

enum class Clamp : std::uint8_t { Free = 0, ToA = 1, ToB = 2 };

// Two observed labelings of a joint region. Sites outside `active` (e.g.
// background) take no part in the energy; clamped sites keep their source
// label.
struct OverlapObservation {
  LabelGrid obs_a;
  LabelGrid obs_b;
  std::vector<Clamp> clamp;
  std::vector<std::uint8_t> active;

  // Canonical strip: first line clamped to a, last line clamped to b.
  static OverlapObservation strip(LabelGrid a, LabelGrid b, Orientation orientation);

  void validate() const;
};

struct EnergyParams {
  double w = 1.0;
  double beta = 0.7;

  void validate() const;
};

struct AnnealSchedule {
  double t0 = 2.0;
  double c = 0.95;
  int max_sweeps = 200;
  int stall_sweeps = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

// w * sum_s ([x_s != a_s] + [x_s != b_s]) + beta * sum_<s,t> [x_s != x_t]
// over active sites and active 4-neighbour pairs.
double energy(const LabelGrid& config, const OverlapObservation& obs, const EnergyParams& p);

struct AnnealResult {
  LabelGrid labels;
  double energy = 0.0;
  double initial_energy = 0.0;
  int sweeps = 0;
};

// Single-site Metropolis in raster order at T_k = t0 * c^k, proposing labels
// seen in either observation. Starts from obs_a with the b-clamps applied and
// returns the lowest-energy configuration visited.
AnnealResult sa_map_estimate(const OverlapObservation& obs, const EnergyParams& p, const AnnealSchedule& sched);

// Progressive fusion of every classified box intersecting axial slice z.
// Boxes are taken in (min row, min col) order; each one's exclusive pixels are
// pasted and its overlap with the canvas is resolved by annealing with the
// canvas as observation a. Throws ValidationError if an in-mask pixel stays
// uncovered.
LabelGrid stitch_slice(std::span<const SubdomainLabels> parts, const BrainMask& mask, int z, const EnergyParams& p,
                       const AnnealSchedule& sched);

// Stitches every axial slice (in parallel, seeds derived per slice).
LabelVolume assemble_volume(std::span<const SubdomainLabels> parts, const PartitionTree& tree, const BrainMask& mask,
                            const EnergyParams& p, const AnnealSchedule& sched, int threads = 1);

// Label changes across subdomain cut planes versus across randomly placed
// parallel control planes of the same extent.
struct SeamStats {
  std::size_t seam_pairs = 0;
  std::size_t seam_changes = 0;
  std::size_t control_pairs = 0;
  std::size_t control_changes = 0;

  double seam_rate() const { return seam_pairs ? static_cast<double>(seam_changes) / seam_pairs : 0.0; }
  double control_rate() const { return control_pairs ? static_cast<double>(control_changes) / control_pairs : 0.0; }
};

SeamStats seam_statistics(const LabelVolume& labels, const BrainMask& mask, const PartitionTree& tree,
                          std::uint64_t seed, int controls_per_seam = 4);

}  // namespace brainseg
