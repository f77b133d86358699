#include "brainseg/stitch.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "brainseg/parallel.hpp"
#include "brainseg/rng.hpp"

namespace brainseg {

OverlapObservation OverlapObservation::strip(LabelGrid a, LabelGrid b, Orientation orientation) {
  if (a.rows != b.rows || a.cols != b.cols) fail(ErrorKind::Dimension, "observations differ in shape");
  OverlapObservation obs;
  const std::size_t n = a.cells.size();
  obs.clamp.assign(n, Clamp::Free);
  obs.active.assign(n, 1);
  for (int r = 0; r < a.rows; ++r) {
    for (int c = 0; c < a.cols; ++c) {
      const bool first = orientation == Orientation::Horizontal ? c == 0 : r == 0;
      const bool last = orientation == Orientation::Horizontal ? c == a.cols - 1 : r == a.rows - 1;
      if (first) {
        obs.clamp[a.index(r, c)] = Clamp::ToA;
      } else if (last) {
        obs.clamp[a.index(r, c)] = Clamp::ToB;
      }
    }
  }
  obs.obs_a = std::move(a);
  obs.obs_b = std::move(b);
  return obs;
}

void OverlapObservation::validate() const {
  if (obs_a.rows != obs_b.rows || obs_a.cols != obs_b.cols) fail(ErrorKind::Dimension, "observations differ in shape");
  const std::size_t n = obs_a.cells.size();
  if (obs_a.rows < 1 || obs_a.cols < 1 || obs_b.cells.size() != n || clamp.size() != n || active.size() != n) {
    fail(ErrorKind::Dimension, "observation arrays differ in size");
  }
}

void EnergyParams::validate() const {
  if (!(w > 0.0)) fail(ErrorKind::Config, "data weight w must be > 0");
  if (!(beta >= 0.0)) fail(ErrorKind::Config, "smoothness weight beta must be >= 0");
}

void AnnealSchedule::validate() const {
  if (!(t0 > 0.0)) fail(ErrorKind::Config, "t0 must be > 0");
  if (!(c > 0.0 && c < 1.0)) fail(ErrorKind::Config, "cooling factor must lie in (0, 1)");
  if (max_sweeps < 1 || stall_sweeps < 1) fail(ErrorKind::Config, "sweep counts must be >= 1");
}

double energy(const LabelGrid& config, const OverlapObservation& obs, const EnergyParams& p) {
  obs.validate();
  if (config.rows != obs.obs_a.rows || config.cols != obs.obs_a.cols) {
    fail(ErrorKind::Dimension, "configuration shape does not match the observation");
  }
  std::size_t data = 0, smooth = 0;
  for (int r = 0; r < config.rows; ++r) {
    for (int c = 0; c < config.cols; ++c) {
      const std::size_t i = config.index(r, c);
      if (!obs.active[i]) continue;
      data += (config.cells[i] != obs.obs_a.cells[i]) + (config.cells[i] != obs.obs_b.cells[i]);
      if (c + 1 < config.cols && obs.active[i + 1]) smooth += config.cells[i] != config.cells[i + 1];
      if (r + 1 < config.rows) {
        const std::size_t j = config.index(r + 1, c);
        if (obs.active[j]) smooth += config.cells[i] != config.cells[j];
      }
    }
  }
  return p.w * static_cast<double>(data) + p.beta * static_cast<double>(smooth);
}

AnnealResult sa_map_estimate(const OverlapObservation& obs, const EnergyParams& p, const AnnealSchedule& sched) {
  obs.validate();
  p.validate();
  sched.validate();
  const LabelGrid& a = obs.obs_a;
  const LabelGrid& b = obs.obs_b;
  const int rows = a.rows, cols = a.cols;

  LabelGrid x = a;
  std::array<bool, 256> seen{};
  for (std::size_t i = 0; i < x.cells.size(); ++i) {
    if (obs.clamp[i] == Clamp::ToB) x.cells[i] = b.cells[i];
    if (obs.active[i]) {
      seen[a.cells[i]] = true;
      seen[b.cells[i]] = true;
    }
  }
  std::vector<std::uint8_t> labels;
  for (int l = 0; l < 256; ++l) {
    if (seen[l]) labels.push_back(static_cast<std::uint8_t>(l));
  }

  std::vector<std::size_t> free_sites;
  for (std::size_t i = 0; i < x.cells.size(); ++i) {
    if (obs.active[i] && obs.clamp[i] == Clamp::Free) free_sites.push_back(i);
  }

  AnnealResult result;
  result.initial_energy = energy(x, obs, p);
  result.energy = result.initial_energy;
  result.labels = x;
  if (free_sites.empty() || labels.size() < 2) return result;

  auto local = [&](std::size_t i, std::uint8_t l) {
    const int r = static_cast<int>(i / static_cast<std::size_t>(cols));
    const int c = static_cast<int>(i % static_cast<std::size_t>(cols));
    double e = p.w * static_cast<double>((l != a.cells[i]) + (l != b.cells[i]));
    int diff = 0;
    if (c > 0 && obs.active[i - 1]) diff += l != x.cells[i - 1];
    if (c + 1 < cols && obs.active[i + 1]) diff += l != x.cells[i + 1];
    if (r > 0 && obs.active[i - cols]) diff += l != x.cells[i - cols];
    if (r + 1 < rows && obs.active[i + cols]) diff += l != x.cells[i + cols];
    return e + p.beta * diff;
  };

  Rng rng(sched.seed);
  double current = result.initial_energy;
  double temperature = sched.t0;
  int stalled = 0;
  for (int sweep = 0; sweep < sched.max_sweeps; ++sweep) {
    int accepted = 0;
    for (std::size_t i : free_sites) {
      const std::uint8_t old = x.cells[i];
      // Uniform over the other candidate labels.
      std::size_t pick = static_cast<std::size_t>(rng.below(labels.size() - 1));
      std::uint8_t proposal = labels[pick];
      if (proposal == old) proposal = labels.back();
      const double delta = local(i, proposal) - local(i, old);
      const double u = rng.uniform();
      if (delta <= 0.0 || u < std::exp(-delta / temperature)) {
        x.cells[i] = proposal;
        current += delta;
        ++accepted;
        if (current < result.energy - 1e-12) {
          result.energy = current;
          result.labels = x;
        }
      }
    }
    result.sweeps = sweep + 1;
    stalled = accepted == 0 ? stalled + 1 : 0;
    if (stalled >= sched.stall_sweeps) break;
    temperature *= sched.c;
  }
  // Report the exact energy of the returned configuration.
  result.energy = energy(result.labels, obs, p);
  return result;
}

namespace {

constexpr std::uint8_t kUnassigned = 0;
constexpr std::uint8_t kAssigned = 1;

}  // namespace

LabelGrid stitch_slice(std::span<const SubdomainLabels> parts, const BrainMask& mask, int z, const EnergyParams& p,
                       const AnnealSchedule& sched) {
  const Dims& d = mask.dims();
  if (z < 0 || z >= d.nz) fail(ErrorKind::Dimension, "slice index outside the volume");
  std::vector<const SubdomainLabels*> rects;
  for (const auto& part : parts) {
    if (part.box.lo[2] <= z && z <= part.box.hi[2]) rects.push_back(&part);
  }
  std::sort(rects.begin(), rects.end(), [](const SubdomainLabels* l, const SubdomainLabels* r) {
    if (l->box.lo[1] != r->box.lo[1]) return l->box.lo[1] < r->box.lo[1];
    if (l->box.lo[0] != r->box.lo[0]) return l->box.lo[0] < r->box.lo[0];
    return l->subdomain_id < r->subdomain_id;
  });

  LabelGrid canvas(d.ny, d.nx, code(Tissue::Background));
  std::vector<std::uint8_t> state(canvas.cells.size(), kUnassigned);
  const std::uint64_t slice_seed = hash_combine(sched.seed, static_cast<std::uint64_t>(z));

  for (std::size_t r = 0; r < rects.size(); ++r) {
    const SubdomainLabels& part = *rects[r];
    const Box& box = part.box;
    const int x0 = box.lo[0], x1 = box.hi[0], y0 = box.lo[1], y1 = box.hi[1];
    auto incoming = [&](int y, int x) { return part.labels.at(x - x0, y - y0, z - box.lo[2]); };
    auto in_rect = [&](int y, int x) { return x >= x0 && x <= x1 && y >= y0 && y <= y1; };

    // Overlap = rectangle pixels already on the canvas.
    int oy0 = y1 + 1, oy1 = y0 - 1, ox0 = x1 + 1, ox1 = x0 - 1;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if (state[canvas.index(y, x)] == kAssigned) {
          oy0 = std::min(oy0, y);
          oy1 = std::max(oy1, y);
          ox0 = std::min(ox0, x);
          ox1 = std::max(ox1, x);
        }

    if (oy0 <= oy1) {
      const int rows = oy1 - oy0 + 1, cols = ox1 - ox0 + 1;
      OverlapObservation obs;
      obs.obs_a = LabelGrid(rows, cols, code(Tissue::Background));
      obs.obs_b = LabelGrid(rows, cols, code(Tissue::Background));
      obs.clamp.assign(static_cast<std::size_t>(rows) * cols, Clamp::Free);
      obs.active.assign(static_cast<std::size_t>(rows) * cols, 0);
      static constexpr int kNbr[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
      for (int y = oy0; y <= oy1; ++y) {
        for (int x = ox0; x <= ox1; ++x) {
          const std::size_t ci = canvas.index(y, x);
          if (state[ci] != kAssigned) continue;
          const std::size_t li = obs.obs_a.index(y - oy0, x - ox0);
          obs.obs_a.cells[li] = canvas.cells[ci];
          obs.obs_b.cells[li] = incoming(y, x);
          obs.active[li] = mask.inside(x, y, z);
          bool touches_canvas = false, touches_new = false;
          for (const auto& n : kNbr) {
            const int yy = y + n[0], xx = x + n[1];
            if (yy < 0 || xx < 0 || yy >= d.ny || xx >= d.nx) continue;
            const bool assigned = state[canvas.index(yy, xx)] == kAssigned;
            if (assigned && !in_rect(yy, xx)) touches_canvas = true;
            if (!assigned && in_rect(yy, xx)) touches_new = true;
          }
          if (touches_canvas) {
            obs.clamp[li] = Clamp::ToA;
          } else if (touches_new) {
            obs.clamp[li] = Clamp::ToB;
          }
        }
      }
      AnnealSchedule s = sched;
      s.seed = hash_combine(slice_seed, r);
      const AnnealResult fused = sa_map_estimate(obs, p, s);
      for (int y = oy0; y <= oy1; ++y)
        for (int x = ox0; x <= ox1; ++x) {
          const std::size_t li = obs.obs_a.index(y - oy0, x - ox0);
          if (obs.active[li]) canvas.at(y, x) = fused.labels.cells[li];
        }
    }

    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const std::size_t ci = canvas.index(y, x);
        if (state[ci] == kAssigned) continue;
        canvas.cells[ci] = incoming(y, x);
        state[ci] = kAssigned;
      }
  }

  for (int y = 0; y < d.ny; ++y)
    for (int x = 0; x < d.nx; ++x) {
      const std::size_t ci = canvas.index(y, x);
      if (!mask.inside(x, y, z)) {
        canvas.cells[ci] = code(Tissue::Background);
      } else if (state[ci] != kAssigned) {
        fail(ErrorKind::Validation, "slice " + std::to_string(z) + " has an uncovered in-mask pixel");
      }
    }
  return canvas;
}

LabelVolume assemble_volume(std::span<const SubdomainLabels> parts, const PartitionTree& tree, const BrainMask& mask,
                            const EnergyParams& p, const AnnealSchedule& sched, int threads) {
  p.validate();
  sched.validate();
  if (mask.dims() != tree.dims) fail(ErrorKind::Dimension, "mask does not match the partition");
  std::vector<std::uint8_t> have(tree.leaves.size(), 0);
  for (const auto& part : parts) {
    if (part.subdomain_id < 0 || static_cast<std::size_t>(part.subdomain_id) >= tree.leaves.size()) {
      fail(ErrorKind::Validation, "classified subdomain id not in the partition");
    }
    if (part.box != tree.leaves[part.subdomain_id].overlap_box || part.labels.dims() != part.box.dims()) {
      fail(ErrorKind::Validation, "classified subdomain does not cover its overlap box");
    }
    have[part.subdomain_id] = 1;
  }
  for (std::size_t i = 0; i < have.size(); ++i) {
    if (!have[i]) fail(ErrorKind::Validation, "subdomain " + std::to_string(i) + " has no classification");
  }

  const Dims& d = mask.dims();
  LabelVolume out(d, mask.spacing(), code(Tissue::Background));
  parallel_for(static_cast<std::size_t>(d.nz), threads, [&](std::size_t zi) {
    const int z = static_cast<int>(zi);
    LabelGrid slice = stitch_slice(parts, mask, z, p, sched);
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) out.at(x, y, z) = slice.at(y, x);
  });
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!mask.inside(i)) out[i] = code(Tissue::Background);
  }
  return out;
}

SeamStats seam_statistics(const LabelVolume& labels, const BrainMask& mask, const PartitionTree& tree,
                          std::uint64_t seed, int controls_per_seam) {
  if (labels.dims() != tree.dims || mask.dims() != tree.dims) fail(ErrorKind::Dimension, "inputs differ in size");
  SeamStats st;
  Rng rng(seed);
  auto count_plane = [&](const Box& box, int axis, int plane, std::size_t& pairs, std::size_t& changes) {
    Box face = box;
    face.lo[axis] = plane;
    face.hi[axis] = plane;
    for (int z = face.lo[2]; z <= face.hi[2]; ++z)
      for (int y = face.lo[1]; y <= face.hi[1]; ++y)
        for (int x = face.lo[0]; x <= face.hi[0]; ++x) {
          std::array<int, 3> q{x, y, z};
          q[axis] -= 1;
          if (!mask.inside(x, y, z) || !mask.inside(q[0], q[1], q[2])) continue;
          ++pairs;
          changes += labels.at(x, y, z) != labels.at(q[0], q[1], q[2]);
        }
  };
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) continue;
    count_plane(node.box, node.axis, node.plane, st.seam_pairs, st.seam_changes);
    // Controls: parallel planes inside the same parent box, away from the cut.
    std::vector<int> candidates;
    for (int q = node.box.lo[node.axis] + 1; q <= node.box.hi[node.axis]; ++q) {
      if (std::abs(q - node.plane) > 2 * tree.margin) candidates.push_back(q);
    }
    if (candidates.empty()) continue;
    for (int k = 0; k < controls_per_seam; ++k) {
      int q = candidates[static_cast<std::size_t>(rng.below(candidates.size()))];
      count_plane(node.box, node.axis, q, st.control_pairs, st.control_changes);
    }
  }
  return st;
}

}  // namespace brainseg
