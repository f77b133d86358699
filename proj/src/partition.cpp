#include "brainseg/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace brainseg {
namespace {

// Gains closer than this are treated as ties so the fixed axis/plane order,
// not summation rounding, decides between symmetric cuts.
constexpr double kTieTolerance = 1e-12;

double entropy_bits(const HistogramModel& m, std::span<const std::size_t> counts, std::size_t n) {
  if (n == 0) return 0.0;
  double s = 0.0;
  for (std::size_t c : counts) s += m.xlog2x(c);
  return std::log2(static_cast<double>(n)) - s / static_cast<double>(n);
}

// p(r) * JS_pi(p(b|r1), p(b|r2)) from bin counts.
double gain_from_counts(const HistogramModel& m, std::span<const std::size_t> lower, std::size_t n_lower,
                        std::span<const std::size_t> upper, std::size_t n_upper, std::span<std::size_t> scratch) {
  const std::size_t n = n_lower + n_upper;
  for (std::size_t b = 0; b < scratch.size(); ++b) scratch[b] = lower[b] + upper[b];
  const double pi1 = static_cast<double>(n_lower) / static_cast<double>(n);
  const double pi2 = static_cast<double>(n_upper) / static_cast<double>(n);
  double js = entropy_bits(m, scratch, n) - pi1 * entropy_bits(m, lower, n_lower) - pi2 * entropy_bits(m, upper, n_upper);
  js = std::max(js, 0.0);
  return static_cast<double>(n) / static_cast<double>(m.total()) * js;
}

void check_region(const HistogramModel& m, const Box& region) {
  if (region.empty() || !region.within(m.dims())) fail(ErrorKind::Dimension, "region lies outside the volume");
}

bool boxes_overlap(const Box& a, const Box& b) { return !a.intersect(b).empty(); }

}  // namespace

void PartitionParams::validate() const {
  if (bin_count < 2 || bin_count > 4096) fail(ErrorKind::Config, "bin_count must lie in [2, 4096]");
  if (max_regions < 1) fail(ErrorKind::Config, "max_regions must be >= 1");
  if (!(min_gain_bits >= 0.0)) fail(ErrorKind::Config, "min_gain_bits must be >= 0");
  if (margin < 0) fail(ErrorKind::Config, "margin must be >= 0");
  if (min_extent_voxels <= 2 * margin || min_extent_voxels < 1) {
    fail(ErrorKind::Config, "min_extent_voxels must exceed 2 * margin");
  }
}

HistogramModel::HistogramModel(const ScalarVolume& image, const BrainMask& mask, int bins)
    : dims_(image.dims()), bins_(bins) {
  if (bins < 2 || bins > 4096) fail(ErrorKind::Validation, "bin count must lie in [2, 4096]");
  if (mask.dims() != image.dims()) fail(ErrorKind::Dimension, "mask does not match image");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < image.size(); ++i) {
    if (!mask.inside(i)) continue;
    lo = std::min<double>(lo, image[i]);
    hi = std::max<double>(hi, image[i]);
    ++total_;
  }
  if (total_ == 0) fail(ErrorKind::Validation, "empty mask");
  if (!(hi > lo)) fail(ErrorKind::Degenerate, "image is constant inside the mask");

  edges_.resize(static_cast<std::size_t>(bins) + 1);
  const double width = (hi - lo) / bins;
  for (int b = 0; b <= bins; ++b) edges_[b] = lo + width * b;
  edges_.back() = hi;

  bin_index_.assign(image.size(), -1);
  global_.assign(static_cast<std::size_t>(bins), 0);
  for (std::size_t i = 0; i < image.size(); ++i) {
    if (!mask.inside(i)) continue;
    auto b = static_cast<int>(std::floor((image[i] - lo) / (hi - lo) * bins));
    b = std::clamp(b, 0, bins - 1);
    bin_index_[i] = static_cast<std::int16_t>(b);
    ++global_[b];
  }

  xlogx_.resize(total_ + 1);
  xlogx_[0] = 0.0;
  for (std::size_t n = 1; n <= total_; ++n) xlogx_[n] = static_cast<double>(n) * std::log2(static_cast<double>(n));
}

std::vector<double> HistogramModel::global_probs() const {
  std::vector<double> p(global_.size());
  for (std::size_t b = 0; b < p.size(); ++b) p[b] = static_cast<double>(global_[b]) / static_cast<double>(total_);
  return p;
}

std::vector<std::size_t> HistogramModel::region_counts(const Box& box) const {
  check_region(*this, box);
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins_), 0);
  for (int z = box.lo[2]; z <= box.hi[2]; ++z)
    for (int y = box.lo[1]; y <= box.hi[1]; ++y)
      for (int x = box.lo[0]; x <= box.hi[0]; ++x) {
        int b = bin_of(x, y, z);
        if (b >= 0) ++counts[b];
      }
  return counts;
}

double HistogramModel::region_prob(const Box& box) const {
  auto c = region_counts(box);
  return static_cast<double>(std::accumulate(c.begin(), c.end(), std::size_t{0})) / static_cast<double>(total_);
}

std::vector<double> HistogramModel::conditional_probs(const Box& box) const {
  auto c = region_counts(box);
  std::size_t n = std::accumulate(c.begin(), c.end(), std::size_t{0});
  if (n == 0) fail(ErrorKind::Degenerate, "region has no in-mask voxels");
  std::vector<double> p(c.size());
  for (std::size_t b = 0; b < c.size(); ++b) p[b] = static_cast<double>(c[b]) / static_cast<double>(n);
  return p;
}

HistogramModel build_histogram(const ScalarVolume& image, const BrainMask& mask, int bins) {
  return HistogramModel(image, mask, bins);
}

double region_mi(const HistogramModel& model, std::span<const Box> regions) {
  for (std::size_t i = 0; i < regions.size(); ++i) {
    check_region(model, regions[i]);
    for (std::size_t j = i + 1; j < regions.size(); ++j) {
      if (boxes_overlap(regions[i], regions[j])) fail(ErrorKind::Validation, "regions overlap");
    }
  }
  const auto pb = model.global_probs();
  const double n_total = static_cast<double>(model.total());
  std::size_t covered = 0;
  double mi = 0.0;
  for (const Box& r : regions) {
    auto counts = model.region_counts(r);
    std::size_t nr = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    covered += nr;
    if (nr == 0) continue;
    const double pr = static_cast<double>(nr) / n_total;
    for (std::size_t b = 0; b < counts.size(); ++b) {
      if (counts[b] == 0) continue;
      const double pbr = static_cast<double>(counts[b]) / static_cast<double>(nr);
      mi += pr * pbr * std::log2(pbr / pb[b]);
    }
  }
  if (covered != model.total()) fail(ErrorKind::Validation, "regions do not cover the mask");
  return mi;
}

double split_gain(const HistogramModel& model, const Box& region, int axis, int plane) {
  check_region(model, region);
  if (axis < 0 || axis > 2) fail(ErrorKind::Validation, "axis must be 0, 1 or 2");
  if (plane <= region.lo[axis] || plane > region.hi[axis]) {
    fail(ErrorKind::Degenerate, "plane does not divide the region");
  }
  Box lower = region, upper = region;
  lower.hi[axis] = plane - 1;
  upper.lo[axis] = plane;
  auto cl = model.region_counts(lower);
  auto cu = model.region_counts(upper);
  std::size_t nl = std::accumulate(cl.begin(), cl.end(), std::size_t{0});
  std::size_t nu = std::accumulate(cu.begin(), cu.end(), std::size_t{0});
  if (nl == 0 || nu == 0) fail(ErrorKind::Degenerate, "split leaves a child without in-mask voxels");
  std::vector<std::size_t> scratch(cl.size());
  return gain_from_counts(model, cl, nl, cu, nu, scratch);
}

std::optional<Split> best_split(const HistogramModel& model, const Box& region, const PartitionParams& params) {
  check_region(model, region);
  const int min_extent = params.min_extent_voxels;
  bool splittable = false;
  for (int a = 0; a < 3; ++a) splittable = splittable || region.extent(a) >= 2 * min_extent;
  if (!splittable) return std::nullopt;

  const auto bins = static_cast<std::size_t>(model.bins());
  // Per-slice histograms along each axis, filled in one pass over the region.
  std::array<std::vector<std::size_t>, 3> slices;
  for (int a = 0; a < 3; ++a) slices[a].assign(static_cast<std::size_t>(region.extent(a)) * bins, 0);
  for (int z = region.lo[2]; z <= region.hi[2]; ++z)
    for (int y = region.lo[1]; y <= region.hi[1]; ++y)
      for (int x = region.lo[0]; x <= region.hi[0]; ++x) {
        int b = model.bin_of(x, y, z);
        if (b < 0) continue;
        ++slices[0][static_cast<std::size_t>(x - region.lo[0]) * bins + b];
        ++slices[1][static_cast<std::size_t>(y - region.lo[1]) * bins + b];
        ++slices[2][static_cast<std::size_t>(z - region.lo[2]) * bins + b];
      }

  std::vector<std::size_t> parent(bins, 0);
  for (std::size_t s = 0; s < static_cast<std::size_t>(region.extent(0)); ++s)
    for (std::size_t b = 0; b < bins; ++b) parent[b] += slices[0][s * bins + b];
  const std::size_t n_parent = std::accumulate(parent.begin(), parent.end(), std::size_t{0});
  if (n_parent == 0) return std::nullopt;

  std::optional<Split> best;
  std::vector<std::size_t> lower(bins), upper(bins), scratch(bins);
  for (int a = 0; a < 3; ++a) {
    const int extent = region.extent(a);
    if (extent < 2 * min_extent) continue;
    std::fill(lower.begin(), lower.end(), 0);
    std::size_t n_lower = 0;
    // Planes sweep upward; the lower child grows one slice at a time.
    for (int s = 0; s + 1 < extent; ++s) {
      for (std::size_t b = 0; b < bins; ++b) {
        std::size_t c = slices[a][static_cast<std::size_t>(s) * bins + b];
        lower[b] += c;
        n_lower += c;
      }
      const int lower_extent = s + 1;
      const int upper_extent = extent - lower_extent;
      if (lower_extent < min_extent || upper_extent < min_extent) continue;
      const std::size_t n_upper = n_parent - n_lower;
      if (n_lower == 0 || n_upper == 0) continue;
      for (std::size_t b = 0; b < bins; ++b) upper[b] = parent[b] - lower[b];
      double g = gain_from_counts(model, lower, n_lower, upper, n_upper, scratch);
      if (!best || g > best->gain + kTieTolerance) best = Split{a, region.lo[a] + lower_extent, g};
    }
  }
  if (!best || best->gain < params.min_gain_bits) return std::nullopt;
  return best;
}

Box expand_internal_faces(const Box& core, const Dims& dims, int margin) {
  Box out = core;
  for (int a = 0; a < 3; ++a) {
    if (core.lo[a] > 0) out.lo[a] = std::max(0, core.lo[a] - margin);
    if (core.hi[a] < dims[a] - 1) out.hi[a] = std::min(dims[a] - 1, core.hi[a] + margin);
  }
  return out;
}

PartitionTree partition_volume(const ScalarVolume& image, const BrainMask& mask, const PartitionParams& params) {
  params.validate();
  HistogramModel model(image, mask, params.bin_count);

  PartitionTree tree;
  tree.dims = image.dims();
  tree.margin = params.margin;
  tree.nodes.push_back(PartitionNode{Box::whole(image.dims())});

  std::vector<int> leaves{0};
  std::vector<std::optional<Split>> pending{best_split(model, tree.nodes[0].box, params)};

  while (static_cast<int>(leaves.size()) < params.max_regions) {
    int pick = -1;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (!pending[i]) continue;
      if (pick < 0 || pending[i]->gain > pending[pick]->gain + kTieTolerance) pick = static_cast<int>(i);
    }
    if (pick < 0) break;
    const Split s = *pending[pick];
    const int node_index = leaves[pick];
    Box lower = tree.nodes[node_index].box, upper = lower;
    lower.hi[s.axis] = s.plane - 1;
    upper.lo[s.axis] = s.plane;
    const int li = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(PartitionNode{lower, node_index});
    tree.nodes.push_back(PartitionNode{upper, node_index});
    PartitionNode& parent = tree.nodes[node_index];
    parent.left = li;
    parent.right = li + 1;
    parent.axis = s.axis;
    parent.plane = s.plane;
    parent.gain = s.gain;
    tree.total_mi += s.gain;

    leaves[pick] = li;
    pending[pick] = best_split(model, lower, params);
    leaves.insert(leaves.begin() + pick + 1, li + 1);
    pending.insert(pending.begin() + pick + 1, best_split(model, upper, params));
  }

  // Leaf ids follow a left-first depth-first walk.
  std::vector<int> stack{0};
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    PartitionNode& node = tree.nodes[n];
    if (node.is_leaf()) {
      Subdomain sub;
      sub.id = static_cast<int>(tree.leaves.size());
      sub.core_box = node.box;
      sub.overlap_box = expand_internal_faces(node.box, tree.dims, params.margin);
      double sum = 0.0;
      std::size_t count = 0;
      for (int z = node.box.lo[2]; z <= node.box.hi[2]; ++z)
        for (int y = node.box.lo[1]; y <= node.box.hi[1]; ++y)
          for (int x = node.box.lo[0]; x <= node.box.hi[0]; ++x)
            if (mask.inside(x, y, z)) {
              sum += image.at(x, y, z);
              ++count;
            }
      sub.mean_intensity = count ? sum / static_cast<double>(count) : 0.0;
      node.leaf_id = sub.id;
      tree.leaves.push_back(sub);
    } else {
      stack.push_back(node.right);
      stack.push_back(node.left);
    }
  }
  return tree;
}

SubdomainStats subdomain_stats(const ScalarVolume& image, const BrainMask& mask, const LabelVolume& labels,
                               const Subdomain& sub) {
  const Box& box = sub.core_box;
  if (box.empty() || !box.within(image.dims()) || mask.dims() != image.dims() || labels.dims() != image.dims()) {
    fail(ErrorKind::Dimension, "subdomain lies outside the volume");
  }
  double sum = 0.0;
  std::size_t n = 0;
  // Welford accumulators for GM and WM.
  struct Acc {
    std::size_t n = 0;
    double mean = 0.0, m2 = 0.0;
    void add(double v) {
      ++n;
      double d = v - mean;
      mean += d / static_cast<double>(n);
      m2 += d * (v - mean);
    }
    double stddev() const { return n ? std::sqrt(m2 / static_cast<double>(n)) : 0.0; }
  } gm, wm;
  for (int z = box.lo[2]; z <= box.hi[2]; ++z)
    for (int y = box.lo[1]; y <= box.hi[1]; ++y)
      for (int x = box.lo[0]; x <= box.hi[0]; ++x) {
        if (!mask.inside(x, y, z)) continue;
        double v = image.at(x, y, z);
        sum += v;
        ++n;
        Tissue t = labels.tissue(x, y, z);
        if (t == Tissue::Gm) gm.add(v);
        if (t == Tissue::Wm) wm.add(v);
      }
  if (n == 0) fail(ErrorKind::Degenerate, "subdomain has no in-mask voxels");
  SubdomainStats st;
  st.mean = sum / static_cast<double>(n);
  if (gm.n < 10 || wm.n < 10) {
    st.cnr = Cnr::absent();
  } else {
    double pooled = std::sqrt((gm.stddev() * gm.stddev() + wm.stddev() * wm.stddev()) / 2.0);
    if (pooled == 0.0) {
      st.cnr = gm.mean == wm.mean ? Cnr{Cnr::Kind::Finite, 0.0} : Cnr::infinite();
    } else {
      st.cnr = cnr_from_moments(gm.mean, gm.stddev(), wm.mean, wm.stddev());
    }
  }
  return st;
}

}  // namespace brainseg
