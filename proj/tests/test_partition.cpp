#include "brainseg/partition.hpp"

#include <cmath>
#include <map>
#include <numeric>

#include "brainseg/phantom.hpp"
#include "helpers.hpp"

using namespace brainseg;

namespace {

// Gain of a cut as the increase in I(R;B) when `region` is replaced by its
// two children, computed from probabilities rather than counts.
double oracle_gain(const HistogramModel& m, const Box& region, int axis, int plane) {
  const auto pb = m.global_probs();
  auto term = [&](const Box& r) {
    const auto c = m.region_counts(r);
    const double nr = static_cast<double>(std::accumulate(c.begin(), c.end(), std::size_t{0}));
    double s = 0.0;
    for (std::size_t b = 0; b < c.size(); ++b) {
      if (c[b] == 0) continue;
      const double p_br = c[b] / nr;
      s += (nr / m.total()) * p_br * std::log2(p_br / pb[b]);
    }
    return s;
  };
  Box lo = region, hi = region;
  lo.hi[axis] = plane - 1;
  hi.lo[axis] = plane;
  return term(lo) + term(hi) - term(region);
}

struct OracleSplit {
  int axis = -1, plane = -1;
  double gain = -1.0;
};

OracleSplit exhaustive(const HistogramModel& m, const Box& region, int min_extent) {
  OracleSplit best;
  for (int a = 0; a < 3; ++a) {
    for (int p = region.lo[a] + min_extent; p <= region.hi[a] + 1 - min_extent; ++p) {
      const double g = oracle_gain(m, region, a, p);
      if (g > best.gain + 1e-12) best = {a, p, g};
    }
  }
  return best;
}

}  // namespace

TEST_CASE("histogram bookkeeping") {
  const Dims d{8, 8, 8};
  const ScalarVolume img = testing::random_volume(d, 2);
  const HistogramModel m(img, testing::full_mask(d), 16);
  CHECK(m.total() == 512);
  const auto p = m.global_probs();
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
  const Box half{{0, 0, 0}, {3, 7, 7}};
  CHECK(m.region_prob(half) == doctest::Approx(0.5));
  const auto q = m.conditional_probs(half);
  CHECK(std::accumulate(q.begin(), q.end(), 0.0) == doctest::Approx(1.0));
  CHECK_FAILS_WITH(HistogramModel(ScalarVolume(d, {}, 0.5f), testing::full_mask(d), 16), ErrorKind::Degenerate);
  CHECK_FAILS_WITH(HistogramModel(img, BrainMask(d, {}, 0), 16), ErrorKind::Validation);
}

TEST_CASE("region MI is bounded and zero for a single region") {
  const Dims d{8, 8, 8};
  const ScalarVolume img = testing::random_volume(d, 5);
  const HistogramModel m(img, testing::full_mask(d), 8);
  const Box whole = Box::whole(d);
  CHECK(std::abs(region_mi(m, std::span<const Box>(&whole, 1))) < 1e-12);

  std::vector<Box> regions;
  for (int x = 0; x < 8; x += 4)
    for (int y = 0; y < 8; y += 4) regions.push_back(Box{{x, y, 0}, {x + 3, y + 3, 7}});
  const double mi = region_mi(m, regions);
  CHECK(mi >= 0.0);
  CHECK(mi <= std::log2(4.0) + 1e-12);
  CHECK(mi <= std::log2(8.0) + 1e-12);

  regions.pop_back();
  CHECK_FAILS_WITH(region_mi(m, regions), ErrorKind::Validation);
  regions.push_back(Box{{0, 0, 0}, {7, 7, 7}});
  CHECK_FAILS_WITH(region_mi(m, regions), ErrorKind::Validation);
}

TEST_CASE("split gain equals the MI increase") {
  const Dims d{12, 10, 9};
  const ScalarVolume img = testing::random_volume(d, 17);
  const HistogramModel m(img, testing::full_mask(d), 12);
  const Box whole = Box::whole(d);
  for (int a = 0; a < 3; ++a) {
    for (int p = 1; p < d[a]; ++p) {
      const double g = split_gain(m, whole, a, p);
      CHECK(g >= 0.0);
      Box lo = whole, hi = whole;
      lo.hi[a] = p - 1;
      hi.lo[a] = p;
      const std::array<Box, 2> kids{lo, hi};
      CHECK(std::abs(g - region_mi(m, kids)) < 1e-12);
    }
  }
  CHECK_FAILS_WITH(split_gain(m, whole, 0, 0), ErrorKind::Degenerate);
  CHECK_FAILS_WITH(split_gain(m, whole, 3, 4), ErrorKind::Validation);
}

TEST_CASE("two-halves volume splits exactly at the boundary") {
  const Dims d{16, 16, 16};
  ScalarVolume img(d, {}, 0.0f);
  for (int z = 0; z < 16; ++z)
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) img.at(x, y, z) = y < 8 ? 0.2f : 0.8f;
  const HistogramModel m(img, testing::full_mask(d), 16);
  PartitionParams p;
  p.min_extent_voxels = 5;
  const auto s = best_split(m, Box::whole(d), p);
  REQUIRE(s);
  CHECK(s->axis == 1);
  CHECK(s->plane == 8);
  CHECK(s->gain == doctest::Approx(1.0));
}

TEST_CASE("best split matches the exhaustive scan") {
  PartitionParams p;
  p.min_extent_voxels = 3;
  p.margin = 1;
  p.min_gain_bits = 0.0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Dims d{10, 9, 8};
    const ScalarVolume img = testing::random_volume(d, seed);
    BrainMask mask(d, {}, 1);
    mask.at(0, 0, 0) = 0;
    const HistogramModel m(img, mask, 8);
    for (const Box& region : {Box::whole(d), Box{{1, 2, 0}, {8, 8, 6}}}) {
      const auto s = best_split(m, region, p);
      const OracleSplit o = exhaustive(m, region, p.min_extent_voxels);
      REQUIRE(s);
      CHECK(s->axis == o.axis);
      CHECK(s->plane == o.plane);
      CHECK(std::abs(s->gain - o.gain) < 1e-12);
    }
  }
}

TEST_CASE("small regions and weak gains are not split") {
  const Dims d{8, 8, 8};
  const ScalarVolume img = testing::random_volume(d, 3);
  const HistogramModel m(img, testing::full_mask(d), 8);
  PartitionParams p;
  p.min_extent_voxels = 5;
  CHECK_FALSE(best_split(m, Box::whole(d), p));
  p.min_extent_voxels = 4;
  p.min_gain_bits = 10.0;
  CHECK_FALSE(best_split(m, Box::whole(d), p));
}

TEST_CASE("partition tree invariants on a phantom") {
  PhantomSpec spec = PhantomSpec::standard(2);
  spec.dims = Dims{32, 32, 32};
  const Phantom ph = generate_phantom(spec);
  const ScalarVolume& t1 = ph.volume.channel(Channel::T1w);
  PartitionParams p;
  p.max_regions = 12;
  const PartitionTree tree = partition_volume(t1, ph.volume.mask(), p);
  REQUIRE(tree.leaves.size() >= 2);
  CHECK(static_cast<int>(tree.leaves.size()) <= p.max_regions);

  // Cores tile the grid exactly once.
  std::vector<int> cover(spec.dims.voxel_count(), 0);
  for (const Subdomain& s : tree.leaves) {
    CHECK(s.core_box.extent(0) >= p.min_extent_voxels);
    CHECK(s.core_box.extent(1) >= p.min_extent_voxels);
    CHECK(s.core_box.extent(2) >= p.min_extent_voxels);
    CHECK(s.overlap_box.contains(s.core_box));
    CHECK(s.overlap_box.within(spec.dims));
    for (int z = s.core_box.lo[2]; z <= s.core_box.hi[2]; ++z)
      for (int y = s.core_box.lo[1]; y <= s.core_box.hi[1]; ++y)
        for (int x = s.core_box.lo[0]; x <= s.core_box.hi[0]; ++x) ++cover[t1.index(x, y, z)];
  }
  for (int c : cover) CHECK(c == 1);

  // Gains are non-negative, sum to total_mi and total_mi is I(R;B) of the leaves.
  double sum = 0.0;
  for (const PartitionNode& n : tree.nodes) {
    if (n.is_leaf()) continue;
    CHECK(n.gain >= 0.0);
    sum += n.gain;
  }
  CHECK(std::abs(sum - tree.total_mi) < 1e-9);
  const HistogramModel m(t1, ph.volume.mask(), p.bin_count);
  std::vector<Box> cores;
  for (const Subdomain& s : tree.leaves) cores.push_back(s.core_box);
  CHECK(std::abs(region_mi(m, cores) - tree.total_mi) < 1e-9);
  CHECK(tree.total_mi <= std::log2(static_cast<double>(tree.leaves.size())) + 1e-12);

  // Deterministic.
  const PartitionTree again = partition_volume(t1, ph.volume.mask(), p);
  REQUIRE(again.leaves.size() == tree.leaves.size());
  for (std::size_t i = 0; i < tree.leaves.size(); ++i) CHECK(again.leaves[i].core_box == tree.leaves[i].core_box);
}

TEST_CASE("max_regions 1 yields a single subdomain") {
  const Dims d{16, 16, 16};
  PartitionParams p;
  p.max_regions = 1;
  const PartitionTree tree = partition_volume(testing::random_volume(d, 1), testing::full_mask(d), p);
  REQUIRE(tree.leaves.size() == 1);
  CHECK(tree.leaves[0].overlap_box == Box::whole(d));
  CHECK(tree.total_mi == 0.0);
}

TEST_CASE("overlap expansion touches internal faces only") {
  const Dims d{20, 20, 20};
  const Box core{{0, 5, 10}, {9, 19, 14}};
  const Box o = expand_internal_faces(core, d, 2);
  CHECK(o == Box{{0, 3, 8}, {11, 19, 16}});
  const Box edge{{1, 0, 0}, {18, 19, 19}};
  CHECK(expand_internal_faces(edge, d, 2) == Box{{0, 0, 0}, {19, 19, 19}});
}

TEST_CASE("parameter validation") {
  PartitionParams p;
  p.bin_count = 1;
  CHECK_FAILS_WITH(p.validate(), ErrorKind::Config);
  p = {};
  p.min_extent_voxels = 4;
  CHECK_FAILS_WITH(p.validate(), ErrorKind::Config);
  p = {};
  p.max_regions = 0;
  CHECK_FAILS_WITH(p.validate(), ErrorKind::Config);
}

TEST_CASE("subdomain statistics") {
  const Dims d{10, 10, 10};
  ScalarVolume img(d, {}, 0.0f);
  LabelVolume lab(d, {}, 0);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const bool wm = (i % 2) == 0;
    lab[i] = code(wm ? Tissue::Wm : Tissue::Gm);
    img[i] = wm ? ((i % 4) == 0 ? 0.8f : 0.6f) : 0.4f;
  }
  Subdomain s;
  s.core_box = Box::whole(d);
  const SubdomainStats st = subdomain_stats(img, testing::full_mask(d), lab, s);
  CHECK(st.mean == doctest::Approx(0.55));
  CHECK(st.cnr.kind == Cnr::Kind::Finite);
  // GM std 0, WM std 0.1: CNR = 0.3 / sqrt(0.01 / 2).
  CHECK(st.cnr.value == doctest::Approx(0.3 / std::sqrt(0.005)).epsilon(1e-5));

  LabelVolume gm_only(d, {}, code(Tissue::Gm));
  CHECK(subdomain_stats(img, testing::full_mask(d), gm_only, s).cnr.kind == Cnr::Kind::Absent);
}

TEST_CASE("face-adjacent subdomains overlap by twice the margin") {
  PhantomSpec spec = PhantomSpec::standard(8);
  spec.dims = Dims{40, 40, 40};
  const Phantom ph = generate_phantom(spec);
  PartitionParams p;
  p.max_regions = 16;
  const PartitionTree tree = partition_volume(ph.volume.channel(Channel::T1w), ph.volume.mask(), p);
  int adjacent = 0;
  for (const Subdomain& a : tree.leaves)
    for (const Subdomain& b : tree.leaves) {
      for (int axis = 0; axis < 3; ++axis) {
        if (a.core_box.hi[axis] + 1 != b.core_box.lo[axis]) continue;
        bool touching = true;
        for (int o = 0; o < 3; ++o) {
          if (o != axis && a.core_box.intersect(b.core_box).extent(o) <= 0) touching = false;
        }
        if (!touching) continue;
        ++adjacent;
        const int thickness = a.overlap_box.hi[axis] - b.overlap_box.lo[axis] + 1;
        CHECK(thickness == 2 * p.margin);
      }
    }
  CHECK(adjacent >= static_cast<int>(tree.leaves.size()) - 1);
}
