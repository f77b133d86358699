#include "brainseg/stitch.hpp"

#include <cmath>
#include <random>

#include "brainseg/phantom.hpp"
#include "helpers.hpp"

using namespace brainseg;

namespace {

LabelGrid random_grid(int rows, int cols, int labels, std::mt19937_64& gen) {
  LabelGrid g(rows, cols);
  std::uniform_int_distribution<int> u(1, labels);
  for (auto& c : g.cells) c = static_cast<std::uint8_t>(u(gen));
  return g;
}

// Direct energy: each site's data term plus each unordered 4-neighbour pair once.
double oracle_energy(const LabelGrid& x, const OverlapObservation& o, const EnergyParams& p) {
  double e = 0.0;
  for (int r = 0; r < x.rows; ++r)
    for (int c = 0; c < x.cols; ++c) {
      const std::size_t i = x.index(r, c);
      if (!o.active[i]) continue;
      e += p.w * ((x.cells[i] != o.obs_a.cells[i]) + (x.cells[i] != o.obs_b.cells[i]));
      if (r + 1 < x.rows && o.active[x.index(r + 1, c)]) e += p.beta * (x.at(r, c) != x.at(r + 1, c));
      if (c + 1 < x.cols && o.active[x.index(r, c + 1)]) e += p.beta * (x.at(r, c) != x.at(r, c + 1));
    }
  return e;
}

// Minimum energy over every assignment of labels 1..k to the free sites.
double exhaustive_map(const OverlapObservation& o, const EnergyParams& p, int k) {
  LabelGrid x = o.obs_a;
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < x.cells.size(); ++i) {
    if (o.clamp[i] == Clamp::ToB) x.cells[i] = o.obs_b.cells[i];
    if (o.clamp[i] == Clamp::Free && o.active[i]) free.push_back(i);
  }
  std::size_t total = 1;
  for (std::size_t i = 0; i < free.size(); ++i) total *= static_cast<std::size_t>(k);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t s : free) {
      x.cells[s] = static_cast<std::uint8_t>(1 + c % k);
      c /= k;
    }
    best = std::min(best, oracle_energy(x, o, p));
  }
  return best;
}

}  // namespace

TEST_CASE("strip observation layout") {
  std::mt19937_64 gen(1);
  const LabelGrid a = random_grid(4, 3, 3, gen), b = random_grid(4, 3, 3, gen);
  const auto v = OverlapObservation::strip(a, b, Orientation::Vertical);
  for (int c = 0; c < 3; ++c) {
    CHECK(v.clamp[a.index(0, c)] == Clamp::ToA);
    CHECK(v.clamp[a.index(3, c)] == Clamp::ToB);
    CHECK(v.clamp[a.index(1, c)] == Clamp::Free);
  }
  const auto h = OverlapObservation::strip(a, b, Orientation::Horizontal);
  for (int r = 0; r < 4; ++r) {
    CHECK(h.clamp[a.index(r, 0)] == Clamp::ToA);
    CHECK(h.clamp[a.index(r, 2)] == Clamp::ToB);
  }
  CHECK_FAILS_WITH(OverlapObservation::strip(a, LabelGrid(3, 3), Orientation::Vertical), ErrorKind::Dimension);
}

TEST_CASE("energy matches the direct sum") {
  std::mt19937_64 gen(2);
  const EnergyParams p{1.3, 0.6};
  for (int t = 0; t < 20; ++t) {
    auto o = OverlapObservation::strip(random_grid(5, 4, 4, gen), random_grid(5, 4, 4, gen), Orientation::Vertical);
    for (auto& a : o.active) a = (gen() % 5) != 0;
    const LabelGrid x = random_grid(5, 4, 4, gen);
    CHECK(std::abs(energy(x, o, p) - oracle_energy(x, o, p)) < 1e-12);
  }
  // Agreeing observations of a constant field cost nothing.
  const LabelGrid c(3, 4, 2);
  CHECK(energy(c, OverlapObservation::strip(c, c, Orientation::Horizontal), p) == 0.0);
}

TEST_CASE("annealing reaches the exhaustive optimum on small strips") {
  std::mt19937_64 gen(3);
  const EnergyParams p{1.0, 0.7};
  AnnealSchedule sched;
  int hits = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    // 5 x 4 vertical strip: 12 free sites.
    const LabelGrid a = random_grid(5, 4, 3, gen);
    LabelGrid b = a;
    for (int k = 0; k < 5; ++k) b.cells[gen() % b.cells.size()] = static_cast<std::uint8_t>(1 + gen() % 3);
    const auto o = OverlapObservation::strip(a, b, Orientation::Vertical);
    sched.seed = static_cast<std::uint64_t>(t);
    const AnnealResult r = sa_map_estimate(o, p, sched);
    CHECK(r.energy <= r.initial_energy + 1e-12);
    CHECK(std::abs(r.energy - oracle_energy(r.labels, o, p)) < 1e-12);
    for (std::size_t i = 0; i < o.clamp.size(); ++i) {
      if (o.clamp[i] == Clamp::ToA) CHECK(r.labels.cells[i] == a.cells[i]);
      if (o.clamp[i] == Clamp::ToB) CHECK(r.labels.cells[i] == b.cells[i]);
    }
    const double opt = exhaustive_map(o, p, 3);
    CHECK(r.energy >= opt - 1e-12);
    hits += std::abs(r.energy - opt) < 1e-9;
  }
  CHECK(hits >= trials * 9 / 10);
}

TEST_CASE("agreeing observations are kept when smoothing is weak") {
  std::mt19937_64 gen(4);
  const LabelGrid a = random_grid(6, 6, 3, gen);
  // beta < w / 2: no flip can pay for its data cost.
  const AnnealResult r = sa_map_estimate(OverlapObservation::strip(a, a, Orientation::Vertical), {1.0, 0.45}, {});
  CHECK(r.labels == a);
  CHECK(r.energy == r.initial_energy);
}

TEST_CASE("annealing is deterministic for a fixed seed") {
  std::mt19937_64 gen(5);
  const auto o = OverlapObservation::strip(random_grid(6, 4, 3, gen), random_grid(6, 4, 3, gen), Orientation::Vertical);
  AnnealSchedule s;
  s.seed = 9;
  const AnnealResult x = sa_map_estimate(o, {}, s), y = sa_map_estimate(o, {}, s);
  CHECK(x.labels == y.labels);
  CHECK(x.sweeps == y.sweeps);
}

TEST_CASE("schedule and weight validation") {
  AnnealSchedule s;
  s.c = 1.0;
  CHECK_FAILS_WITH(s.validate(), ErrorKind::Config);
  s = {};
  s.t0 = 0.0;
  CHECK_FAILS_WITH(s.validate(), ErrorKind::Config);
  s = {};
  s.max_sweeps = 0;
  CHECK_FAILS_WITH(s.validate(), ErrorKind::Config);
  CHECK_FAILS_WITH((EnergyParams{0.0, 1.0}.validate()), ErrorKind::Config);
  CHECK_FAILS_WITH((EnergyParams{1.0, -0.1}.validate()), ErrorKind::Config);
}

namespace {

struct Fixture {
  Phantom phantom;
  PartitionTree tree;
  std::vector<SubdomainLabels> parts;
};

Fixture agreeing_parts() {
  PhantomSpec s = PhantomSpec::standard(6);
  s.dims = Dims{32, 32, 32};
  Fixture f{generate_phantom(s), {}, {}};
  PartitionParams pp;
  pp.max_regions = 8;
  f.tree = partition_volume(f.phantom.volume.channel(Channel::T1w), f.phantom.volume.mask(), pp);
  for (const Subdomain& sub : f.tree.leaves) {
    SubdomainLabels part;
    part.subdomain_id = sub.id;
    part.box = sub.overlap_box;
    part.labels = crop(f.phantom.truth, sub.overlap_box);
    f.parts.push_back(std::move(part));
  }
  return f;
}

}  // namespace

TEST_CASE("assembly of agreeing parts reproduces the labels") {
  Fixture f = agreeing_parts();
  REQUIRE(f.tree.leaves.size() > 2);
  const LabelVolume out = assemble_volume(f.parts, f.tree, f.phantom.volume.mask(), {1.0, 0.45}, {}, 1);
  CHECK(out == f.phantom.truth);
}

TEST_CASE("assembly resolves conflicts inside overlaps only and is thread invariant") {
  Fixture f = agreeing_parts();
  std::mt19937_64 gen(7);
  // Corrupt every part's overlap margin with random tissue labels.
  for (auto& part : f.parts) {
    const Box core = f.tree.leaves[part.subdomain_id].core_box;
    for (int z = part.box.lo[2]; z <= part.box.hi[2]; ++z)
      for (int y = part.box.lo[1]; y <= part.box.hi[1]; ++y)
        for (int x = part.box.lo[0]; x <= part.box.hi[0]; ++x) {
          if (core.contains(x, y, z) || !f.phantom.volume.mask().inside(x, y, z)) continue;
          if (gen() % 3 == 0) part.labels.at(x - part.box.lo[0], y - part.box.lo[1], z - part.box.lo[2]) = 1 + gen() % 3;
        }
  }
  const BrainMask& mask = f.phantom.volume.mask();
  AnnealSchedule sched;
  sched.seed = 3;
  const LabelVolume one = assemble_volume(f.parts, f.tree, mask, {}, sched, 1);
  const LabelVolume four = assemble_volume(f.parts, f.tree, mask, {}, sched, 4);
  CHECK(one == four);
  for (std::size_t i = 0; i < one.size(); ++i) {
    if (!mask.inside(i)) {
      CHECK(one[i] == 0);
    } else {
      CHECK(one[i] >= 1);
      CHECK(one[i] <= 4);
    }
  }
  const SeamStats st = seam_statistics(one, mask, f.tree, 1);
  CHECK(st.seam_pairs > 0);
  CHECK(st.control_pairs > 0);
}

TEST_CASE("assembly input validation") {
  Fixture f = agreeing_parts();
  const BrainMask& mask = f.phantom.volume.mask();
  auto missing = f.parts;
  missing.pop_back();
  CHECK_FAILS_WITH(assemble_volume(missing, f.tree, mask, {}, {}, 1), ErrorKind::Validation);
  auto wrong_box = f.parts;
  wrong_box[0].box.hi[0] -= 1;
  CHECK_FAILS_WITH(assemble_volume(wrong_box, f.tree, mask, {}, {}, 1), ErrorKind::Validation);
  CHECK_FAILS_WITH(stitch_slice(f.parts, mask, 99, {}, {}), ErrorKind::Dimension);
  // A slice with no covering part leaves in-mask pixels unassigned.
  std::vector<SubdomainLabels> one_part{f.parts[0]};
  bool any_uncovered = false;
  for (int z = 0; z < 32 && !any_uncovered; ++z) {
    try {
      stitch_slice(one_part, mask, z, {}, {});
    } catch (const Error& e) {
      any_uncovered = e.kind() == ErrorKind::Validation;
    }
  }
  CHECK(any_uncovered);
}

TEST_CASE("seam statistics on a constant field") {
  Fixture f = agreeing_parts();
  const LabelVolume flat(f.phantom.truth.dims(), {}, code(Tissue::Gm));
  const SeamStats st = seam_statistics(flat, f.phantom.volume.mask(), f.tree, 2);
  CHECK(st.seam_changes == 0);
  CHECK(st.control_changes == 0);
  CHECK(st.seam_rate() == 0.0);
}
