#include "brainseg/phantom.hpp"

#include <cmath>

#include "helpers.hpp"

using namespace brainseg;

namespace {

PhantomSpec small(std::uint64_t seed = 3) {
  PhantomSpec s = PhantomSpec::standard(seed);
  s.dims = Dims{32, 32, 32};
  return s;
}

}  // namespace

TEST_CASE("noiseless, unbiased phantom is piecewise constant") {
  PhantomSpec s = small();
  s.bias_amplitude = 0.0;
  s.wm_streaks.count = 0;
  for (auto& row : s.tissue_stds) row = {0.0, 0.0, 0.0};
  const Phantom p = generate_phantom(s);
  for (Channel c : {Channel::T1w, Channel::T2w, Channel::PDw}) {
    const ScalarVolume& v = p.volume.channel(c);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto t = p.truth[i];
      const double expected = t == 0 ? 0.0 : s.tissue_means[t][static_cast<int>(c)];
      CHECK(v[i] == static_cast<float>(expected));
    }
  }
}

TEST_CASE("phantom generation is deterministic") {
  const Phantom a = generate_phantom(small(9));
  const Phantom b = generate_phantom(small(9));
  CHECK(a.truth == b.truth);
  for (Channel c : {Channel::T1w, Channel::T2w, Channel::PDw}) CHECK(a.volume.channel(c) == b.volume.channel(c));
  const Phantom other = generate_phantom(small(10));
  CHECK_FALSE(other.volume.channel(Channel::T1w) == a.volume.channel(Channel::T1w));
}

TEST_CASE("ground truth partitions the mask") {
  const Phantom p = generate_phantom(small());
  const auto counts = p.truth.class_counts();
  CHECK(counts[code(Tissue::Csf)] > 0);
  CHECK(counts[code(Tissue::Gm)] > 0);
  CHECK(counts[code(Tissue::Wm)] > 0);
  for (std::size_t i = 0; i < p.truth.size(); ++i) {
    CHECK((p.truth[i] != 0) == p.volume.mask().inside(i));
  }
}

TEST_CASE("empirical class means follow the spec") {
  PhantomSpec s = PhantomSpec::standard(21);
  s.bias_amplitude = 0.0;
  s.wm_streaks.count = 0;
  s.tissue_stds[code(Tissue::Gm)][0] = 0.05;
  s.tissue_stds[code(Tissue::Wm)][0] = 0.05;
  const Phantom p = generate_phantom(s);
  const ScalarVolume& t1 = p.volume.channel(Channel::T1w);
  for (Tissue t : {Tissue::Gm, Tissue::Wm}) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t1.size(); ++i) {
      if (p.truth.tissue(i) == t) {
        sum += t1[i];
        ++n;
      }
    }
    CHECK(n >= 10000);
    CHECK(std::abs(sum / n - s.tissue_means[code(t)][0]) < 0.01);
  }
}

TEST_CASE("nominal CNR closed forms") {
  PhantomSpec s = PhantomSpec::standard();
  CHECK(phantom_cnr(s, Channel::T1w).value == doctest::Approx(2.0));
  CHECK(phantom_cnr(PhantomSpec::low_contrast(), Channel::T1w).value == doctest::Approx(1.0));

  s.tissue_means[code(Tissue::Wm)][0] = s.tissue_means[code(Tissue::Gm)][0];
  CHECK(phantom_cnr(s, Channel::T1w).value == 0.0);

  s = PhantomSpec::standard();
  s.tissue_stds[code(Tissue::Gm)][0] = 0.0;
  s.tissue_stds[code(Tissue::Wm)][0] = 0.2;
  CHECK(phantom_cnr(s, Channel::T1w).value == doctest::Approx(0.2 / std::sqrt(0.02)));

  s.tissue_stds[code(Tissue::Wm)][0] = 0.0;
  CHECK(phantom_cnr(s, Channel::T1w).kind == Cnr::Kind::Infinite);
  s.tissue_means[code(Tissue::Wm)][0] = s.tissue_means[code(Tissue::Gm)][0];
  CHECK_FAILS_WITH(phantom_cnr(s, Channel::T1w), ErrorKind::Degenerate);
}

TEST_CASE("CNR decreases as the GM/WM means approach") {
  PhantomSpec s = PhantomSpec::standard();
  double previous = phantom_cnr(s, Channel::T1w).value;
  for (double wm = 0.68; wm > 0.5; wm -= 0.02) {
    s.tissue_means[code(Tissue::Wm)][0] = wm;
    const double c = phantom_cnr(s, Channel::T1w).value;
    CHECK(c < previous);
    previous = c;
  }
}

TEST_CASE("spec validation and size limits") {
  PhantomSpec s = small();
  s.geometry.gm_radius = 0.95;
  CHECK_FAILS_WITH(s.validate(), ErrorKind::Validation);
  s = small();
  s.tissue_means[1][0] = 1.5;
  CHECK_FAILS_WITH(s.validate(), ErrorKind::Validation);
  s = small();
  s.bias_amplitude = 0.7;
  CHECK_FAILS_WITH(s.validate(), ErrorKind::Validation);
  s = small();
  s.dims = Dims{6, 32, 32};
  CHECK_FAILS_WITH(generate_phantom(s), ErrorKind::Dimension);
}

TEST_CASE("WM streaks darken T1w inside WM only") {
  PhantomSpec s = small(4);
  s.bias_amplitude = 0.0;
  for (auto& row : s.tissue_stds) row = {0.0, 0.0, 0.0};
  s.wm_streaks.count = 3;
  const Phantom p = generate_phantom(s);
  const ScalarVolume& t1 = p.volume.channel(Channel::T1w);
  const float wm = static_cast<float>(s.tissue_means[code(Tissue::Wm)][0]);
  const float dark = static_cast<float>(s.tissue_means[code(Tissue::Wm)][0] * s.wm_streaks.intensity_factor);
  std::size_t darkened = 0;
  for (std::size_t i = 0; i < t1.size(); ++i) {
    if (p.truth.tissue(i) != Tissue::Wm) continue;
    CHECK((t1[i] == wm || t1[i] == dark));
    darkened += t1[i] == dark;
  }
  CHECK(darkened > 0);
}

TEST_CASE("planted myelinated region") {
  PhantomSpec s = small();
  s.mwm_region = PhantomSpec::MwmRegion{{0.0, 0.0, 0.0}, 0.2};
  const Phantom p = generate_phantom(s);
  CHECK(p.truth.count(Tissue::Mwm) > 0);
  CHECK(p.truth.tissue(16, 16, 16) == Tissue::Mwm);
}

TEST_CASE("degraded initializations") {
  const Phantom p = generate_phantom(small());
  SUBCASE("identity") { CHECK(degrade_labels(p.truth, DegradeSpec{}) == p.truth); }
  SUBCASE("CSF erosion only shrinks CSF into GM") {
    const LabelVolume d = degrade_labels(p.truth, DegradeSpec{2, 0.0, 1});
    CHECK(d.count(Tissue::Csf) < p.truth.count(Tissue::Csf));
    CHECK(d.count(Tissue::Csf) + d.count(Tissue::Gm) == p.truth.count(Tissue::Csf) + p.truth.count(Tissue::Gm));
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i] != p.truth[i]) {
        CHECK(p.truth.tissue(i) == Tissue::Csf);
        CHECK(d.tissue(i) == Tissue::Gm);
      }
    }
  }
  SUBCASE("swap fraction is honoured") {
    const LabelVolume d = degrade_labels(p.truth, DegradeSpec{0, 0.2, 5});
    std::size_t swapped = 0, eligible = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const Tissue t = p.truth.tissue(i);
      if (t != Tissue::Gm && t != Tissue::Wm) {
        CHECK(d[i] == p.truth[i]);
        continue;
      }
      ++eligible;
      swapped += d[i] != p.truth[i];
    }
    CHECK(static_cast<double>(swapped) / eligible == doctest::Approx(0.2).epsilon(0.1));
  }
  SUBCASE("invalid settings") { CHECK_FAILS_WITH(degrade_labels(p.truth, DegradeSpec{-1, 0.0, 1}), ErrorKind::Validation); }
}
