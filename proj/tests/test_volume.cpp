#include "brainseg/volume.hpp"

#include "helpers.hpp"

using namespace brainseg;

TEST_CASE("box geometry") {
  Box b{{1, 2, 3}, {4, 4, 3}};
  CHECK(b.extent(0) == 4);
  CHECK(b.extent(1) == 3);
  CHECK(b.extent(2) == 1);
  CHECK(b.voxel_count() == 12);
  CHECK_FALSE(b.empty());
  CHECK(Box{{0, 0, 0}, {-1, 0, 0}}.empty());
  CHECK(b.contains(4, 2, 3));
  CHECK_FALSE(b.contains(5, 2, 3));
  CHECK(b.within(Dims{5, 5, 4}));
  CHECK_FALSE(b.within(Dims{4, 5, 4}));
  const Box i = b.intersect(Box{{3, 0, 0}, {9, 2, 9}});
  CHECK(i == Box{{3, 2, 3}, {4, 2, 3}});
}

TEST_CASE("grid indexing is x fastest") {
  ScalarVolume v(Dims{3, 4, 5}, {}, 0.0f);
  CHECK(v.index(1, 0, 0) == 1);
  CHECK(v.index(0, 1, 0) == 3);
  CHECK(v.index(0, 0, 1) == 12);
  v.at(2, 3, 4) = 7.0f;
  CHECK(v[v.size() - 1] == 7.0f);
}

TEST_CASE("grid construction rejects bad dimensions") {
  CHECK_FAILS_WITH(ScalarVolume(Dims{0, 1, 1}, {}, 0.0f), ErrorKind::Dimension);
  CHECK_FAILS_WITH(ScalarVolume(Dims{2, 2, 2}, {}, std::vector<float>(7)), ErrorKind::Dimension);
}

TEST_CASE("non-finite intensities are rejected") {
  ScalarVolume v(Dims{2, 1, 1}, {}, 0.0f);
  CHECK_NOTHROW(v.check_finite());
  v[1] = std::numeric_limits<float>::quiet_NaN();
  CHECK_FAILS_WITH(v.check_finite(), ErrorKind::Validation);
}

TEST_CASE("label class counts sum to the voxel count") {
  std::mt19937 gen(3);
  LabelVolume l(Dims{5, 6, 7}, {}, 0);
  for (std::size_t i = 0; i < l.size(); ++i) l[i] = static_cast<std::uint8_t>(gen() % kTissueCodes);
  const auto counts = l.class_counts();
  std::size_t total = 0;
  for (auto c : counts) total += c;
  CHECK(total == l.size());
  CHECK_NOTHROW(l.check_codes());
  l[3] = 9;
  CHECK_FAILS_WITH(l.check_codes(), ErrorKind::Validation);
}

TEST_CASE("tissue and channel names round trip") {
  for (int c = 0; c < kTissueCodes; ++c) {
    const Tissue t = static_cast<Tissue>(c);
    CHECK(tissue_from_name(tissue_name(t)) == t);
  }
  CHECK(tissue_name(Tissue::Mwm) == std::string("MWM"));
  CHECK_FALSE(tissue_from_name("bone"));
  for (Channel c : {Channel::T1w, Channel::T2w, Channel::PDw}) CHECK(channel_from_name(channel_name(c)) == c);
}

TEST_CASE("intensity vectors hold at most three channels") {
  IntensityVector v{0.1, 0.2};
  CHECK(v.size() == 2);
  v.push_back(0.3);
  CHECK(v[2] == doctest::Approx(0.3));
  CHECK_FAILS_WITH(v.push_back(0.4), ErrorKind::Dimension);
}

namespace {

MultiChannelVolume two_channel(Dims d) {
  MultiChannelVolume m(testing::full_mask(d));
  m.set_channel(Channel::T1w, testing::random_volume(d, 1));
  m.set_channel(Channel::PDw, testing::random_volume(d, 2));
  return m;
}

}  // namespace

TEST_CASE("multi-channel volume bookkeeping") {
  const Dims d{4, 3, 2};
  MultiChannelVolume m = two_channel(d);
  CHECK(m.has(Channel::T1w));
  CHECK_FALSE(m.has(Channel::T2w));
  CHECK(m.available() == std::vector<Channel>{Channel::T1w, Channel::PDw});
  CHECK_FAILS_WITH(m.channel(Channel::T2w), ErrorKind::Config);
  CHECK_FAILS_WITH(m.set_channel(Channel::T2w, ScalarVolume(Dims{4, 3, 3}, {}, 0.0f)), ErrorKind::Dimension);
  const Channel which[] = {Channel::PDw, Channel::T1w};
  const IntensityVector iv = m.intensities(5, which);
  CHECK(iv.size() == 2);
  CHECK(iv[0] == m.channel(Channel::PDw)[5]);
  CHECK(iv[1] == m.channel(Channel::T1w)[5]);

  MultiChannelVolume empty_mask(BrainMask(d, {}, 0));
  empty_mask.set_channel(Channel::T1w, ScalarVolume(d, {}, 0.0f));
  CHECK_FAILS_WITH(empty_mask.validate(), ErrorKind::Validation);
  CHECK_FAILS_WITH(MultiChannelVolume(testing::full_mask(d)).validate(), ErrorKind::Validation);
}

TEST_CASE("extract_subvolume") {
  const Dims d{6, 5, 4};
  const MultiChannelVolume m = two_channel(d);

  SUBCASE("full box is the identity") {
    const MultiChannelVolume s = extract_subvolume(m, Box::whole(d));
    CHECK(s.channel(Channel::T1w) == m.channel(Channel::T1w));
    CHECK(s.mask() == m.mask());
  }
  SUBCASE("single voxel at the origin") {
    const MultiChannelVolume s = extract_subvolume(m, Box{{0, 0, 0}, {0, 0, 0}});
    CHECK(s.dims() == Dims{1, 1, 1});
    CHECK(s.channel(Channel::PDw)[0] == m.channel(Channel::PDw)[0]);
  }
  SUBCASE("offset mapping") {
    const Box b{{1, 2, 1}, {4, 4, 3}};
    const MultiChannelVolume s = extract_subvolume(m, b);
    CHECK(s.dims() == b.dims());
    for (int z = 0; z < 3; ++z)
      for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x) CHECK(s.channel(Channel::T1w).at(x, y, z) == m.channel(Channel::T1w).at(x + 1, y + 2, z + 1));
  }
  SUBCASE("box past the edge") {
    CHECK_FAILS_WITH(extract_subvolume(m, Box{{1, 0, 0}, {6, 4, 3}}), ErrorKind::Dimension);
  }
  SUBCASE("crops compose") {
    const Box outer{{1, 1, 0}, {5, 4, 3}};
    const Box inner_rel{{1, 0, 1}, {3, 2, 2}};
    const Box composed{{2, 1, 1}, {4, 3, 2}};
    const auto twice = extract_subvolume(extract_subvolume(m, outer), inner_rel);
    const auto once = extract_subvolume(m, composed);
    CHECK(twice.channel(Channel::T1w) == once.channel(Channel::T1w));
    CHECK(twice.mask() == once.mask());
  }
}

TEST_CASE("mask counts inside a box") {
  BrainMask m(Dims{4, 4, 4}, {}, 0);
  m.at(1, 1, 1) = 1;
  m.at(3, 3, 3) = 1;
  CHECK(m.count() == 2);
  CHECK(m.count_in(Box{{0, 0, 0}, {2, 2, 2}}) == 1);
}
