#include "brainseg/normalize.hpp"

#include <algorithm>
#include <cmath>

namespace brainseg {
namespace {

std::vector<float> masked_values(const ScalarVolume& vol, const BrainMask& mask) {
  std::vector<float> v;
  v.reserve(mask.count());
  for (std::size_t i = 0; i < vol.size(); ++i) {
    if (mask.inside(i)) v.push_back(vol[i]);
  }
  return v;
}

double rank_value(std::vector<float>& v, double q) {
  auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1) + 0.5));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

}  // namespace

double masked_percentile(const ScalarVolume& vol, const BrainMask& mask, double q) {
  if (vol.dims() != mask.dims()) fail(ErrorKind::Dimension, "mask does not match volume");
  auto v = masked_values(vol, mask);
  if (v.empty()) fail(ErrorKind::Validation, "empty mask");
  return rank_value(v, std::clamp(q, 0.0, 1.0));
}

MultiChannelVolume normalize_channels(const MultiChannelVolume& vol) {
  vol.validate();
  const BrainMask& mask = vol.mask();
  MultiChannelVolume out(mask);
  for (Channel c : vol.available()) {
    const ScalarVolume& src = vol.channel(c);
    auto values = masked_values(src, mask);
    double lo = rank_value(values, 0.01);
    double hi = rank_value(values, 0.99);
    if (!(hi > lo)) {
      auto [mn, mx] = std::minmax_element(values.begin(), values.end());
      lo = *mn;
      hi = *mx;
    }
    if (!(hi > lo)) {
      fail(ErrorKind::Degenerate, std::string("channel ") + channel_name(c) + " is constant inside the mask");
    }
    ScalarVolume dst(src.dims(), src.spacing(), 0.0f);
    const double scale = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (!mask.inside(i)) continue;
      double v = (static_cast<double>(src[i]) - lo) * scale;
      dst[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    out.set_channel(c, std::move(dst));
  }
  return out;
}

}  // namespace brainseg
