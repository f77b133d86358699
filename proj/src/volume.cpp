#include "brainseg/volume.hpp"

#include <cmath>

namespace brainseg {

void ScalarVolume::check_finite() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      fail(ErrorKind::Validation, "non-finite intensity at voxel " + std::to_string(i));
    }
  }
}

std::size_t BrainMask::count() const noexcept {
  std::size_t n = 0;
  for (auto v : data_) n += (v != 0);
  return n;
}

std::size_t BrainMask::count_in(const Box& box) const noexcept {
  std::size_t n = 0;
  for (int z = box.lo[2]; z <= box.hi[2]; ++z)
    for (int y = box.lo[1]; y <= box.hi[1]; ++y)
      for (int x = box.lo[0]; x <= box.hi[0]; ++x) n += inside(x, y, z);
  return n;
}

const char* tissue_name(Tissue t) noexcept {
  switch (t) {
    case Tissue::Background: return "BG";
    case Tissue::Csf: return "CSF";
    case Tissue::Gm: return "GM";
    case Tissue::Wm: return "WM";
    case Tissue::Mwm: return "MWM";
  }
  return "?";
}

std::optional<Tissue> tissue_from_name(const std::string& name) {
  for (int c = 0; c < kTissueCodes; ++c) {
    auto t = static_cast<Tissue>(c);
    if (name == tissue_name(t)) return t;
  }
  return std::nullopt;
}

std::array<std::size_t, kTissueCodes> LabelVolume::class_counts() const noexcept {
  std::array<std::size_t, kTissueCodes> counts{};
  for (auto v : data_) {
    if (v < kTissueCodes) ++counts[v];
  }
  return counts;
}

void LabelVolume::check_codes() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i] >= kTissueCodes) {
      fail(ErrorKind::Validation, "label code " + std::to_string(data_[i]) + " outside the code table");
    }
  }
}

const char* channel_name(Channel c) noexcept {
  switch (c) {
    case Channel::T1w: return "t1w";
    case Channel::T2w: return "t2w";
    case Channel::PDw: return "pdw";
  }
  return "?";
}

std::optional<Channel> channel_from_name(const std::string& name) {
  for (int c = 0; c < kMaxChannels; ++c) {
    auto ch = static_cast<Channel>(c);
    if (name == channel_name(ch)) return ch;
  }
  return std::nullopt;
}

IntensityVector::IntensityVector(std::initializer_list<double> values) {
  for (double v : values) push_back(v);
}

void IntensityVector::push_back(double v) {
  if (n_ >= c_.size()) fail(ErrorKind::Dimension, "intensity vector holds at most 3 channels");
  c_[n_++] = v;
}

void MultiChannelVolume::set_channel(Channel c, ScalarVolume vol) {
  if (mask_.size() != 0 && vol.dims() != mask_.dims()) {
    fail(ErrorKind::Dimension, std::string("channel ") + channel_name(c) + " does not match the mask dimensions");
  }
  channels_[static_cast<int>(c)] = std::move(vol);
}

const ScalarVolume& MultiChannelVolume::channel(Channel c) const {
  const auto& ch = channels_[static_cast<int>(c)];
  if (!ch) fail(ErrorKind::Config, std::string("channel ") + channel_name(c) + " is not available");
  return *ch;
}

std::vector<Channel> MultiChannelVolume::available() const {
  std::vector<Channel> out;
  for (int c = 0; c < kMaxChannels; ++c) {
    if (channels_[c]) out.push_back(static_cast<Channel>(c));
  }
  return out;
}

IntensityVector MultiChannelVolume::intensities(std::size_t i, std::span<const Channel> which) const {
  IntensityVector v;
  for (Channel c : which) v.push_back(channel(c)[i]);
  return v;
}

void MultiChannelVolume::validate() const {
  if (available().empty()) fail(ErrorKind::Validation, "no channel present");
  if (mask_.count() == 0) fail(ErrorKind::Validation, "brain mask has no interior voxel");
  for (Channel c : available()) {
    if (channel(c).dims() != mask_.dims()) {
      fail(ErrorKind::Dimension, std::string("channel ") + channel_name(c) + " does not match the mask dimensions");
    }
  }
}

MultiChannelVolume extract_subvolume(const MultiChannelVolume& vol, const Box& box) {
  MultiChannelVolume out(crop(vol.mask(), box));
  for (Channel c : vol.available()) out.set_channel(c, crop(vol.channel(c), box));
  return out;
}

}  // namespace brainseg
