#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brainseg/error.hpp"

namespace brainseg {

struct Dims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t voxel_count() const noexcept {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  int operator[](int axis) const noexcept { return axis == 0 ? nx : (axis == 1 ? ny : nz); }
  bool operator==(const Dims&) const = default;
};

struct Spacing {
  double dx = 1.0;
  double dy = 1.0;
  double dz = 1.0;
  bool operator==(const Spacing&) const = default;
};

// Axis-aligned voxel box with inclusive bounds on every axis.
struct Box {
  std::array<int, 3> lo{0, 0, 0};
  std::array<int, 3> hi{-1, -1, -1};

  static Box whole(const Dims& d) { return Box{{0, 0, 0}, {d.nx - 1, d.ny - 1, d.nz - 1}}; }

  int extent(int axis) const noexcept { return hi[axis] - lo[axis] + 1; }
  bool empty() const noexcept { return extent(0) <= 0 || extent(1) <= 0 || extent(2) <= 0; }
  std::size_t voxel_count() const noexcept {
    if (empty()) return 0;
    return static_cast<std::size_t>(extent(0)) * extent(1) * extent(2);
  }
  Dims dims() const noexcept { return Dims{extent(0), extent(1), extent(2)}; }
  bool contains(int x, int y, int z) const noexcept {
    return x >= lo[0] && x <= hi[0] && y >= lo[1] && y <= hi[1] && z >= lo[2] && z <= hi[2];
  }
  bool contains(const Box& o) const noexcept {
    for (int a = 0; a < 3; ++a) {
      if (o.lo[a] < lo[a] || o.hi[a] > hi[a]) return false;
    }
    return true;
  }
  bool within(const Dims& d) const noexcept { return Box::whole(d).contains(*this); }
  Box intersect(const Box& o) const noexcept {
    Box r;
    for (int a = 0; a < 3; ++a) {
      r.lo[a] = std::max(lo[a], o.lo[a]);
      r.hi[a] = std::min(hi[a], o.hi[a]);
    }
    return r;
  }
  bool operator==(const Box&) const = default;
};

// Dense 3D grid, x fastest then y then z (NIfTI voxel order).
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(Dims dims, Spacing spacing, T fill = T{}) : dims_(dims), spacing_(spacing) {
    if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) {
      fail(ErrorKind::Dimension, "grid dimensions must all be >= 1");
    }
    data_.assign(dims.voxel_count(), fill);
  }
  Grid(Dims dims, Spacing spacing, std::vector<T> data) : dims_(dims), spacing_(spacing), data_(std::move(data)) {
    if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) {
      fail(ErrorKind::Dimension, "grid dimensions must all be >= 1");
    }
    if (data_.size() != dims.voxel_count()) {
      fail(ErrorKind::Dimension, "data length does not match dimensions");
    }
  }

  const Dims& dims() const noexcept { return dims_; }
  const Spacing& spacing() const noexcept { return spacing_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t index(int x, int y, int z) const noexcept {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_.nx) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims_.ny) * z);
  }
  T& at(int x, int y, int z) noexcept { return data_[index(x, y, z)]; }
  const T& at(int x, int y, int z) const noexcept { return data_[index(x, y, z)]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  bool same_geometry(const Dims& d) const noexcept { return dims_ == d; }

  bool operator==(const Grid&) const = default;

 protected:
  Dims dims_;
  Spacing spacing_;
  std::vector<T> data_;
};

class ScalarVolume : public Grid<float> {
 public:
  using Grid::Grid;
  // Throws ValidationError when any voxel is NaN or infinite.
  void check_finite() const;
};

class BrainMask : public Grid<std::uint8_t> {
 public:
  using Grid::Grid;
  bool inside(std::size_t i) const noexcept { return data_[i] != 0; }
  bool inside(int x, int y, int z) const noexcept { return at(x, y, z) != 0; }
  std::size_t count() const noexcept;
  std::size_t count_in(const Box& box) const noexcept;
};

enum class Tissue : std::uint8_t { Background = 0, Csf = 1, Gm = 2, Wm = 3, Mwm = 4 };
inline constexpr int kTissueCodes = 5;

const char* tissue_name(Tissue t) noexcept;
std::optional<Tissue> tissue_from_name(const std::string& name);
inline std::uint8_t code(Tissue t) noexcept { return static_cast<std::uint8_t>(t); }

class LabelVolume : public Grid<std::uint8_t> {
 public:
  using Grid::Grid;
  Tissue tissue(std::size_t i) const noexcept { return static_cast<Tissue>(data_[i]); }
  Tissue tissue(int x, int y, int z) const noexcept { return static_cast<Tissue>(at(x, y, z)); }
  std::array<std::size_t, kTissueCodes> class_counts() const noexcept;
  std::size_t count(Tissue t) const noexcept { return class_counts()[code(t)]; }
  // Throws ValidationError on codes outside the table.
  void check_codes() const;
};

enum class Channel : int { T1w = 0, T2w = 1, PDw = 2 };
inline constexpr int kMaxChannels = 3;
const char* channel_name(Channel c) noexcept;
std::optional<Channel> channel_from_name(const std::string& name);

// Per-voxel intensities for up to three channels, without heap allocation.
class IntensityVector {
 public:
  IntensityVector() = default;
  IntensityVector(std::initializer_list<double> values);

  std::size_t size() const noexcept { return n_; }
  void push_back(double v);
  double operator[](std::size_t i) const noexcept { return c_[i]; }
  double& operator[](std::size_t i) noexcept { return c_[i]; }
  std::span<const double> values() const noexcept { return {c_.data(), n_}; }

 private:
  std::array<double, kMaxChannels> c_{};
  std::size_t n_ = 0;
};

class MultiChannelVolume {
 public:
  MultiChannelVolume() = default;
  explicit MultiChannelVolume(BrainMask mask) : mask_(std::move(mask)) {}

  void set_channel(Channel c, ScalarVolume vol);
  bool has(Channel c) const noexcept { return channels_[static_cast<int>(c)].has_value(); }
  const ScalarVolume& channel(Channel c) const;
  std::vector<Channel> available() const;

  const BrainMask& mask() const noexcept { return mask_; }
  const Dims& dims() const noexcept { return mask_.dims(); }
  const Spacing& spacing() const noexcept { return mask_.spacing(); }

  // Gathers the listed channels at voxel i.
  IntensityVector intensities(std::size_t i, std::span<const Channel> which) const;

  // Throws when no channel is present or geometry disagrees with the mask.
  void validate() const;

 private:
  std::array<std::optional<ScalarVolume>, kMaxChannels> channels_;
  BrainMask mask_;
};

// Crops every channel and the mask to the box. Throws DimensionError if the
// box leaves the volume.
MultiChannelVolume extract_subvolume(const MultiChannelVolume& vol, const Box& box);

template <typename G>
G crop(const G& grid, const Box& box) {
  if (box.empty() || !box.within(grid.dims())) {
    fail(ErrorKind::Dimension, "box lies outside the volume");
  }
  G out(box.dims(), grid.spacing());
  for (int z = box.lo[2]; z <= box.hi[2]; ++z) {
    for (int y = box.lo[1]; y <= box.hi[1]; ++y) {
      for (int x = box.lo[0]; x <= box.hi[0]; ++x) {
        out.at(x - box.lo[0], y - box.lo[1], z - box.lo[2]) = grid.at(x, y, z);
      }
    }
  }
  return out;
}

}  // namespace brainseg
