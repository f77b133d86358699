#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "brainseg/volume.hpp"

namespace brainseg {

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  // Unset: max of the in-mask ranges of the two volumes (which is the
  // reference range when the test image is a class-mean painting of it).
  std::optional<double> dynamic_range;

  void validate() const;
  // Normalized 1D Gaussian taps; the 2D window is their outer product.
  std::vector<double> taps() const;
};

// Each voxel gets the in-mask mean reference intensity of its class.
ScalarVolume render_classified(const LabelVolume& labels, const ScalarVolume& reference, const BrainMask& mask);

// 2D slice as a row-major ny x nx array.
struct Slice {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

Slice axial_slice(const ScalarVolume& vol, int z);

// SSIM at every pixel; windows are truncated at the slice border and
// renormalized. Pixels whose center is outside `mask` are NaN.
Slice ssim_map(const Slice& ref, const Slice& test, const std::vector<std::uint8_t>& mask, const SsimParams& p,
               double dynamic_range);

// Mean SSIM over all in-mask centers of all axial slices.
double mssim(const ScalarVolume& ref, const ScalarVolume& test, const BrainMask& mask, const SsimParams& p);

// Per-voxel SSIM volume (0 outside the mask) for export.
ScalarVolume ssim_volume(const ScalarVolume& ref, const ScalarVolume& test, const BrainMask& mask, const SsimParams& p);

double dice(const LabelVolume& a, const LabelVolume& b, Tissue cls);

enum class AgeProfile { Older, Infant, Early };
const char* profile_name(AgeProfile p) noexcept;
std::optional<AgeProfile> profile_from_name(const std::string& name);

// Which image serves as the quality reference for a tissue class.
enum class Reference { T1w, T2w, PdwMinusT1w };
const char* reference_name(Reference r) noexcept;
Reference reference_kind(Tissue cls, AgeProfile profile);

// Materializes the reference for `cls`; throws ConfigError if a needed
// channel is missing.
ScalarVolume reference_for_class(Tissue cls, AgeProfile profile, const MultiChannelVolume& channels);

}  // namespace brainseg
