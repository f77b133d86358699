#pragma once

#include <filesystem>

#include "brainseg/volume.hpp"

namespace brainseg {

// Single-file little-endian NIfTI-1 (magic "n+1\0"), 3D only, datatypes
// uint8 (2), int16 (4) and float32 (16). Gzip-compressed files are detected
// by their 0x1F 0x8B prefix. Paths ending in ".gz" are written compressed.
namespace nifti {

inline constexpr int kHeaderSize = 348;
inline constexpr int kDataOffset = 352;
inline constexpr short kUint8 = 2;
inline constexpr short kInt16 = 4;
inline constexpr short kFloat32 = 16;

}  // namespace nifti

ScalarVolume load_volume(const std::filesystem::path& path);
// Integral codes 0..4 from any supported datatype.
LabelVolume load_labels(const std::filesystem::path& path);
// Nonzero voxels are inside.
BrainMask load_mask(const std::filesystem::path& path);

// Scalars are written as float32 and rejected if any voxel is non-finite.
void save_volume(const ScalarVolume& vol, const std::filesystem::path& path);
void save_volume(const LabelVolume& vol, const std::filesystem::path& path);
void save_volume(const BrainMask& mask, const std::filesystem::path& path);

}  // namespace brainseg
