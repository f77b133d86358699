#pragma once

#include "brainseg/volume.hpp"

namespace brainseg {

// Nearest-rank percentile of the in-mask values, q in [0, 1].
double masked_percentile(const ScalarVolume& vol, const BrainMask& mask, double q);

// Maps each channel so its in-mask 1st/99th percentiles land on 0/1, clamps
// to [0, 1] and zeroes out-of-mask voxels. Nearest-rank percentiles make the
// map exactly idempotent. If the percentiles coincide the in-mask min/max are
// used instead; a channel with zero in-mask range throws DegenerateError.
MultiChannelVolume normalize_channels(const MultiChannelVolume& vol);

}  // namespace brainseg
