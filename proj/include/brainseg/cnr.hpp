#pragma once

#include <cstddef>

namespace brainseg {

// GM/WM contrast-to-noise ratio |mu_wm - mu_gm| / sqrt((var_gm + var_wm) / 2).
// Zero pooled noise with distinct means is reported as Infinite; too few
// class voxels as Absent.
struct Cnr {
  enum class Kind { Finite, Infinite, Absent };
  Kind kind = Kind::Absent;
  double value = 0.0;

  bool finite() const noexcept { return kind == Kind::Finite; }
  static Cnr absent() { return {Kind::Absent, 0.0}; }
  static Cnr infinite() { return {Kind::Infinite, 0.0}; }
};

// Throws DegenerateError when both stds are zero and the means are equal.
Cnr cnr_from_moments(double mean_gm, double std_gm, double mean_wm, double std_wm);

}  // namespace brainseg
