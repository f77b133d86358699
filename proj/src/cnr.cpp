#include "brainseg/cnr.hpp"

#include <cmath>

#include "brainseg/error.hpp"

namespace brainseg {

Cnr cnr_from_moments(double mean_gm, double std_gm, double mean_wm, double std_wm) {
  double pooled = std::sqrt((std_gm * std_gm + std_wm * std_wm) / 2.0);
  double diff = std::abs(mean_wm - mean_gm);
  if (pooled == 0.0) {
    if (diff == 0.0) fail(ErrorKind::Degenerate, "CNR undefined: equal means and zero noise");
    return Cnr::infinite();
  }
  return {Cnr::Kind::Finite, diff / pooled};
}

}  // namespace brainseg
