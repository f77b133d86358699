#include "brainseg/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "brainseg/rng.hpp"

namespace brainseg {
namespace {

constexpr std::uint64_t kStreamStreaks = 0x5354524541ull;
constexpr std::uint64_t kStreamSwap = 0x53574150ull;

struct Frame {
  std::array<double, 3> center;
  std::array<double, 3> half;

  // Coordinates normalized to [-1, 1] across each axis.
  std::array<double, 3> unit(int x, int y, int z) const {
    return {(x - center[0]) / half[0], (y - center[1]) / half[1], (z - center[2]) / half[2]};
  }
};

Frame make_frame(const Dims& d) {
  return Frame{{(d.nx - 1) / 2.0, (d.ny - 1) / 2.0, (d.nz - 1) / 2.0}, {d.nx / 2.0, d.ny / 2.0, d.nz / 2.0}};
}

// Separable quadratic with range [-1, 1] over the unit cube; the extremes
// are reached at corners, so the peak multiplicative deviation equals the
// amplitude.
double bias_shape(const std::array<double, 3>& u) {
  double uy = std::clamp(u[1], -1.0, 1.0);
  double ux = std::clamp(u[0], -1.0, 1.0);
  double uz = std::clamp(u[2], -1.0, 1.0);
  return (ux + uy + (2.0 * uz * uz - 1.0)) / 3.0;
}

struct Line {
  std::array<double, 3> point;
  std::array<double, 3> dir;
};

double distance_to_line(const Line& l, double x, double y, double z) {
  std::array<double, 3> v{x - l.point[0], y - l.point[1], z - l.point[2]};
  double t = v[0] * l.dir[0] + v[1] * l.dir[1] + v[2] * l.dir[2];
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    double r = v[a] - t * l.dir[a];
    d2 += r * r;
  }
  return std::sqrt(d2);
}

}  // namespace

void PhantomSpec::validate() const {
  for (int c = 1; c < kTissueCodes; ++c) {
    for (int ch = 0; ch < kMaxChannels; ++ch) {
      double m = tissue_means[c][ch];
      double s = tissue_stds[c][ch];
      if (!(m >= 0.0 && m <= 1.0)) fail(ErrorKind::Validation, "tissue means must lie in [0, 1]");
      if (!(s >= 0.0) || !std::isfinite(s)) fail(ErrorKind::Validation, "tissue stds must be >= 0");
    }
  }
  if (!(bias_amplitude >= 0.0 && bias_amplitude <= 0.5)) {
    fail(ErrorKind::Validation, "bias_amplitude must lie in [0, 0.5]");
  }
  if (!(geometry.csf_radius > geometry.gm_radius && geometry.gm_radius > geometry.wm_radius &&
        geometry.wm_radius > 0.0)) {
    fail(ErrorKind::Validation, "radii must satisfy csf > gm > wm > 0");
  }
  if (geometry.csf_radius > 1.0) fail(ErrorKind::Validation, "csf_radius must not exceed 1 (the grid half-extent)");
  if (wm_streaks.count < 0 || !(wm_streaks.radius > 0.0) || !(wm_streaks.intensity_factor >= 0.0)) {
    fail(ErrorKind::Validation, "invalid wm_streaks settings");
  }
  if (mwm_region && !(mwm_region->radius > 0.0)) fail(ErrorKind::Validation, "mwm_region radius must be > 0");
}

PhantomSpec PhantomSpec::standard(std::uint64_t seed) {
  PhantomSpec s;
  s.seed = seed;
  const auto csf = code(Tissue::Csf), gm = code(Tissue::Gm), wm = code(Tissue::Wm), mwm = code(Tissue::Mwm);
  //                 T1w   T2w   PDw
  s.tissue_means[csf] = {0.15, 0.90, 0.85};
  s.tissue_means[gm] = {0.50, 0.60, 0.70};
  s.tissue_means[wm] = {0.70, 0.45, 0.60};
  s.tissue_means[mwm] = {0.75, 0.40, 0.95};
  s.tissue_stds[csf] = {0.05, 0.05, 0.05};
  s.tissue_stds[gm] = {0.10, 0.10, 0.10};
  s.tissue_stds[wm] = {0.10, 0.10, 0.10};
  s.tissue_stds[mwm] = {0.05, 0.05, 0.05};
  s.bias_amplitude = 0.1;
  s.wm_streaks = {3, 1.0, 0.85};
  return s;
}

PhantomSpec PhantomSpec::low_contrast(std::uint64_t seed) {
  PhantomSpec s = standard(seed);
  const auto gm = code(Tissue::Gm), wm = code(Tissue::Wm);
  s.tissue_means[gm] = {0.55, 0.58, 0.68};
  s.tissue_means[wm] = {0.65, 0.50, 0.62};
  return s;
}

Phantom generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const Dims& d = spec.dims;
  if (d.nx < 8 || d.ny < 8 || d.nz < 8) fail(ErrorKind::Dimension, "phantom needs at least 8 voxels per axis");
  const double min_half = std::min({d.nx, d.ny, d.nz}) / 2.0;
  if (spec.geometry.wm_radius * min_half < 1.0) {
    fail(ErrorKind::Dimension, "grid too small: the WM core would be thinner than one voxel");
  }

  const Frame frame = make_frame(d);
  LabelVolume truth(d, spec.spacing, code(Tissue::Background));
  BrainMask mask(d, spec.spacing, 0);
  std::vector<std::uint8_t> streak(d.voxel_count(), 0);

  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        auto u = frame.unit(x, y, z);
        double r = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
        Tissue t = Tissue::Background;
        if (r <= spec.geometry.wm_radius) {
          t = Tissue::Wm;
        } else if (r <= spec.geometry.gm_radius) {
          t = Tissue::Gm;
        } else if (r <= spec.geometry.csf_radius) {
          t = Tissue::Csf;
        }
        if (t == Tissue::Wm && spec.mwm_region) {
          const auto& m = *spec.mwm_region;
          double dm = std::sqrt((u[0] - m.center[0]) * (u[0] - m.center[0]) + (u[1] - m.center[1]) * (u[1] - m.center[1]) +
                                (u[2] - m.center[2]) * (u[2] - m.center[2]));
          if (dm <= m.radius) t = Tissue::Mwm;
        }
        truth.at(x, y, z) = code(t);
        mask.at(x, y, z) = t != Tissue::Background;
      }
    }
  }

  // Streak placement draws sequentially from the seed; voxel noise is
  // counter-based.
  Rng rng(hash_combine(spec.seed, kStreamStreaks));
  std::vector<Line> lines;
  for (int s = 0; s < spec.wm_streaks.count; ++s) {
    std::array<double, 3> p{};
    for (;;) {
      for (int a = 0; a < 3; ++a) p[a] = (2.0 * rng.uniform() - 1.0) * spec.geometry.wm_radius;
      if (std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) <= 0.8 * spec.geometry.wm_radius) break;
    }
    std::array<double, 3> dir{rng.normal(), rng.normal(), rng.normal()};
    double norm = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
    if (norm == 0.0) dir = {1.0, 0.0, 0.0}, norm = 1.0;
    Line l;
    for (int a = 0; a < 3; ++a) {
      l.point[a] = frame.center[a] + p[a] * frame.half[a];
      l.dir[a] = dir[a] / norm;
    }
    lines.push_back(l);
  }
  if (!lines.empty()) {
    for (int z = 0; z < d.nz; ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) {
          if (truth.tissue(x, y, z) != Tissue::Wm) continue;
          for (const auto& l : lines) {
            if (distance_to_line(l, x, y, z) <= spec.wm_streaks.radius) {
              streak[truth.index(x, y, z)] = 1;
              break;
            }
          }
        }
  }

  MultiChannelVolume volume(mask);
  for (int ch = 0; ch < kMaxChannels; ++ch) {
    ScalarVolume img(d, spec.spacing, 0.0f);
    for (int z = 0; z < d.nz; ++z) {
      for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
          std::size_t i = truth.index(x, y, z);
          auto t = truth[i];
          if (t == code(Tissue::Background)) continue;
          double mean = spec.tissue_means[t][ch];
          if (streak[i] && ch == static_cast<int>(Channel::T1w)) mean *= spec.wm_streaks.intensity_factor;
          double bias = 1.0 + spec.bias_amplitude * bias_shape(frame.unit(x, y, z));
          double v = mean * bias;
          double sd = spec.tissue_stds[t][ch];
          if (sd > 0.0) v += sd * counter_normal(spec.seed, static_cast<std::uint64_t>(ch), i);
          img[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
    }
    volume.set_channel(static_cast<Channel>(ch), std::move(img));
  }
  return Phantom{std::move(volume), std::move(truth)};
}

Cnr phantom_cnr(const PhantomSpec& spec, Channel channel) {
  const int ch = static_cast<int>(channel);
  const auto gm = code(Tissue::Gm), wm = code(Tissue::Wm);
  return cnr_from_moments(spec.tissue_means[gm][ch], spec.tissue_stds[gm][ch], spec.tissue_means[wm][ch],
                          spec.tissue_stds[wm][ch]);
}

LabelVolume degrade_labels(const LabelVolume& truth, const DegradeSpec& spec) {
  if (spec.csf_erode_iters < 0 || !(spec.gm_wm_swap_fraction >= 0.0 && spec.gm_wm_swap_fraction <= 1.0)) {
    fail(ErrorKind::Validation, "invalid degrade settings");
  }
  LabelVolume out = truth;
  const Dims& d = truth.dims();
  static constexpr int kOffsets[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int it = 0; it < spec.csf_erode_iters; ++it) {
    LabelVolume next = out;
    for (int z = 0; z < d.nz; ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) {
          if (out.tissue(x, y, z) != Tissue::Csf) continue;
          for (const auto& o : kOffsets) {
            int xx = x + o[0], yy = y + o[1], zz = z + o[2];
            if (xx < 0 || yy < 0 || zz < 0 || xx >= d.nx || yy >= d.ny || zz >= d.nz) continue;
            if (out.tissue(xx, yy, zz) == Tissue::Gm) {
              next.at(x, y, z) = code(Tissue::Gm);
              break;
            }
          }
        }
    out = std::move(next);
  }
  if (spec.gm_wm_swap_fraction > 0.0) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      Tissue t = out.tissue(i);
      if (t != Tissue::Gm && t != Tissue::Wm) continue;
      if (counter_uniform(spec.seed, kStreamSwap, i) < spec.gm_wm_swap_fraction) {
        out[i] = code(t == Tissue::Gm ? Tissue::Wm : Tissue::Gm);
      }
    }
  }
  return out;
}

}  // namespace brainseg
