#include "brainseg/quality.hpp"

#include <cmath>
#include <limits>

#include "brainseg/mixture.hpp"

namespace brainseg {

void SsimParams::validate() const {
  if (window < 1 || window % 2 == 0) fail(ErrorKind::Config, "SSIM window must be a positive odd size");
  if (!(sigma > 0.0)) fail(ErrorKind::Config, "SSIM sigma must be > 0");
  if (!(k1 > 0.0) || !(k2 > 0.0)) fail(ErrorKind::Config, "SSIM k1 and k2 must be > 0");
  if (dynamic_range && !(*dynamic_range > 0.0)) fail(ErrorKind::Validation, "dynamic range must be > 0");
}

std::vector<double> SsimParams::taps() const {
  const int half = window / 2;
  std::vector<double> t(static_cast<std::size_t>(window));
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    t[i + half] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += t[i + half];
  }
  for (double& v : t) v /= sum;
  return t;
}

ScalarVolume render_classified(const LabelVolume& labels, const ScalarVolume& reference, const BrainMask& mask) {
  if (labels.dims() != reference.dims() || mask.dims() != reference.dims()) {
    fail(ErrorKind::Dimension, "labels, reference and mask differ in size");
  }
  std::array<double, 256> sum{};
  std::array<std::size_t, 256> n{};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!mask.inside(i)) continue;
    sum[labels[i]] += reference[i];
    ++n[labels[i]];
  }
  ScalarVolume out(reference.dims(), reference.spacing(), 0.0f);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!mask.inside(i)) continue;
    out[i] = static_cast<float>(sum[labels[i]] / static_cast<double>(n[labels[i]]));
  }
  return out;
}

Slice axial_slice(const ScalarVolume& vol, int z) {
  const Dims& d = vol.dims();
  Slice s{d.ny, d.nx, std::vector<double>(static_cast<std::size_t>(d.nx) * d.ny)};
  for (int y = 0; y < d.ny; ++y)
    for (int x = 0; x < d.nx; ++x) s.v[static_cast<std::size_t>(y) * d.nx + x] = vol.at(x, y, z);
  return s;
}

namespace {

// Separable weighted filtering with the window clipped to the slice.
std::vector<double> filter(const std::vector<double>& img, int rows, int cols, const std::vector<double>& taps) {
  const int half = static_cast<int>(taps.size()) / 2;
  std::vector<double> tmp(img.size(), 0.0), out(img.size(), 0.0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int k = -half; k <= half; ++k) {
        const int cc = c + k;
        if (cc < 0 || cc >= cols) continue;
        s += taps[k + half] * img[static_cast<std::size_t>(r) * cols + cc];
      }
      tmp[static_cast<std::size_t>(r) * cols + c] = s;
    }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int k = -half; k <= half; ++k) {
        const int rr = r + k;
        if (rr < 0 || rr >= rows) continue;
        s += taps[k + half] * tmp[static_cast<std::size_t>(rr) * cols + c];
      }
      out[static_cast<std::size_t>(r) * cols + c] = s;
    }
  return out;
}

double masked_range(const ScalarVolume& v, const BrainMask& mask) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!mask.inside(i)) continue;
    lo = std::min<double>(lo, v[i]);
    hi = std::max<double>(hi, v[i]);
  }
  return hi - lo;
}

double resolve_range(const ScalarVolume& ref, const ScalarVolume& test, const BrainMask& mask, const SsimParams& p) {
  if (p.dynamic_range) return *p.dynamic_range;
  double l = std::max(masked_range(ref, mask), masked_range(test, mask));
  if (!(l > 0.0)) fail(ErrorKind::Validation, "dynamic range is zero: both volumes constant inside the mask");
  return l;
}

std::vector<std::uint8_t> mask_slice(const BrainMask& mask, int z) {
  const Dims& d = mask.dims();
  std::vector<std::uint8_t> m(static_cast<std::size_t>(d.nx) * d.ny);
  for (int y = 0; y < d.ny; ++y)
    for (int x = 0; x < d.nx; ++x) m[static_cast<std::size_t>(y) * d.nx + x] = mask.inside(x, y, z);
  return m;
}

}  // namespace

Slice ssim_map(const Slice& ref, const Slice& test, const std::vector<std::uint8_t>& mask, const SsimParams& p,
               double dynamic_range) {
  p.validate();
  if (!(dynamic_range > 0.0)) fail(ErrorKind::Validation, "dynamic range must be > 0");
  if (ref.rows != test.rows || ref.cols != test.cols || mask.size() != ref.v.size()) {
    fail(ErrorKind::Dimension, "SSIM inputs differ in shape");
  }
  const auto taps = p.taps();
  const int rows = ref.rows, cols = ref.cols;
  const std::size_t n = ref.v.size();
  std::vector<double> xx(n), yy(n), xy(n), ones(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = ref.v[i] * ref.v[i];
    yy[i] = test.v[i] * test.v[i];
    xy[i] = ref.v[i] * test.v[i];
  }
  const auto wsum = filter(ones, rows, cols, taps);
  const auto mx = filter(ref.v, rows, cols, taps);
  const auto my = filter(test.v, rows, cols, taps);
  const auto mxx = filter(xx, rows, cols, taps);
  const auto myy = filter(yy, rows, cols, taps);
  const auto mxy = filter(xy, rows, cols, taps);
  const double c1 = (p.k1 * dynamic_range) * (p.k1 * dynamic_range);
  const double c2 = (p.k2 * dynamic_range) * (p.k2 * dynamic_range);

  Slice out{rows, cols, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN())};
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double w = wsum[i];
    const double ux = mx[i] / w, uy = my[i] / w;
    const double vx = mxx[i] / w - ux * ux;
    const double vy = myy[i] / w - uy * uy;
    const double cxy = mxy[i] / w - ux * uy;
    out.v[i] = ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
  }
  return out;
}

double mssim(const ScalarVolume& ref, const ScalarVolume& test, const BrainMask& mask, const SsimParams& p) {
  if (ref.dims() != test.dims() || mask.dims() != ref.dims()) fail(ErrorKind::Dimension, "SSIM inputs differ in size");
  if (mask.count() == 0) fail(ErrorKind::Degenerate, "empty mask");
  const double l = resolve_range(ref, test, mask, p);
  double sum = 0.0;
  std::size_t count = 0;
  for (int z = 0; z < ref.dims().nz; ++z) {
    auto m = mask_slice(mask, z);
    bool any = false;
    for (auto v : m) any = any || v;
    if (!any) continue;
    Slice s = ssim_map(axial_slice(ref, z), axial_slice(test, z), m, p, l);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!m[i]) continue;
      sum += s.v[i];
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

ScalarVolume ssim_volume(const ScalarVolume& ref, const ScalarVolume& test, const BrainMask& mask, const SsimParams& p) {
  if (ref.dims() != test.dims() || mask.dims() != ref.dims()) fail(ErrorKind::Dimension, "SSIM inputs differ in size");
  const double l = resolve_range(ref, test, mask, p);
  ScalarVolume out(ref.dims(), ref.spacing(), 0.0f);
  for (int z = 0; z < ref.dims().nz; ++z) {
    auto m = mask_slice(mask, z);
    Slice s = ssim_map(axial_slice(ref, z), axial_slice(test, z), m, p, l);
    for (int y = 0; y < s.rows; ++y)
      for (int x = 0; x < s.cols; ++x)
        if (m[static_cast<std::size_t>(y) * s.cols + x]) out.at(x, y, z) = static_cast<float>(s.at(y, x));
  }
  return out;
}

double dice(const LabelVolume& a, const LabelVolume& b, Tissue cls) {
  if (a.dims() != b.dims()) fail(ErrorKind::Dimension, "label volumes differ in size");
  const auto c = code(cls);
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool ia = a[i] == c, ib = b[i] == c;
    na += ia;
    nb += ib;
    both += ia && ib;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

const char* profile_name(AgeProfile p) noexcept {
  switch (p) {
    case AgeProfile::Older: return "older";
    case AgeProfile::Infant: return "infant";
    case AgeProfile::Early: return "early";
  }
  return "?";
}

std::optional<AgeProfile> profile_from_name(const std::string& name) {
  for (auto p : {AgeProfile::Older, AgeProfile::Infant, AgeProfile::Early}) {
    if (name == profile_name(p)) return p;
  }
  return std::nullopt;
}

const char* reference_name(Reference r) noexcept {
  switch (r) {
    case Reference::T1w: return "t1w";
    case Reference::T2w: return "t2w";
    case Reference::PdwMinusT1w: return "pdw-t1w";
  }
  return "?";
}

Reference reference_kind(Tissue cls, AgeProfile profile) {
  switch (profile) {
    case AgeProfile::Older: return Reference::T1w;
    case AgeProfile::Infant: return cls == Tissue::Csf ? Reference::T1w : Reference::T2w;
    case AgeProfile::Early:
      if (cls == Tissue::Mwm) return Reference::PdwMinusT1w;
      return cls == Tissue::Csf ? Reference::T1w : Reference::T2w;
  }
  return Reference::T1w;
}

ScalarVolume reference_for_class(Tissue cls, AgeProfile profile, const MultiChannelVolume& channels) {
  auto need = [&](Channel c) -> const ScalarVolume& {
    if (!channels.has(c)) {
      fail(ErrorKind::Config, std::string("reference needs channel ") + channel_name(c) + " for class " + tissue_name(cls));
    }
    return channels.channel(c);
  };
  switch (reference_kind(cls, profile)) {
    case Reference::T1w: return need(Channel::T1w);
    case Reference::T2w: return need(Channel::T2w);
    case Reference::PdwMinusT1w:
      return difference_image(need(Channel::PDw), need(Channel::T1w), channels.mask());
  }
  return need(Channel::T1w);
}

}  // namespace brainseg
