#include "brainseg/nifti.hpp"

#include <zlib.h>

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

namespace brainseg {
namespace {

template <typename T>
T read_le(const std::vector<char>& buf, std::size_t off) {
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  return v;
}

template <typename T>
void write_le(std::vector<char>& buf, std::size_t off, T v) {
  std::memcpy(buf.data() + off, &v, sizeof(T));
}

std::vector<char> read_file(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) fail(ErrorKind::Io, "cannot open " + path.string());
  std::vector<char> out;
  std::array<char, 1 << 16> chunk{};
  for (;;) {
    int n = gzread(f, chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) {
      gzclose(f);
      fail(ErrorKind::Io, "read failure on " + path.string());
    }
    if (n == 0) break;
    out.insert(out.end(), chunk.begin(), chunk.begin() + n);
  }
  gzclose(f);
  return out;
}

void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
  if (path.extension() == ".gz") {
    gzFile f = gzopen(path.string().c_str(), "wb");
    if (f == nullptr) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    int n = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    int rc = gzclose(f);
    if (n != static_cast<int>(bytes.size()) || rc != Z_OK) fail(ErrorKind::Io, "write failure on " + path.string());
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) fail(ErrorKind::Io, "write failure on " + path.string());
}

struct RawImage {
  Dims dims;
  Spacing spacing;
  std::vector<double> values;
  short datatype = 0;
};

RawImage decode(const std::vector<char>& buf, const std::string& name) {
  if (buf.size() < static_cast<std::size_t>(nifti::kHeaderSize)) {
    fail(ErrorKind::Format, name + ": truncated header");
  }
  if (read_le<std::int32_t>(buf, 0) != nifti::kHeaderSize) {
    fail(ErrorKind::Format, name + ": sizeof_hdr is not 348 (or file is big-endian)");
  }
  if (std::memcmp(buf.data() + 344, "n+1\0", 4) != 0) {
    fail(ErrorKind::Format, name + ": magic is not \"n+1\" (single-file NIfTI-1 required)");
  }
  std::array<std::int16_t, 8> dim{};
  for (int i = 0; i < 8; ++i) dim[i] = read_le<std::int16_t>(buf, 40 + 2 * i);
  if (dim[0] != 3) fail(ErrorKind::Dimension, name + ": only 3D volumes are supported, dim[0]=" + std::to_string(dim[0]));
  if (dim[1] < 1 || dim[2] < 1 || dim[3] < 1) fail(ErrorKind::Dimension, name + ": non-positive dimension");

  RawImage img;
  img.datatype = read_le<std::int16_t>(buf, 70);
  std::size_t bytes_per = 0;
  switch (img.datatype) {
    case nifti::kUint8: bytes_per = 1; break;
    case nifti::kInt16: bytes_per = 2; break;
    case nifti::kFloat32: bytes_per = 4; break;
    default: fail(ErrorKind::Unsupported, name + ": datatype " + std::to_string(img.datatype) + " not supported");
  }
  img.dims = Dims{dim[1], dim[2], dim[3]};
  img.spacing = Spacing{read_le<float>(buf, 80), read_le<float>(buf, 84), read_le<float>(buf, 88)};

  float vox_offset = read_le<float>(buf, 108);
  if (!(vox_offset >= static_cast<float>(nifti::kDataOffset))) {
    fail(ErrorKind::Format, name + ": vox_offset below 352");
  }
  auto offset = static_cast<std::size_t>(vox_offset);
  std::size_t n = img.dims.voxel_count();
  if (buf.size() < offset + n * bytes_per) fail(ErrorKind::Format, name + ": truncated voxel data");

  float slope = read_le<float>(buf, 112);
  float inter = read_le<float>(buf, 116);
  bool scaled = slope != 0.0f && std::isfinite(slope);
  if (!std::isfinite(inter)) inter = 0.0f;

  img.values.resize(n);
  const char* p = buf.data() + offset;
  for (std::size_t i = 0; i < n; ++i) {
    double raw = 0.0;
    switch (img.datatype) {
      case nifti::kUint8: raw = static_cast<std::uint8_t>(p[i]); break;
      case nifti::kInt16: {
        std::int16_t v;
        std::memcpy(&v, p + 2 * i, 2);
        raw = v;
        break;
      }
      default: {
        float v;
        std::memcpy(&v, p + 4 * i, 4);
        raw = v;
        break;
      }
    }
    img.values[i] = scaled ? raw * slope + inter : raw;
  }
  return img;
}

std::vector<char> encode_header(const Dims& dims, const Spacing& spacing, short datatype, short bitpix) {
  std::vector<char> buf(nifti::kDataOffset, 0);
  write_le<std::int32_t>(buf, 0, nifti::kHeaderSize);
  buf[38] = 'r';  // regular
  std::array<std::int16_t, 8> dim{3, static_cast<std::int16_t>(dims.nx), static_cast<std::int16_t>(dims.ny),
                                  static_cast<std::int16_t>(dims.nz), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) write_le<std::int16_t>(buf, 40 + 2 * i, dim[i]);
  write_le<std::int16_t>(buf, 70, datatype);
  write_le<std::int16_t>(buf, 72, bitpix);
  std::array<float, 8> pixdim{1.0f, static_cast<float>(spacing.dx), static_cast<float>(spacing.dy),
                              static_cast<float>(spacing.dz), 1.0f, 1.0f, 1.0f, 1.0f};
  for (int i = 0; i < 8; ++i) write_le<float>(buf, 76 + 4 * i, pixdim[i]);
  write_le<float>(buf, 108, static_cast<float>(nifti::kDataOffset));
  write_le<float>(buf, 112, 0.0f);
  write_le<float>(buf, 116, 0.0f);
  buf[123] = 2;  // mm
  write_le<std::int16_t>(buf, 254, 1);  // sform_code: scanner
  write_le<float>(buf, 280, pixdim[1]);
  write_le<float>(buf, 280 + 16 + 4, pixdim[2]);
  write_le<float>(buf, 280 + 32 + 8, pixdim[3]);
  std::memcpy(buf.data() + 344, "n+1\0", 4);
  return buf;
}

bool dims_fit_header(const Dims& d) { return d.nx <= 32767 && d.ny <= 32767 && d.nz <= 32767; }

}  // namespace

ScalarVolume load_volume(const std::filesystem::path& path) {
  RawImage img = decode(read_file(path), path.string());
  std::vector<float> data(img.values.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(img.values[i]);
  ScalarVolume vol(img.dims, img.spacing, std::move(data));
  vol.check_finite();
  return vol;
}

LabelVolume load_labels(const std::filesystem::path& path) {
  RawImage img = decode(read_file(path), path.string());
  std::vector<std::uint8_t> data(img.values.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    double v = img.values[i];
    if (!(v >= 0.0 && v < kTissueCodes) || v != std::floor(v)) {
      fail(ErrorKind::Validation, path.string() + ": label value outside the code table");
    }
    data[i] = static_cast<std::uint8_t>(v);
  }
  return LabelVolume(img.dims, img.spacing, std::move(data));
}

BrainMask load_mask(const std::filesystem::path& path) {
  RawImage img = decode(read_file(path), path.string());
  std::vector<std::uint8_t> data(img.values.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = img.values[i] != 0.0 ? 1 : 0;
  return BrainMask(img.dims, img.spacing, std::move(data));
}

void save_volume(const ScalarVolume& vol, const std::filesystem::path& path) {
  vol.check_finite();
  if (!dims_fit_header(vol.dims())) fail(ErrorKind::Dimension, "dimension exceeds NIfTI-1 limit");
  auto buf = encode_header(vol.dims(), vol.spacing(), nifti::kFloat32, 32);
  std::size_t off = buf.size();
  buf.resize(off + vol.size() * sizeof(float));
  std::memcpy(buf.data() + off, vol.data().data(), vol.size() * sizeof(float));
  write_file(path, buf);
}

namespace {
void save_bytes(const Grid<std::uint8_t>& g, const std::filesystem::path& path) {
  if (!dims_fit_header(g.dims())) fail(ErrorKind::Dimension, "dimension exceeds NIfTI-1 limit");
  auto buf = encode_header(g.dims(), g.spacing(), nifti::kUint8, 8);
  buf.insert(buf.end(), g.data().begin(), g.data().end());
  write_file(path, buf);
}
}  // namespace

void save_volume(const LabelVolume& vol, const std::filesystem::path& path) {
  vol.check_codes();
  save_bytes(vol, path);
}

void save_volume(const BrainMask& mask, const std::filesystem::path& path) { save_bytes(mask, path); }

}  // namespace brainseg
