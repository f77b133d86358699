#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "brainseg/error.hpp"
#include "brainseg/volume.hpp"
#include "doctest.h"

#define CHECK_FAILS_WITH(expr, expected_kind)                         \
  do {                                                                \
    bool thrown_ = false;                                             \
    try {                                                             \
      (void)(expr);                                                   \
    } catch (const ::brainseg::Error& e_) {                           \
      thrown_ = true;                                                 \
      CHECK_MESSAGE(e_.kind() == (expected_kind), std::string(e_.what())); \
    }                                                                 \
    CHECK_MESSAGE(thrown_, "expected " #expected_kind " from " #expr); \
  } while (0)

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("brainseg_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline brainseg::BrainMask full_mask(brainseg::Dims d) { return brainseg::BrainMask(d, {}, 1); }

inline brainseg::ScalarVolume random_volume(brainseg::Dims d, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  brainseg::ScalarVolume v(d, {}, 0.0f);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(u(gen));
  return v;
}

}  // namespace testing
