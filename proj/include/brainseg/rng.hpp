#pragma once

#include <cstdint>
#include <random>

namespace brainseg {

// Stateless counter-based streams: the value for a given (seed, stream, counter)
// never depends on evaluation order, so parallel fills stay reproducible.
std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept;
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept;
double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept;

// Sequential generator with platform-independent draws (the standard
// distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer on [0, n), n > 0, by rejection.
  std::uint64_t below(std::uint64_t n);
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace brainseg
