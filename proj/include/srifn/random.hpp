#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace srifn {

// Seed of the t-th independent stream derived from a base seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return base ^ stream;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Portable random source. std::mt19937_64 output is fully specified by the
// standard, but the std distributions are not, so the draws are done here to
// keep results identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  // Standard normal draw (Marsaglia polar method).
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace srifn
