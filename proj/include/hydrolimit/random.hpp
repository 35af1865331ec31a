#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hydrolimit {

/// mt19937_64 with platform-independent real conversions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform in (0, 1].
  double uniform_open0() noexcept {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }
  double exponential(double rate) noexcept { return -std::log(uniform_open0()) / rate; }

  std::uint64_t bits() noexcept { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Seed for replica r of a study; the multiplier is odd so replicas never collide.
constexpr std::uint64_t replica_seed(std::uint64_t base, std::uint64_t replica) noexcept {
  return base + replica * 0x9E3779B97F4A7C15ULL;
}

}  // namespace hydrolimit
