#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace beq {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stateless normal stream: draw i of the stream keyed by (seed, path) is a
/// pure function of (seed, path, i), so paths can be simulated in any order
/// or on any thread.
class CounterNormal {
 public:
  CounterNormal(std::uint64_t seed, std::uint64_t path) : key_(mix64(mix64(seed) ^ (path * 0xd1b54a32d192ed03ULL))) {}

  double operator()(std::uint64_t i) const {
    const double u1 = unit(mix64(key_ ^ mix64(2 * i)));
    const double u2 = unit(mix64(key_ ^ mix64(2 * i + 1)));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  // (0, 1]; never 0 so the log above is finite.
  static double unit(std::uint64_t bits) { return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53; }

  std::uint64_t key_;
};

}  // namespace beq
