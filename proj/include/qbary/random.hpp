#pragma once

#include <cstdint>
#include <random>

namespace qbary {

/// Deterministic random stream. Uniform and normal draws are derived from the
/// raw 64-bit engine output directly so results do not depend on the
/// standard library's distribution implementations.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed = 0) : engine_(seed) {}

  /// Stream for (master seed, entity id, purpose tag); independent of the
  /// order in which streams are created.
  static RandomStream derive(std::uint64_t master, std::uint64_t id, std::uint64_t tag);

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal();

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

namespace stream_tag {
inline constexpr std::uint64_t samples = 0x59;      // Y draws
inline constexpr std::uint64_t quantize = 0x51;     // categorical draws
inline constexpr std::uint64_t dual_value = 0x44;   // dual estimate
inline constexpr std::uint64_t measures = 0x4d;     // measure generation
inline constexpr std::uint64_t graph = 0x47;
}  // namespace stream_tag

}  // namespace qbary
