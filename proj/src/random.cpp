#include "qbary/random.hpp"

#include <cmath>
#include <numbers>

namespace qbary {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream RandomStream::derive(std::uint64_t master, std::uint64_t id, std::uint64_t tag) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ splitmix64(id + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ splitmix64(tag + 0x8cb92ba72f3d8dd7ULL));
  return RandomStream(h);
}

double RandomStream::normal() {
  // 1 - u lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RandomStream::below(std::uint64_t bound) {
  // Reject the low residue range so the modulo is unbiased.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % bound;
  }
}

}  // namespace qbary
