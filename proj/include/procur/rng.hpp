#ifndef PROCUR_RNG_HPP
#define PROCUR_RNG_HPP

#include <cstdint>
#include <random>

namespace procur {

// Deterministic stream derivation: every (seed, index) pair yields the same
// mt19937_64 sequence on every platform, so batch row i can be recomputed in
// isolation. splitmix64 is the usual seed scrambler.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  // Uniform double in [0, 1) built from the top 53 bits; avoids
  // std::generate_canonical, whose output is implementation-defined.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

inline RngStream derive_stream(std::uint64_t seed, std::uint64_t index) {
  return RngStream(splitmix64(splitmix64(seed) ^ splitmix64(~index)));
}

}  // namespace procur

#endif
