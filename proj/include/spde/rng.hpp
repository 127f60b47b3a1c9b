#pragma once

#include <cstdint>
#include <random>

namespace spde::rng {

// splitmix64 finalizer, decorrelates structured seed inputs
inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent logical streams hanging off one master seed.  Each
// (trajectory, stream) pair gets its own engine so the draw order inside a
// run never depends on scheduling.
enum class Stream : std::uint64_t {
  kNoise = 1,
  kNoisePrime = 2,
  kTheta = 3,
  kAux = 4,
  kAuxPrime = 5,
};

inline std::uint64_t derive(std::uint64_t master, std::uint64_t trajectory, Stream s) {
  std::uint64_t h = mix(master ^ 0x5350444553494dULL);
  h = mix(h ^ trajectory);
  h = mix(h ^ static_cast<std::uint64_t>(s));
  return h;
}

inline std::mt19937_64 engine(std::uint64_t seed) { return std::mt19937_64{seed}; }

}  // namespace spde::rng
