#pragma once

#include <cstdint>
#include <random>

namespace lahm {

/// All sampling runs on mt19937_64 (fully specified by the standard) feeding
/// Boost.Random distributions, whose algorithms do not vary across standard
/// libraries. Same seed, same bits, on every platform.
using Engine = std::mt19937_64;

/// Seed for an independent substream keyed by (seed, index), via two rounds
/// of the splitmix64 finalizer. Lets trial i draw the same numbers no matter
/// which worker runs it.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t index) {
  return Engine(substream_seed(seed, index));
}

/// One Student-t draw as Z / sqrt(V / dof), Z ~ N(0,1), V ~ chi-square(dof).
double draw_student_t(Engine& engine, double dof);

}  // namespace lahm
