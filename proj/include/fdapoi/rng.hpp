#ifndef FDAPOI_RNG_HPP
#define FDAPOI_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace fdapoi {

/// splitmix64 step; used to derive independent substream seeds from a
/// master seed and a counter. Derivation by counter keeps parallel
/// generation order-independent.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x51ed2701a2b9e4d5ULL));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t s1, std::uint64_t s2) {
  return derive_seed(derive_seed(master, s1), s2);
}

/// Deterministic standard-normal stream. std::normal_distribution's
/// algorithm is implementation-defined, so the Box-Muller transform is
/// spelled out here to keep streams identical across toolchains.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : eng_(seed) {}

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0,1], u2 in [0,1)
    const double u1 = ((eng_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = (eng_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925287 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fdapoi

#endif  // FDAPOI_RNG_HPP
