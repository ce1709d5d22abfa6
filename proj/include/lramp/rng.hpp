#ifndef LRAMP_RNG_HPP
#define LRAMP_RNG_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace lramp {

// Named sub-streams derived from a master seed. Keeping the purposes on
// separate streams means e.g. growing n extends each stream instead of
// reshuffling unrelated randomness.
enum class RngUse : std::uint64_t {
  prior_draw = 1,
  channel_noise = 2,
  amp_init = 3,
  quadrature = 4,
  spectral_start = 5,
  prior_draw_v = 6,
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Mixes (master, use, index) into a 64-bit stream seed.
inline std::uint64_t derive_seed(std::uint64_t master, RngUse use, std::uint64_t index = 0) {
  std::uint64_t s = master;
  std::uint64_t a = detail::splitmix64(s);
  s ^= static_cast<std::uint64_t>(use) * 0xd1342543de82ef95ULL;
  std::uint64_t b = detail::splitmix64(s);
  s ^= index * 0xaf251af3b0f025b5ULL;
  std::uint64_t c = detail::splitmix64(s);
  return a ^ (b + 0x2545f4914f6cdd1dULL * c);
}

// xoshiro256++ with splitmix64 seeding. Self-contained so that streams are
// reproducible independent of the standard library implementation.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = detail::splitmix64(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log argument.
  double uniform_pos() { return 1.0 - uniform(); }

  // Standard normal via Box-Muller; one cached value per pair.
  double normal() {
    if (has_cache_) {
      has_cache_ = false;
      return cache_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double angle = 6.283185307179586476925286766559 * uniform();
    cache_ = radius * std::sin(angle);
    has_cache_ = true;
    return radius * std::cos(angle);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
  double cache_ = 0.0;
  bool has_cache_ = false;
};

}  // namespace lramp

#endif
