#ifndef SMCSTAB_RNG_HPP
#define SMCSTAB_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace smcstab {

// Counter-based random number generation. A stream is identified by a
// 128-bit key derived from (base_seed, tag path); drawing advances only a
// local counter. Distinct sibling tags produce distinct keys by
// construction: the tag enters through a bijective 64-bit finalizer, so the
// high key word is a bijection of the tag for a fixed parent. This is what
// makes replicate- and time-level splits reproducible regardless of
// scheduling.

namespace detail {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kSalt = 0xD1B54A32D192ED03ull;

// SplitMix64 finalizer; bijective on uint64.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

struct RngKey {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  friend bool operator==(const RngKey&, const RngKey&) = default;
};

inline RngKey key_from_seed(std::uint64_t base_seed) {
  RngKey k;
  k.hi = detail::mix64(base_seed + detail::kGolden);
  k.lo = detail::mix64(base_seed ^ detail::kSalt);
  return k;
}

// Child key; hi word is bijective in `tag` for a fixed parent, so sibling
// derivations never collide.
inline RngKey derive_key(RngKey parent, std::uint64_t tag) {
  RngKey c;
  c.hi = detail::mix64(parent.hi ^ detail::mix64(tag + detail::kGolden));
  c.lo = detail::mix64(parent.lo + detail::mix64(tag ^ detail::kSalt) + c.hi);
  return c;
}

// Counter-based engine: output i of a stream is a pure function of
// (key, i). Gaussian draws come from Box-Muller with one cached value.
class Rng {
 public:
  Rng() : key_(key_from_seed(0)) {}
  explicit Rng(RngKey key) : key_(key) {}
  explicit Rng(std::uint64_t seed) : key_(key_from_seed(seed)) {}

  RngKey key() const { return key_; }

  std::uint64_t next_u64() {
    ++counter_;
    std::uint64_t u = detail::mix64(counter_ * detail::kGolden + key_.lo);
    return detail::mix64(u ^ key_.hi);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1]
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform_pos();
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 6.283185307179586476925286766559 * u2;
    cached_ = radius * std::sin(angle);
    have_cached_ = true;
    return radius * std::cos(angle);
  }

  double exponential() { return -std::log(uniform_pos()); }

  // Uniform integer in [0, n), n >= 1. Rejection-free modulo is fine here:
  // n is always tiny compared to 2^64, the bias is < n/2^64.
  std::uint64_t uniform_below(std::uint64_t n) { return next_u64() % n; }

 private:
  RngKey key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// Named derivation path rooted at a base seed (cli-io seed streams).
class SeedStream {
 public:
  SeedStream() : root_(key_from_seed(0)) {}
  explicit SeedStream(std::uint64_t base_seed) : root_(key_from_seed(base_seed)) {}
  explicit SeedStream(RngKey root) : root_(root) {}

  RngKey root() const { return root_; }

  RngKey derive(std::initializer_list<std::uint64_t> tags) const {
    RngKey k = root_;
    for (std::uint64_t t : tags) k = derive_key(k, t);
    return k;
  }

  Rng rng(std::initializer_list<std::uint64_t> tags) const {
    return Rng(derive(tags));
  }

 private:
  RngKey root_;
};

// Purpose tags; first element of a derivation path.
namespace seed_tags {
constexpr std::uint64_t simulate = 0x51;
constexpr std::uint64_t observation_stream = 0x52;
constexpr std::uint64_t particle_init = 0x53;
constexpr std::uint64_t particle_step = 0x54;
constexpr std::uint64_t replicate = 0x55;
constexpr std::uint64_t experiment = 0x56;
}  // namespace seed_tags

}  // namespace smcstab

#endif
