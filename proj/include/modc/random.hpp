#pragma once

// Seed derivation and the random stream wrapper shared by every module.
//
// All stochastic work is keyed by a seed derived from (master seed, tags...),
// never by a shared generator, so results do not depend on how work is
// scheduled across threads.

#include <cstdint>
#include <random>
#include <string_view>
#include <type_traits>

namespace modc {

inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {
inline constexpr std::uint64_t seed_part(std::string_view s) noexcept { return fnv1a64(s); }
inline constexpr std::uint64_t seed_part(const char* s) noexcept { return fnv1a64(s); }
template <typename T>
  requires std::is_integral_v<T>
inline constexpr std::uint64_t seed_part(T v) noexcept {
  return static_cast<std::uint64_t>(v);
}
}  // namespace detail

/// Derives an independent stream seed from a master seed and any mix of
/// integer and string tags. Order of tags matters.
template <typename... Parts>
constexpr std::uint64_t derive_seed(std::uint64_t master, const Parts&... parts) noexcept {
  std::uint64_t h = mix64(master);
  ((h = mix64(h ^ mix64(detail::seed_part(parts)))), ...);
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  /// Uniform integer in [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }
  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform() < p;
  }
  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }
  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    if (x + y <= 0.0) return a >= b ? 1.0 : 0.0;
    return x / (x + y);
  }
  std::uint64_t next() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace modc
