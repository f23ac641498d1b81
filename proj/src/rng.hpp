#pragma once

// Counter-based random streams.
//
// A stream is identified by a 64-bit key derived from (master seed, indices);
// the n-th draw is a pure function of (key, n). Any trajectory or disorder
// realization can therefore be replayed in isolation and the result never
// depends on scheduling.

#include <cstdint>
#include <initializer_list>

namespace mblw {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive hash of a seed and a list of indices.
constexpr std::uint64_t derive_key(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> ids) noexcept {
  std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (auto id : ids) h = splitmix64(h ^ splitmix64(id + 0x3c6ef372fe94f82bULL));
  return h;
}

class Stream {
 public:
  constexpr Stream() noexcept = default;
  constexpr explicit Stream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr Stream disorder(std::uint64_t master_seed,
                                   std::uint64_t realization) noexcept {
    return Stream(derive_key(master_seed, {0, realization}));
  }
  static constexpr Stream trajectory(std::uint64_t master_seed, std::uint64_t realization,
                                     std::uint64_t trajectory) noexcept {
    return Stream(derive_key(master_seed, {1, realization, trajectory}));
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

  constexpr std::uint64_t next_u64() noexcept {
    return splitmix64(key_ ^ splitmix64(counter_++));
  }

  /// Uniform on [0, 1) with 53 random bits.
  constexpr double next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  constexpr bool next_bit() noexcept { return (next_u64() >> 63) != 0; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace mblw
