#pragma once

#include <cstdint>
#include <string_view>

namespace credit {

// All experiment randomness flows from one root seed. Component streams are
// derived as splitmix64(root ^ fnv1a(tag) ^ golden*(index+1)) so that any
// (tag, index) pair names a reproducible, statistically independent stream.

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                    std::uint64_t index = 0) {
  return splitmix64(root ^ fnv1a64(tag) ^ (0x9e3779b97f4a7c15ull * (index + 1)));
}

// Small deterministic generator (splitmix64 stream). Used instead of the
// standard distributions so draws are identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  // Uniform integer in [0, n), n >= 1. Rejection sampling keeps it unbiased.
  int next_int(int n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = ~0ull - (~0ull % bound);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<int>(x % bound);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Fisher-Yates shuffle.
  template <class T>
  void shuffle(T& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      const int j = next_int(i + 1);
      using std::swap;
      swap(v[i], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace credit
