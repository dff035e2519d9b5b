#pragma once

#include <cstdint>

#include "droplet/bigint.hpp"

namespace droplet {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** keyed by (seed, stream).  Distinct streams are seeded through
// splitmix64 so that stream k's output depends only on (seed, k).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t sm = seed;
    const std::uint64_t key = splitmix64(sm) ^ (stream * 0xd1342543de82ef95ULL);
    std::uint64_t st = key;
    for (auto& w : s_) w = splitmix64(st);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, n), unbiased (Lemire's multiply-and-reject).
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Uniform big integer on [0, bound) by rejection on msb(bound)+1 random bits.
  BigInt below(const BigInt& bound) {
    detail::require(bound > 0, "RandomStream::below: bound must be positive");
    const auto bits = boost::multiprecision::msb(bound) + 1;
    while (true) {
      BigInt v = 0;
      std::size_t filled = 0;
      while (filled < bits) {
        v = (v << 64) | BigInt(next());
        filled += 64;
      }
      v >>= (filled - bits);
      if (v < bound) return v;
    }
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
};

}  // namespace droplet
