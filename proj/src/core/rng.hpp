#pragma once

#include <cstdint>
#include <vector>

namespace hmnas {

// splitmix64: fixed algorithm, identical output on every platform. Used both
// as a seed mixer and as the hash behind the deterministic surrogate, so it
// must never be swapped for an implementation-defined std:: facility.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream ^ 0xa0761d6478bd642fULL));
}

// Maps a 64-bit word to [0, 1). Pure IEEE double arithmetic, bit-stable.
inline double unit_double(uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Deterministic generator: splitmix64 sequence with explicitly defined
// bounded-draw semantics (std::uniform_int_distribution is
// implementation-defined and would break cross-platform reproducibility).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // Uniform in [0, bound) via rejection; bound must be >= 1.
  uint64_t bounded(uint64_t bound) {
    const uint64_t threshold = (0ULL - bound) % bound;
    for (;;) {
      uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  size_t index(size_t size) { return static_cast<size_t>(bounded(size)); }

  double uniform01() { return unit_double(next()); }

  // k distinct values from [0, n), order of selection preserved.
  std::vector<int64_t> sample_without_replacement(int64_t n, int64_t k) {
    std::vector<int64_t> pool(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;
    std::vector<int64_t> out;
    out.reserve(static_cast<size_t>(k));
    for (int64_t i = 0; i < k; ++i) {
      size_t j = static_cast<size_t>(i) + index(pool.size() - static_cast<size_t>(i));
      std::swap(pool[static_cast<size_t>(i)], pool[j]);
      out.push_back(pool[static_cast<size_t>(i)]);
    }
    return out;
  }

 private:
  uint64_t state_;
};

// FNV-1a over bytes; used for genome-keyed hash noise in the surrogate.
inline uint64_t fnv1a(const void* data, size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace hmnas
