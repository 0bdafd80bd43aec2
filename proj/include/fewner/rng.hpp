#ifndef FEWNER_RNG_HPP
#define FEWNER_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fewner {

// 64-bit FNV-1a. Used for subword hashing, config hashes and seed mixing.
inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and an ordinal,
// so per-item streams never overlap regardless of processing order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t ordinal) {
  return splitmix64(splitmix64(seed) ^ splitmix64(ordinal + 0x51ed270b7f1c6a4dull));
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(seed, a), b);
}

// Deterministic random source. All distributions are derived from the raw
// mt19937_64 output by hand, so results are identical on every platform;
// the <random> distribution objects are implementation-defined and are not
// used anywhere in the library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 bits of precision.
  double next_uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Rejection sampling, unbiased.
  std::uint64_t next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller; caches the spare draw.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = next_uniform();
    } while (u1 <= 0.0);
    u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Geometric on {1,2,3,...} with success probability p:
  // P(n=j) = (1-p)^(j-1) p. Inverse CDF transform.
  std::uint64_t next_geometric(double p) {
    double u = next_uniform();
    if (u <= 0.0) return 1;
    const double n = std::floor(std::log1p(-u) / std::log1p(-p)) + 1.0;
    if (n < 1.0) return 1;
    if (n > 1e18) return static_cast<std::uint64_t>(1e18);
    return static_cast<std::uint64_t>(n);
  }

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), in selection order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (k > n) k = n;
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + static_cast<std::size_t>(next_below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline Rng make_stream(std::uint64_t seed, std::uint64_t ordinal) {
  return Rng(mix_seed(seed, ordinal));
}

}  // namespace fewner

#endif  // FEWNER_RNG_HPP
