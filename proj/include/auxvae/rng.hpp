#pragma once

// Deterministic random number generation.
//
// All stochastic behaviour in the library flows through Rng. The generator is
// std::mt19937_64 (bit-exact across platforms by the standard); the uniform and
// normal transforms are hand-rolled because std::uniform_real_distribution and
// std::normal_distribution are implementation-defined and would break
// reproducibility across standard libraries.
//
// Independent streams are derived, not split: derive_seed hashes a base seed
// with a label or index (FNV-1a), so e.g. the shuffle stream of epoch 7 in
// fold 3 is derive_seed(derive_seed(derive_seed(seed, "shuffle"), 3), 7).

#include <cstdint>
#include <cstring>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace auxvae {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a_bytes(const void* data, std::size_t n,
                                 std::uint64_t h = kFnvOffset) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
  std::uint64_t h = fnv1a_bytes(&base, sizeof(base));
  return fnv1a_bytes(label.data(), label.size(), h);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t h = fnv1a_bytes(&base, sizeof(base));
  return fnv1a_bytes(&index, sizeof(index), h);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 bits of mantissa.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  // Standard normal via Box-Muller. Stateless on purpose (no cached second
  // value): every call consumes exactly two generator words, so the draw
  // count of any code path is predictable.
  double normal() {
    double u1 = 1.0 - uniform01();  // (0, 1]; keeps log finite
    double u2 = uniform01();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n). Modulo bias is below 2^-50 for any n that
  // appears in practice and bit-exact reproducibility matters more here.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    return gen_() % n;
  }

  // Fisher-Yates.
  template <class Vec>
  void shuffle(Vec& v) {
    if (v.empty()) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace auxvae
