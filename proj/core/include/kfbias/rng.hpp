#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace kfbias {

/// splitmix64 finalizer (Steele/Lea/Flood; Vigna's fixed-increment variant).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives an independent child seed for replication `index` from a master
/// seed. Deterministic; children are usable concurrently.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ ((index + 1) * 0x9E3779B97F4A7C15ULL));
}

/// Counter-based standard-normal stream.
///
/// Protocol (fixed, so runs are reproducible and auditable):
///  - the k-th raw word is mix64(seed + k * 0x9E3779B97F4A7C15), k = 1, 2, ...
///    (the splitmix64 sequence seeded at `seed`);
///  - a word maps to (0,1) as ((word >> 11) + 0.5) * 2^-53;
///  - each normal consumes exactly two words (u1, u2) and is the Box-Muller
///    cosine branch sqrt(-2 ln u1) * cos(2 pi u2).
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : seed_(seed) {}

  double next() {
    const double u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  Eigen::VectorXd next_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      v(i) = next();
    }
    return v;
  }

  std::uint64_t words_consumed() const { return counter_; }

 private:
  std::uint64_t next_u64() {
    return mix64(seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL);
  }
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace kfbias
