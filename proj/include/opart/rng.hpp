#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace opart {

// Seeded generator with portable derived draws. The standard distributions
// are implementation-defined, so everything here is built directly on the
// mt19937_64 bit stream to keep runs reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Unit-rate exponential variate.
  double exponential();

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace opart
