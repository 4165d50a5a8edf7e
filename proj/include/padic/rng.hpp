#pragma once

#include <cstdint>
#include <random>

namespace padic {

/// Seeded stream: std::mt19937_64 (its output sequence is fixed by the C++
/// standard) reduced to [0, n) by rejection on the raw 64-bit words. The
/// standard distributions are avoided because their output is
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do v = eng_();
    while (v >= limit);
    return v % n;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace padic
