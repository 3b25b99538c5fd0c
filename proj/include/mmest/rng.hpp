#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "mmest/linalg.hpp"

namespace mmest {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The 64-bit
// seed is the key; `stream` occupies the upper half of the counter, so streams
// with distinct ids never overlap.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  // Standard normal by Box-Muller.
  double normal();
  double exponential();
  // Inversion for mean <= 10, PTRS rejection (Hormann 1993) above.
  std::int64_t poisson(double mean);
  // Index in [0, p.size()) drawn with probabilities p (inversion).
  int categorical(const Vec& p);

  // One block of the raw bijection, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                             std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t block_ = 0;
  std::uint64_t stream_;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mmest
