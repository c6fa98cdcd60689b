#ifndef DIFFSETLAB_KERNELS_HPP
#define DIFFSETLAB_KERNELS_HPP

// Data-parallel inner loops, provided as a scalar reference implementation
// plus an AVX2 variant selected at runtime. Everything here is pure
// arithmetic on flat arrays; the two implementations are equivalence-tested
// against each other (tests/test_kernels.cpp).
//
// Contracts:
//  * phase_sum consumes phases measured in turns (cycles), pre-reduced to
//    [-0.5, 0.5]; it accumulates sum of (cos(2*pi*t), sin(2*pi*t)) with
//    compensated (Neumaier) summation in a fixed order, so results are
//    independent of chunking.
//  * bit arrays are LSB-first uint64 words with canonical zero padding: bits
//    at positions >= nbits are zero. shifted_and_popcount counts positions
//    i in [shift, nbits) with a[i] = b[i-shift] = 1.

#include <cstddef>
#include <cstdint>

namespace dsl::kern {

struct Backend {
  const char* name;
  void (*phase_sum)(const double* turns, std::size_t n, double* re, double* im);
  std::uint64_t (*and_popcount)(const std::uint64_t* a, const std::uint64_t* b,
                                std::size_t nwords);
  std::uint64_t (*shifted_and_popcount)(const std::uint64_t* a, const std::uint64_t* b,
                                        std::size_t nbits, std::size_t shift);
};

const Backend& scalar_backend();

// AVX2+FMA variant, or nullptr when the binary or the CPU lacks it.
const Backend* avx2_backend();

// Runtime selection: AVX2 when available unless DIFFSETLAB_FORCE_SCALAR=1.
const Backend& active_backend();

}  // namespace dsl::kern

namespace dsl::phase {

// Fractional part of x in [-0.5, 0.5] (exact: remainder by 1.0 is exact).
inline double reduce(double x) { return __builtin_remainder(x, 1.0); }

// a*p mod 1, in [-0.5, 0.5], computed limb-wise so the result is accurate to
// a few ulps even when a*p is astronomically large. p >= 0.
double mulmod1(double a, unsigned __int128 p);

// Same with a signed multiplier.
double mulmod1_signed(double a, __int128 p);

// r/q as a turn in [-0.5, 0.5] (exact residue phase, one rounding).
double turn_from_residue(std::int64_t r, std::int64_t q);

}  // namespace dsl::phase

#endif  // DIFFSETLAB_KERNELS_HPP
