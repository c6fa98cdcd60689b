#include "diffsetlab/kernels.hpp"

#include <cmath>

namespace dsl::kern {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/* Neumaier update: s += y with running compensation c. */
inline void acc(double& s, double& c, double y) {
  double t = s + y;
  if (std::fabs(s) >= std::fabs(y))
    c += (s - t) + y;
  else
    c += (y - t) + s;
  s = t;
}

void phase_sum_scalar(const double* turns, std::size_t n, double* re, double* im) {
  double sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double th = kTwoPi * turns[i];
    acc(sr, cr, std::cos(th));
    acc(si, ci, std::sin(th));
  }
  *re = sr + cr;
  *im = si + ci;
}

std::uint64_t and_popcount_scalar(const std::uint64_t* a, const std::uint64_t* b,
                                  std::size_t nwords) {
  std::uint64_t total = 0;
  for (std::size_t w = 0; w < nwords; ++w) total += static_cast<std::uint64_t>(__builtin_popcountll(a[w] & b[w]));
  return total;
}

std::uint64_t shifted_and_popcount_scalar(const std::uint64_t* a, const std::uint64_t* b,
                                          std::size_t nbits, std::size_t shift) {
  if (shift >= nbits) return 0;
  const std::size_t nwords = (nbits + 63) / 64;
  const std::size_t ws = shift / 64;
  const unsigned bs = static_cast<unsigned>(shift % 64);
  std::uint64_t total = 0;
  for (std::size_t w = ws; w < nwords; ++w) {
    std::uint64_t bw = b[w - ws] << bs;
    if (bs && w > ws) bw |= b[w - ws - 1] >> (64 - bs);
    total += static_cast<std::uint64_t>(__builtin_popcountll(a[w] & bw));
  }
  return total;
}

const Backend kScalar = {"scalar", phase_sum_scalar, and_popcount_scalar,
                         shifted_and_popcount_scalar};

}  // namespace

const Backend& scalar_backend() { return kScalar; }

}  // namespace dsl::kern

namespace dsl::phase {

namespace {

/* Exact product split: a*b = hi + lo. */
inline void two_prod(double a, double b, double& hi, double& lo) {
  hi = a * b;
  lo = __builtin_fma(a, b, -hi);
}

}  // namespace

double mulmod1(double a, unsigned __int128 p) {
  // Walk 32-bit limbs of p from the bottom. scaled_i = frac(a * 2^{32 i}) is
  // exact (power-of-two scaling then exact remainder), so the only rounding
  // is in the final compensated accumulation.
  double sum = 0.0, comp = 0.0;
  double scaled = __builtin_remainder(a, 1.0);
  while (p != 0) {
    std::uint32_t limb = static_cast<std::uint32_t>(p & 0xffffffffu);
    if (limb != 0) {
      double hi, lo;
      two_prod(scaled, static_cast<double>(limb), hi, lo);
      hi = __builtin_remainder(hi, 1.0);
      double t = sum + hi;
      if (__builtin_fabs(sum) >= __builtin_fabs(hi))
        comp += (sum - t) + hi;
      else
        comp += (hi - t) + sum;
      sum = t;
      comp += lo;
    }
    p >>= 32;
    if (p != 0) scaled = __builtin_remainder(scaled * 4294967296.0, 1.0);
  }
  return __builtin_remainder(sum + comp, 1.0);
}

double mulmod1_signed(double a, __int128 p) {
  if (p >= 0) return mulmod1(a, static_cast<unsigned __int128>(p));
  double t = mulmod1(a, static_cast<unsigned __int128>(-p));
  return __builtin_remainder(-t, 1.0);
}

double turn_from_residue(std::int64_t r, std::int64_t q) {
  r %= q;
  return __builtin_remainder(static_cast<double>(r) / static_cast<double>(q), 1.0);
}

}  // namespace dsl::phase
