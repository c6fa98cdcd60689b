// AVX2+FMA variants of the kernels. This translation unit is the only one
// compiled with -mavx2 -mfma; it must never run unless the dispatcher checked
// CPU support. sin/cos use quarter-turn range reduction (exact for reduced
// inputs) plus Taylor polynomials on [-pi/4, pi/4], giving ~1-2 ulp per
// element; the equivalence test pins the tolerance against the scalar path.

#include "diffsetlab/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace dsl::kern {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPiOver2 = 1.5707963267948966192313216916398;

// sin z = z * (1 + x*(S[0] + x*(S[1] + ...))), x = z^2   (Taylor 1/(2n+1)!)
const double S[7] = {
    -1.0 / 6,           +1.0 / 120,          -1.0 / 5040,        +1.0 / 362880,
    -1.0 / 39916800,    +1.0 / 6227020800.0, -1.0 / 1307674368000.0};
// cos z = 1 + x*(C[0] + x*(C[1] + ...)), x = z^2          (Taylor 1/(2n)!)
const double C[8] = {
    -1.0 / 2,           +1.0 / 24,           -1.0 / 720,         +1.0 / 40320,
    -1.0 / 3628800,     +1.0 / 479001600.0,  -1.0 / 87178291200.0,
    +1.0 / 20922789888000.0};

inline __m256d poly_sin(__m256d z, __m256d x) {
  __m256d p = _mm256_set1_pd(S[6]);
  for (int i = 5; i >= 0; --i) p = _mm256_fmadd_pd(p, x, _mm256_set1_pd(S[i]));
  // z + z*x*p
  return _mm256_fmadd_pd(_mm256_mul_pd(z, x), p, z);
}

inline __m256d poly_cos(__m256d x) {
  __m256d p = _mm256_set1_pd(C[7]);
  for (int i = 6; i >= 0; --i) p = _mm256_fmadd_pd(p, x, _mm256_set1_pd(C[i]));
  return _mm256_fmadd_pd(x, p, _mm256_set1_pd(1.0));
}

/* Vector Neumaier: s += y, compensation c. */
inline void acc_pd(__m256d& s, __m256d& c, __m256d y) {
  __m256d t = _mm256_add_pd(s, y);
  __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d as = _mm256_and_pd(s, abs_mask);
  __m256d ay = _mm256_and_pd(y, abs_mask);
  __m256d big_s = _mm256_cmp_pd(as, ay, _CMP_GE_OQ);
  __m256d corr_s = _mm256_add_pd(_mm256_sub_pd(s, t), y);
  __m256d corr_y = _mm256_add_pd(_mm256_sub_pd(y, t), s);
  c = _mm256_add_pd(c, _mm256_blendv_pd(corr_y, corr_s, big_s));
  s = t;
}

inline void acc_sc(double& s, double& c, double y) {
  double t = s + y;
  if (std::fabs(s) >= std::fabs(y))
    c += (s - t) + y;
  else
    c += (y - t) + s;
  s = t;
}

void phase_sum_avx2(const double* turns, std::size_t n, double* re, double* im) {
  __m256d sumc = _mm256_setzero_pd(), compc = _mm256_setzero_pd();
  __m256d sums = _mm256_setzero_pd(), comps = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_loadu_pd(turns + i);
    // theta = 2*pi*t = (pi/2) * (q + rho), q = round(4t), rho in [-1/2, 1/2].
    __m256d u = _mm256_mul_pd(t, _mm256_set1_pd(4.0));
    __m256d qf = _mm256_round_pd(u, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d rho = _mm256_sub_pd(u, qf);
    __m256d z = _mm256_mul_pd(rho, _mm256_set1_pd(kPiOver2));
    __m256d x = _mm256_mul_pd(z, z);
    __m256d sn = poly_sin(z, x);
    __m256d cs = poly_cos(x);
    // Quadrant fixup via q mod 4.
    __m128i qi = _mm256_cvtpd_epi32(qf);
    __m128i qm = _mm_and_si128(qi, _mm_set1_epi32(3));
    __m256i q64 = _mm256_cvtepi32_epi64(qm);
    __m256d is1 = _mm256_castsi256_pd(_mm256_cmpeq_epi64(q64, _mm256_set1_epi64x(1)));
    __m256d is2 = _mm256_castsi256_pd(_mm256_cmpeq_epi64(q64, _mm256_set1_epi64x(2)));
    __m256d is3 = _mm256_castsi256_pd(_mm256_cmpeq_epi64(q64, _mm256_set1_epi64x(3)));
    __m256d swap = _mm256_or_pd(is1, is3);              // quadrants 1,3: sin<->cos
    __m256d sin_v = _mm256_blendv_pd(sn, cs, swap);
    __m256d cos_v = _mm256_blendv_pd(cs, sn, swap);
    __m256d neg_sin = _mm256_or_pd(is2, is3);           // sin negated in q=2,3
    __m256d neg_cos = _mm256_or_pd(is1, is2);           // cos negated in q=1,2
    __m256d signbit = _mm256_set1_pd(-0.0);
    sin_v = _mm256_xor_pd(sin_v, _mm256_and_pd(neg_sin, signbit));
    cos_v = _mm256_xor_pd(cos_v, _mm256_and_pd(neg_cos, signbit));
    acc_pd(sumc, compc, cos_v);
    acc_pd(sums, comps, sin_v);
  }
  // Lane-ordered reduction, then the scalar tail; order is fixed so results
  // do not depend on how callers chunk their input.
  alignas(32) double lc[4], lcc[4], ls[4], lsc[4];
  _mm256_store_pd(lc, sumc);
  _mm256_store_pd(lcc, compc);
  _mm256_store_pd(ls, sums);
  _mm256_store_pd(lsc, comps);
  double sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0;
  for (int lane = 0; lane < 4; ++lane) {
    acc_sc(sr, cr, lc[lane]);
    cr += lcc[lane];
    acc_sc(si, ci, ls[lane]);
    ci += lsc[lane];
  }
  for (; i < n; ++i) {
    double th = kTwoPi * turns[i];
    acc_sc(sr, cr, std::cos(th));
    acc_sc(si, ci, std::sin(th));
  }
  *re = sr + cr;
  *im = si + ci;
}

std::uint64_t and_popcount_avx2(const std::uint64_t* a, const std::uint64_t* b,
                                std::size_t nwords) {
  std::uint64_t total = 0;
  std::size_t w = 0;
  for (; w + 4 <= nwords; w += 4) {
    __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + w));
    __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + w));
    __m256i x = _mm256_and_si256(va, vb);
    alignas(32) std::uint64_t tmp[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(tmp), x);
    total += static_cast<std::uint64_t>(__builtin_popcountll(tmp[0]));
    total += static_cast<std::uint64_t>(__builtin_popcountll(tmp[1]));
    total += static_cast<std::uint64_t>(__builtin_popcountll(tmp[2]));
    total += static_cast<std::uint64_t>(__builtin_popcountll(tmp[3]));
  }
  for (; w < nwords; ++w) total += static_cast<std::uint64_t>(__builtin_popcountll(a[w] & b[w]));
  return total;
}

std::uint64_t shifted_and_popcount_avx2(const std::uint64_t* a, const std::uint64_t* b,
                                        std::size_t nbits, std::size_t shift) {
  if (shift >= nbits) return 0;
  const std::size_t nwords = (nbits + 63) / 64;
  const std::size_t ws = shift / 64;
  const unsigned bs = static_cast<unsigned>(shift % 64);
  std::uint64_t total = 0;
  std::size_t w = ws;
  if (bs == 0) {
    return and_popcount_avx2(a + ws, b, nwords - ws);
  }
  // First word needs b[-1] = 0; handle it scalar, then stream 4 words a time.
  {
    std::uint64_t bw = b[0] << bs;
    total += static_cast<std::uint64_t>(__builtin_popcountll(a[w] & bw));
    ++w;
  }
  for (; w + 4 <= nwords; w += 4) {
    __m256i hi = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + (w - ws)));
    __m256i lo = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + (w - ws - 1)));
    __m256i bw = _mm256_or_si256(_mm256_slli_epi64(hi, static_cast<int>(bs)),
                                 _mm256_srli_epi64(lo, static_cast<int>(64 - bs)));
    __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + w));
    __m256i x = _mm256_and_si256(va, bw);
    alignas(32) std::uint64_t tmp[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(tmp), x);
    total += static_cast<std::uint64_t>(__builtin_popcountll(tmp[0]));
    total += static_cast<std::uint64_t>(__builtin_popcountll(tmp[1]));
    total += static_cast<std::uint64_t>(__builtin_popcountll(tmp[2]));
    total += static_cast<std::uint64_t>(__builtin_popcountll(tmp[3]));
  }
  for (; w < nwords; ++w) {
    std::uint64_t bw = (b[w - ws] << bs) | (b[w - ws - 1] >> (64 - bs));
    total += static_cast<std::uint64_t>(__builtin_popcountll(a[w] & bw));
  }
  return total;
}

const Backend kAvx2 = {"avx2", phase_sum_avx2, and_popcount_avx2, shifted_and_popcount_avx2};

}  // namespace

const Backend* avx2_backend_impl() { return &kAvx2; }

}  // namespace dsl::kern

#endif  // __AVX2__ && __FMA__
