#ifndef DIFFSETLAB_FOURIER_HPP
#define DIFFSETLAB_FOURIER_HPP

// Discrete Fourier analysis on Z^k restricted to boxes. Functions supported
// in an anisotropic box embed into a finite cyclic group large enough that
// cyclic convolution equals linear convolution (no wraparound) and the
// frequency lattice xi/T resolves the rational boxes the classifier uses.
// Transforms are radix-2 FFTs over power-of-two cycle lengths, axis by axis,
// fully sequential, so results are bit-reproducible.

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diffsetlab/core.hpp"

namespace dsl::fourier {

using cplx = std::complex<double>;

inline constexpr std::int64_t kDefaultMaxCells = std::int64_t{1} << 23;

// ---------------------------------------------------------------------------
// EmbeddingGroup: cycle lengths T_j = 2^t >= max(2M^j + 1, ceil(eta^-k M^j)),
// so cyclic convolution is linear on box supports and the frequency lattice
// spacing 1/T_j resolves boxes of half-width eta^-k / M^j.
// The first bound kills wraparound for supports in [1, M^j] under differences;
// the second makes the lattice spacing 1/T_j at most a quarter of the
// rational-box half-width eta^{-k}/M^j, so every box catches a grid of
// frequencies. Pass no eta when the group is only used for exact counting.

struct EmbeddingGroup {
  int k = 0;
  std::int64_t M = 0;
  std::vector<std::int64_t> T;         // power-of-two cycle lengths
  std::optional<BigRat> eta;           // resolution target, when relevant

  static EmbeddingGroup for_box(int k, std::int64_t M,
                                const std::optional<BigRat>& eta = std::nullopt,
                                std::int64_t max_cells = kDefaultMaxCells);

  std::int64_t cells() const;                          // prod T_j
  std::int64_t flat_index(const std::int64_t* m) const;  // cyclic reduction
  void unflatten(std::int64_t flat, std::int64_t* out) const;  // out[j] in [0,T_j)
};

// Dense real-valued function on the group, flat row-major (last axis fastest).
struct LatticeFn {
  EmbeddingGroup group;
  std::vector<double> v;

  explicit LatticeFn(EmbeddingGroup g);
  LatticeFn() = default;
  double& at(const std::int64_t* m) { return v[static_cast<std::size_t>(group.flat_index(m))]; }
};

// DFT values fhat(xi_1/T_1, ..., xi_k/T_k) at every lattice frequency.
struct Spectrum {
  EmbeddingGroup group;
  std::vector<cplx> v;

  double lattice_measure() const;      // 1 / prod T_j
};

// ---------------------------------------------------------------------------
// Construction of lattice functions. Both throw a precondition error when the
// support could wrap around the torus (box bounds exceeding (T_j - 1)/2).

LatticeFn lattice_indicator(const PointSet& B, const EmbeddingGroup& g);
LatticeFn lattice_curve(const MonomialCurveWindow& S, const EmbeddingGroup& g);

// f_B = 1_B - delta*1_{Q_M}. The double array feeds the FFT; the integer
// counts alongside make mean-zero checkable exactly: f_B * |Q_M| takes value
// |Q_M| - |B| on B and -|B| elsewhere in the box.
struct BalanceFunction {
  LatticeFn fn;
  BigRat delta;
  BigInt box_volume;
  BigInt set_size;
  BigInt cells_on;                     // box cells written with the B value
  BigInt cells_off;

  BigInt sum_scaled() const;           // sum over the box of f_B * |Q_M|, exact
  BigRat sum_exact() const;            // sum_scaled / |Q_M|
  BigRat l2_norm_exact() const;        // sum f_B^2 = delta(1-delta)|Q_M|
};

BalanceFunction balance_function(const PointSet& B, const EmbeddingGroup& g);

// ---------------------------------------------------------------------------
// Transforms. Forward kernel e^{-2 pi i m.xi/T}; idft inverts exactly up to
// rounding (returns the real part).

Spectrum dft(const LatticeFn& f);
LatticeFn idft(const Spectrum& s);

// ---------------------------------------------------------------------------
// Weyl sums over the truncated monomial curve: sum over 1 <= d <= floor(eps*M)
// of e^{-2 pi i (alpha_1 d + alpha_2 d^2 + ... + alpha_k d^k)}. Phases are
// reduced exactly before the trig evaluation, so precision is independent of
// the size of d^j. The rational overload keeps the phase arithmetic in
// residues mod the denominators.

cplx weyl_sum(const std::vector<double>& alpha, std::int64_t M, const BigRat& eps);
cplx weyl_sum(const std::vector<BigRat>& alpha, std::int64_t M, const BigRat& eps);

// ---------------------------------------------------------------------------
// The weighted pair count sum_{m,n} f_B(m) f_B(n) 1_S(m - n), evaluated two
// independent ways in exact rational arithmetic: directly, and expanded into
// the four indicator sums obtained by substituting f_B = 1_B - delta*1_{Q_M}.

struct CountIdentity {
  BigRat direct;
  BigRat four_term;
  BigInt pairs_bb;                     // |{(b, b') in B x B : b - b' in S}|
  BigInt pairs_bq;                     // m in B, n in Q_M
  BigInt pairs_qb;                     // m in Q_M, n in B
  BigInt pairs_qq;                     // both in Q_M
};

CountIdentity weighted_count_identity(const PointSet& B, const BigRat& eps);

// ---------------------------------------------------------------------------
// Spectral evaluation of the same pair count: (1/prod T) sum_xi |fhat(xi)|^2
// conj(shat(xi)). `value` matches the direct count; `abs_value` replaces
// conj(shat) by |shat| and dominates it.

struct SpectralCount {
  double value;
  double abs_value;
};

SpectralCount spectral_correlation(const Spectrum& fhat, const Spectrum& shat);
SpectralCount spectral_count(const PointSet& B, const BigRat& eps,
                             std::int64_t max_cells = kDefaultMaxCells);

// ---------------------------------------------------------------------------
// Export: raw little-endian (re, im) doubles plus a JSON sidecar carrying
// {T, k, M, eta}. Returns the two paths written (base + ".bin" / ".json").

std::pair<std::string, std::string> write_spectrum(const Spectrum& s, const std::string& base_path);

// Equal-width magnitude histogram over [0, max|v|]; (upper_edge, count) rows.
std::vector<std::pair<double, std::int64_t>> magnitude_histogram(const Spectrum& s, int bins);

}  // namespace dsl::fourier

#endif  // DIFFSETLAB_FOURIER_HPP
