#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "diffsetlab/core.hpp"

namespace dsl::arcs {

using cplx = std::complex<double>;

// A box of frequencies centered on the rational point (a_1/q, ..., a_k/q),
// with per-axis half-width eta^{-k} / M^j measured on the torus.
struct MajorBoxSpec {
  int k = 0;
  std::int64_t q = 1;
  std::vector<std::int64_t> a;  // one numerator per axis, each in [1, q]
  BigRat eta;
  std::int64_t M = 1;

  void validate() const;
  BigRat half_width(int j) const;  // axis j in [0, k)
  bool contains(const std::vector<BigRat>& alpha) const;
};

struct Classification {
  bool major = false;
  std::int64_t q = 0;           // least modulus that captures alpha; 0 if none
  std::vector<std::int64_t> a;  // witness numerators, empty when minor
};

// Scan moduli q = 1, 2, ..., floor(eta^{-k}) in increasing order and return
// the first box containing alpha. Distances are exact rational comparisons,
// so the classification is deterministic and has no floating-point seam.
Classification classify_frequency(const std::vector<BigRat>& alpha, const BigRat& eta,
                                  std::int64_t M);

struct GaussSumResult {
  cplx value;
  double magnitude = 0.0;
  bool coprime = false;       // gcd(a_1, ..., a_k, q) == 1
  double power_saving = 0.0;  // magnitude / q^{1 - 1/k}
  bool hua_ok = true;         // power_saving <= hua_constant (report only)
};

// Complete exponential sum S(a, q) = sum_{r=0}^{q-1} e(P(a, r)/q) where
// P(a, r) = a_1 r + ... + a_k r^k. Phases are exact residues mod q, so the
// only rounding is in the final cos/sin evaluation. magnitude <= q is a
// theorem and is enforced; the power-saving constant is an empirical quantity
// reported through hua_ok, never an error.
GaussSumResult gauss_sum(const std::vector<std::int64_t>& a, std::int64_t q,
                         double hua_constant = 2.0);

struct OscillatoryIntegral {
  cplx value;
  double error_bound = 0.0;  // accumulated per-panel error estimate
  std::int64_t panels = 0;
  double decay_ratio = 0.0;  // |value| * (1 + sum_j |beta_j| N^j)^{1/k} / N
  bool decay_ok = true;      // decay_ratio <= vdc_constant (report only)
};

// v_N(beta) = integral_0^N e(beta_1 x + ... + beta_k x^k) dx via adaptive
// Gauss-Kronrod 7-15 panels, to absolute error <= tol_scale * N. The decay
// constant is empirical and reported through decay_ok, never an error; the
// call fails with a resource error (carrying the best estimate) only if the
// refinement budget is exhausted first.
OscillatoryIntegral oscillatory_integral(const std::vector<double>& beta, double N,
                                         double tol_scale = 1e-8,
                                         double vdc_constant = 8.0);

// The same integral by adaptive Simpson, as an independent cross-check.
cplx oscillatory_integral_simpson(const std::vector<double>& beta, double N,
                                  double tol = 1e-9);

struct WeylRatioResult {
  double lhs = 0.0;    // |sum_{d <= N} e(-(alpha_1 d + ... + alpha_k d^k))|
  double rhs = 0.0;    // N^{1+eps} * (1/q + 1/N + q/N^k)^{2^{1-k}}
  double ratio = 0.0;  // lhs / rhs
};

// Empirical constant in the Weyl inequality for a full frequency vector
// alpha whose leading entry alpha_k is approximated by a/q. Preconditions:
// gcd(a, q) = 1 and |alpha_k - a/q| <= 1/q^2. Reports only; asserts nothing
// about the ratio.
WeylRatioResult weyl_inequality_ratio(const std::vector<BigRat>& alpha, std::int64_t a,
                                      std::int64_t q, std::int64_t N, double eps_exp);

struct MinorArcSweep {
  std::int64_t trials = 0;         // frequencies sampled
  std::int64_t minor_samples = 0;  // how many of them classified as minor
  double max_ratio = 0.0;          // max |curve_hat| / (eta * D) over minor samples
  std::int64_t flagged = 0;        // samples whose ratio exceeded consts.C
  std::uint64_t seed = 0;
};

// Sample `trials` uniform dyadic-rational frequencies, keep the ones that
// classify as minor, and report the empirical constant in the minor-arc
// bound |curve_hat(alpha)| <= C * eta * D. Exceedances are counted, not
// thrown: they are calibration events for the C constant.
MinorArcSweep verify_minor_estimate(const BigRat& eta, std::int64_t M, std::int64_t trials,
                                    std::uint64_t seed, const LabConstants& consts);

struct MajorArcSweep {
  std::int64_t q = 0;
  std::int64_t samples = 0;
  double max_ratio = 0.0;          // max |curve_hat| * q^{1/k} / D
  double max_refined_ratio = 0.0;  // with the (1 + sum_j D^j dist_j)^{-1/k} factor
};

// Enumerate embedding-lattice frequencies lying inside the modulus-q boxes
// (coprime centers only) and report the empirical constants of the major-arc
// bound. When the boxes hold more than max_samples lattice points, a
// deterministic stride subsample is used.
MajorArcSweep verify_major_estimate(std::int64_t q, const BigRat& eta, std::int64_t M,
                                    const LabConstants& consts,
                                    std::int64_t max_samples = 4096);

}  // namespace dsl::arcs
