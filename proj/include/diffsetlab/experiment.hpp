#ifndef DIFFSETLAB_EXPERIMENT_HPP
#define DIFFSETLAB_EXPERIMENT_HPP

// Deterministic experiment tables and provenance plumbing shared by the CLI
// and the acceptance suite. Every table is produced as a complete string so
// regeneration can be compared byte for byte against committed fixtures; the
// empirical_constant column repeats the table-wide maximum of the quantity
// column, making any drift visible in a single cell.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "diffsetlab/core.hpp"

namespace dsl::experiment {

// "p" or "p/q", optional leading sign, exact.
BigRat parse_rational(const std::string& text);

// %.17g rendering, enough digits to round-trip a double.
std::string format_double(double v);

// Exact "p/q" (plain "p" for integers).
std::string rational_string(const BigRat& r);

// FNV-1a hash (as 16 hex digits) of the parameters serialized as sorted
// "key=value" lines. Carried by every output record and table row set.
std::string config_hash(const std::vector<std::pair<std::string, std::string>>& params);

// ---------------------------------------------------------------------------
// Fixture tables. Shared column layout for the exponential-sum tables:
// k,M_or_N,q,eta,quantity,empirical_constant,seed.

// Complete-sum power saving |S(a,q)| / q^{1-1/k}: one row per (k, q), the
// quantity being the max over two canonical numerator tuples plus
// samples_per_q seeded coprime tuples.
std::string hua_table_csv(std::int64_t q_max, const std::vector<int>& ks,
                          int samples_per_q, std::uint64_t seed,
                          double hua_constant);

// Direct Weyl-sum ratio against the N^{1+eps}(1/q + 1/N + q/N^k)^{2^{1-k}}
// envelope at alpha_k = a/q, lower coordinates dyadic-random.
std::string weyl_ratio_table_csv(const std::vector<std::int64_t>& Ns, int k,
                                 double eps_exp, int trials, std::uint64_t seed);

// Minor-frequency empirical constants per (k, M) at the given eta.
std::string minor_sweep_csv(const std::vector<int>& ks,
                            const std::vector<std::int64_t>& Ms,
                            const BigRat& eta, std::int64_t trials,
                            std::uint64_t seed);

// Major-box empirical constants per q = 1..q_max at the given (k, M, eta).
std::string major_sweep_csv(int k, std::int64_t M, const BigRat& eta,
                            std::int64_t q_max);

// Oscillatory-integral decay ratios over a seeded coefficient sweep.
std::string vint_table_csv(int k, std::int64_t N, int trials, std::uint64_t seed,
                           double vdc_constant);

// ---------------------------------------------------------------------------
// Extremal table: N_prime,exact_max,greedy,density_bound for N' = 1..N_max.
// The density bound column is the asymptotic ceiling (nan below N' = 16,
// where the double logarithm is not positive); it is a reference curve, not
// a dominating bound at these scales.
std::string extremal_table_csv(std::int64_t N_max, const PolynomialFamily& P,
                               double bound_C = 1.0);

}  // namespace dsl::experiment

#endif  // DIFFSETLAB_EXPERIMENT_HPP
