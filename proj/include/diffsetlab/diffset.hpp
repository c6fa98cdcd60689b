#ifndef DIFFSETLAB_DIFFSET_HPP
#define DIFFSETLAB_DIFFSET_HPP

// Exact configuration counting in difference sets: does A - A contain the
// value tuple {P_1(d), ..., P_ell(d)} for some d != 0, how many monomial curve
// points (d, d^2, ..., d^k) land in B - B, and how large can a set be while
// avoiding every such configuration. Counting has two independent backends
// (bit-parallel direct scan, and DFT convolution via module fourier) that are
// required to agree exactly.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "diffsetlab/core.hpp"
#include "diffsetlab/fourier.hpp"

namespace dsl::diffset {

// ---------------------------------------------------------------------------
// Witnesses. d is the least viable |d| (positive sign preferred on ties);
// pairs[i] = (a, a') in A x A with a - a' = P_i(d).

struct ConfigWitness {
  std::int64_t d = 0;
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
};

// Scans d = 1, -1, 2, -2, ... up to d_max (default: derived from coefficient
// growth, the least bound beyond which some |P_i(d)| must exceed N-1, so the
// scan is complete). A must live in [1, N]; N defaults to max(A).
std::optional<ConfigWitness> has_polynomial_configuration(
    const std::vector<std::int64_t>& A, const PolynomialFamily& P,
    std::optional<std::int64_t> d_max = std::nullopt,
    std::optional<std::int64_t> N = std::nullopt);

// ---------------------------------------------------------------------------
// Monomial-difference counting over anisotropic boxes:
// sum over d = 1..floor(eps*M) of |B  intersect  (B + (d, d^2, ..., d^k))|.
// The direct backend runs bit-parallel shifted intersections; the dft backend
// goes through the embedding-group convolution and rounds.

BigInt count_monomial_differences(const PointSet& B, const BigRat& eps);
BigInt count_monomial_differences_dft(const PointSet& B, const BigRat& eps,
                                      std::int64_t max_cells = fourier::kDefaultMaxCells);

// Least d >= 1 (then preferring +d over -d) with (d, d^2, ..., d^k) or its
// alternating-sign image in B - B; works for both box modes. Absent when the
// curve leaves the difference range before any hit.
std::optional<std::int64_t> has_monomial_difference(const PointSet& B);

// Witness pair (b, b - s_d) for a specific signed d, if any.
std::optional<std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>>
find_monomial_difference_at(const PointSet& B, std::int64_t d);

// ---------------------------------------------------------------------------
// Random-branch test: a set whose full-range count (eps = 1) clears the
// threshold (eps/4) delta |B| M behaves like a random set of its density.
// The eps in the threshold comes from consts; the count always uses the full
// window d = 1..M.

struct RandomnessDefect {
  BigInt count;
  BigRat threshold;
  bool is_random = false;
};

RandomnessDefect randomness_defect(const PointSet& B, const LabConstants& consts);

// ---------------------------------------------------------------------------
// Extremal search over [1, N].

// Increasing scan, keeping n unless it completes a configuration.
std::vector<std::int64_t> greedy_free_set(std::int64_t N, const PolynomialFamily& P);

// Greedy monomial-difference-free subset of the anisotropic box [1,L] x ... x
// [1,L^k]: lexicographic scan, skipping any point whose difference with a kept
// point lies on the signed monomial curve. Used to plant structured instances.
PointSet greedy_free_box(int k, std::int64_t L);

struct ExactMaxResult {
  std::int64_t size = 0;
  std::vector<std::int64_t> witness;
  bool exact = true;          // false when the node budget stopped the search
  std::uint64_t nodes = 0;    // branch-and-bound nodes visited
};

// Exact maximum P-configuration-free subset by branch and bound; include-first
// depth-first order makes the reported witness the lexicographically least
// maximum set. On budget exhaustion the result is a certified lower bound.
ExactMaxResult max_free_set_exact(std::int64_t N, const PolynomialFamily& P,
                                  std::uint64_t node_budget = 50'000'000);

// ---------------------------------------------------------------------------
// The density ceiling C * (log log N / log N)^(1 / (ell (k-1))) with ell and k
// read from the family. Needs N >= 16 so log log N > 0, and degree >= 2.

double density_upper_bound(std::int64_t N, const PolynomialFamily& P, double C = 1.0);

}  // namespace dsl::diffset

#endif  // DIFFSETLAB_DIFFSET_HPP
