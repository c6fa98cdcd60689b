#ifndef DIFFSETLAB_LIFTING_HPP
#define DIFFSETLAB_LIFTING_HPP

// Reduction from polynomial configurations to monomial differences. A family
// P of integer polynomials with zero constant term acts on the signed cube
// [-N',N']^k through its coefficient rows: row i sends b to
// sum_j coeff(i,j) b_j, so a monomial-curve difference b - b' = (d,...,d^k)
// maps to the value vector (P_1(d),...,P_ell(d)). Lifting a set A in [1,N]
// produces B in the cube whose monomial differences certify configurations
// in A - A. The rank structure of the coefficient matrix decides which rows
// are free and which are rational combinations of the free ones.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "diffsetlab/core.hpp"

namespace dsl::lifting {

// ---------------------------------------------------------------------------
// Rank decomposition of the coefficient matrix, exact over the rationals.
// row_selection lists the r independent rows kept (greedy, ascending original
// index, so a leading independent block is selected as-is). dependency has
// one row per non-selected original row, in ascending original-row order:
// row(dep[i]) = sum_t dependency[i][t] * row(row_selection[t]).

struct LiftDecomposition {
  PolynomialFamily P;
  int r = 0;
  std::vector<int> row_selection;
  std::vector<int> dependent_rows;
  std::vector<std::vector<BigRat>> dependency;

  // The row-i linear functional on cube points, exact in int64.
  std::int64_t row_value(int i, const std::vector<std::int64_t>& b) const;
};

LiftDecomposition decompose(const PolynomialFamily& P);

// ---------------------------------------------------------------------------
// Stage one: pick one shift per selected row so that many cube points land
// in the shifted product A^r. The scan covers every shift vector that could
// possibly score, so sum over the scan box of count(s) equals
// |A|^r * (2N'+1)^k exactly (each (point, value-tuple) pair scores once).

struct ShiftSearchResult {
  std::vector<std::int64_t> s;  // per selected row, in selection order
  BigInt count;                 // cube points b with R(b) in A^r - s
  BigInt scan_total;            // sum of counts over the whole scan box
  std::vector<std::pair<std::int64_t, std::int64_t>> scan_range;
};

ShiftSearchResult shift_search(const std::vector<std::int64_t>& A,
                               const LiftDecomposition& decomp,
                               std::int64_t N_prime);

// ---------------------------------------------------------------------------
// Full lift. N' = gamma*N with gamma the least integer making the weakest
// selected row cover a shifted copy of [1,N] with slack (gamma = 2 when some
// selected row has l1-norm 1, else 1). After the stage-one cut B', shifts t
// for the dependent rows are chosen by an exhaustive joint scan; dependent
// row values are recomputed through the rational dependency matrix and must
// reproduce the integer row functional exactly. m holds the final per-row
// shifts in original row order, and every b in B satisfies
// m_i + row_i(b) in A for all i (checked exhaustively before returning).

struct LiftResult {
  PointSet B;                        // signed cube [-N',N']^k
  std::vector<std::int64_t> m;       // per original row
  std::int64_t N_prime = 0;
  LiftDecomposition decomp;
  BigInt stage_count;                // |B'| after the selected-row stage
  BigInt dependent_scan_total;       // sum over t of count(t); |A|^(ell-r)|B'|
};

LiftResult build_lifted_set(const std::vector<std::int64_t>& A,
                            const PolynomialFamily& P,
                            std::optional<std::int64_t> N = std::nullopt);

// ---------------------------------------------------------------------------
// Difference-set transfer for two sets: the best slice D = Bset cap (m - A)
// over m in [2, 2N] satisfies |D| >= |A||Bset|/(2N-1), and D - D lands in
// A + Bset - m. pair_total is sum over m of the slice sizes, |A|*|Bset|.

struct SumsetReduction {
  std::int64_t m = 0;
  std::vector<std::int64_t> D;
  BigRat lower_bound;
  BigInt pair_total;
};

SumsetReduction sumset_reduce(const std::vector<std::int64_t>& A,
                              const std::vector<std::int64_t>& Bset,
                              std::optional<std::int64_t> N = std::nullopt);

}  // namespace dsl::lifting

#endif  // DIFFSETLAB_LIFTING_HPP
