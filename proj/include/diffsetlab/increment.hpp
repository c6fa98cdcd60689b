#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diffsetlab/core.hpp"

namespace dsl::increment {

// A grid on which B is denser than its ambient density demands.
struct IncrementGrid {
  GridSpec grid;
  BigInt count;    // |B intersect grid|
  BigRat density;  // count / |grid|
  BigRat required; // the bar the density cleared (exclusive)
  bool meets_length_target = false;  // L >= c * delta^{k+2} * sigma * M
};

// Scan moduli q = 1, 2, ..., floor(eta^-k) in increasing order; for each,
// use side length L = ceil(ceil(eta^2 sigma M) / q) and look for a grid
// base (sign +1 first, then -1, bases in lexicographic order) whose grid
// lies inside the box and carries density strictly above delta * (1 + sigma).
// All density comparisons are exact rational arithmetic. Returns the first
// hit, or nullopt when no grid clears the bar.
std::optional<IncrementGrid> find_increment_grid(const PointSet& B, const BigRat& sigma,
                                                 const LabConstants& consts);

// Normalized spectral mass near rational frequencies with denominator q.
struct MajorMassRow {
  std::int64_t q = 0;
  std::int64_t lattice_points = 0;  // embedding-lattice points in the boxes
  double mass = 0.0;                // (1 / (delta |B|)) * sum |f_hat|^2 / prod(T)
};

struct MajorMassReport {
  std::vector<MajorMassRow> rows;  // q = 1 .. q_cap
  double total = 0.0;              // all-frequency mass; equals (1 - delta) / delta
  std::int64_t best_q = 0;
  double best_mass = 0.0;
};

// Table of the balance function's spectral mass on the modulus-q frequency
// boxes (coprime centers, half-width eta^-k / M^j), for q = 1..q_max capped
// at floor(eta^-k). Box membership of lattice frequencies is decided by
// exact rational comparison.
MajorMassReport l2_mass_on_major_boxes(const PointSet& B, std::int64_t q_max,
                                       const LabConstants& consts);

// Checks on the convolution f_B * 1_grid, computed exactly in the scaled
// integers f_B * |Q|. Interior translates are those m with m - grid inside
// the box; edge translates are the rest of the convolution's support.
struct ConvolutionReport {
  BigInt interior_cells;
  BigInt edge_cells;
  BigRat edge_bound;  // 8 k eta^2 sigma |Q|
  bool edge_ok = false;
  BigRat sum_sq;        // sum over interior translates of (f_B * 1_grid)^2
  BigRat sum_sq_bound;  // 3 sigma delta |B| |grid|^2
  bool sum_sq_ok = false;
  std::int64_t rail_violations = 0;  // interior cells above sigma*delta*|grid|;
                                     // each one is a density-increment witness
};

ConvolutionReport grid_convolution_bound(const PointSet& B, const GridSpec& grid,
                                         const BigRat& sigma, const LabConstants& consts);

// Lower bound on the grid's Fourier transform over the modulus-q frequency
// boxes: |1_grid_hat(alpha)| >= |grid| / 2 for every lattice alpha in the
// boxes, provided the grid's phase drift sum is small enough. Preconditions
// (checked exactly, with 355/113 standing in for pi): q*L <= 2*ceil(eta^2
// sigma M), sigma <= eta^{k-2}/(8 pi), and 2 pi * drift_sum <= 1/2 where
// drift_sum = sum_j (Lq)^j eta^-k M^-j.
struct GridTransformReport {
  std::int64_t samples = 0;
  double min_ratio = 0.0;  // min |1_grid_hat(alpha)| / |grid| over the samples
  BigRat drift_sum;
};

GridTransformReport grid_transform_lower_bound(const GridSpec& grid, const BigRat& eta,
                                               const BigRat& sigma, std::int64_t M,
                                               std::int64_t max_samples = 512);

// Restriction of B to a grid, renormalized as a dense subproblem: the grid's
// index box [1,L] x [1,L^2] x ... x [1,L^k] becomes the new ambient box, and
// a point survives exactly when its grid image lies in B.
struct Subproblem {
  PointSet next;
  std::int64_t M_next = 0;
};

Subproblem rescale_to_subproblem(const PointSet& B, const GridSpec& grid);

// Densest-tile reduction: tile the bounding box of B by translates of the
// anisotropic box with scale M = floor(N^{1/k}), pick the fullest tile
// (lexicographically least on ties), and recenter it. The guaranteed density
// is |B| / (|Q_M| * prod_j ceil(extent_j / M^j)); differences are preserved
// by the recentering translation.
struct PartitionResult {
  PointSet reduced;
  std::int64_t M = 0;
  std::vector<std::int64_t> tile;  // chosen tile index per axis, 0-based
  BigRat guaranteed_density;
};

PartitionResult partition_reduce(const PointSet& B, std::int64_t N);

// One run of the density dichotomy on B.
enum class DichotomyKind { random_like, structured, undecided };

struct DichotomyResult {
  DichotomyKind kind = DichotomyKind::undecided;
  // random_like: the pair count and the bar it cleared
  BigInt count;
  BigRat threshold;
  // structured: the increment grid (long q=1 grids at bar delta*(1+1/4) are
  // tried first, then the full modulus scan at bar delta*(1+sigma))
  std::optional<IncrementGrid> increment;
  // undecided: spectral-mass table for the contradiction report
  std::optional<MajorMassReport> diagnostics;
};

DichotomyResult dichotomy(const PointSet& B, const LabConstants& consts);

// Density-increment iteration driven by the dichotomy.
enum class StopReason { witness_found, size_floor, step_limit, undecided };

struct IterationStep {
  int step = 0;
  std::int64_t M = 0;
  BigInt size;
  BigRat delta;
  DichotomyKind outcome = DichotomyKind::undecided;
  // random_like
  BigInt count;
  BigRat threshold;
  std::optional<std::int64_t> witness_d;
  // structured
  std::optional<GridSpec> grid;
  BigRat density_next;
  bool m_ratio_ok = false;      // M_next >= c * delta^{2k+1} * M
  bool delta_ratio_ok = false;  // delta_next >= delta + c * delta^k
};

struct IterationResult {
  StopReason reason = StopReason::undecided;
  std::vector<IterationStep> steps;
  std::int64_t final_M = 0;
  BigRat final_delta;
};

// Repeat: if M <= delta^-C stop (size_floor); otherwise run the dichotomy.
// Random-like stops with a difference witness; structured rescales to the
// grid subproblem and continues; undecided stops with diagnostics attached
// to the last step.
IterationResult iterate(const PointSet& B, const LabConstants& consts, int max_steps = 64);

// Largest delta compatible with log M <= C * delta^-(k-1) * log(1/delta),
// found by bisection (the left side is strictly decreasing in delta), next
// to the closed form (log log M / log M)^{1/(k-1)}.
struct BoundReport {
  double delta_star = 0.0;
  double closed_form = 0.0;
  double ratio = 0.0;  // delta_star / closed_form
};

BoundReport bound_calculator(std::int64_t M, int k, double C = 1.0);

}  // namespace dsl::increment
