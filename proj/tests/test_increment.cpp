#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "diffsetlab/core.hpp"
#include "diffsetlab/diffset.hpp"
#include "diffsetlab/increment.hpp"

using namespace dsl;

namespace {

PointSet random_subset(const Box& box, double p, std::mt19937_64& rng) {
  PointSet full = PointSet::full(box);
  std::vector<std::int64_t> flat;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::int64_t i = 0; i < full.size(); ++i)
    if (u(rng) < p)
      flat.insert(flat.end(), full.point(i), full.point(i) + box.k());
  if (flat.empty()) flat.assign(full.point(0), full.point(0) + box.k());
  return PointSet(box, std::move(flat));
}

// B = grid points plus a sprinkle of background noise away from the grid.
PointSet planted_grid_set(const Box& box, const GridSpec& g, double noise,
                          std::mt19937_64& rng) {
  std::vector<std::int64_t> flat = g.enumerate();
  std::set<std::vector<std::int64_t>> seen;
  int k = box.k();
  for (std::size_t i = 0; i < flat.size(); i += static_cast<std::size_t>(k))
    seen.insert(std::vector<std::int64_t>(flat.begin() + static_cast<std::ptrdiff_t>(i),
                                          flat.begin() + static_cast<std::ptrdiff_t>(i + static_cast<std::size_t>(k))));
  PointSet full = PointSet::full(box);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::int64_t i = 0; i < full.size(); ++i) {
    std::vector<std::int64_t> p(full.point(i), full.point(i) + k);
    if (u(rng) < noise && !seen.count(p))
      flat.insert(flat.end(), p.begin(), p.end());
  }
  return PointSet(box, std::move(flat));
}

}  // namespace

TEST_CASE("find_increment_grid recovers a planted dense grid") {
  std::mt19937_64 rng(401);
  Box box = Box::aniso(2, 16);
  // Planted grid: q = 2, L = 4, base (0, 0): points (2l1, 4l2), l1 <= 4,
  // l2 <= 16. Noise keeps ambient density low so the grid clears the bar.
  GridSpec g{2, {0, 0}, 2, 4, +1};
  PointSet B = planted_grid_set(box, g, 0.02, rng);
  BigRat delta = B.density();

  LabConstants consts = LabConstants::defaults(2);
  consts.eta_override = BigRat(1, 2);   // q_max = 4
  consts.sigma_override = BigRat(1, 2);

  // Target length: ceil(eta^2 sigma M) = ceil(16/8) = 2, so q = 1 scans
  // L = 2 and q = 2 scans L = 1 first; small grids are easy to clear by a
  // full-density pocket, so assert only the contract: returned grid is
  // inside the box, density is exact, and it beats the bar.
  auto hit = increment::find_increment_grid(B, BigRat(1, 2), consts);
  REQUIRE(hit.has_value());
  CHECK(hit->grid.within(box));
  CHECK(hit->density > hit->required);
  CHECK(hit->required == delta * (BigRat(1) + BigRat(1, 2)));

  // Exact recount of |B intersect grid|.
  std::vector<std::int64_t> pts = hit->grid.enumerate();
  std::int64_t on = 0;
  for (std::size_t i = 0; i < pts.size(); i += 2) {
    std::int64_t p[2] = {pts[i], pts[i + 1]};
    if (B.contains(p)) ++on;
  }
  CHECK(hit->count == BigInt(on));
  CHECK(hit->density == BigRat(BigInt(on)) / BigRat(hit->grid.cardinality()));
}

TEST_CASE("find_increment_grid returns nothing for flat sets") {
  // The full box has density 1 everywhere; no grid can be denser than
  // delta (1 + sigma) = 1 + sigma > 1.
  Box box = Box::aniso(2, 8);
  PointSet full = PointSet::full(box);
  LabConstants consts = LabConstants::defaults(2);
  consts.eta_override = BigRat(1, 2);
  consts.sigma_override = BigRat(1, 2);
  CHECK(!increment::find_increment_grid(full, BigRat(1, 2), consts).has_value());
}

TEST_CASE("spectral mass on modulus boxes: totals and normalization") {
  std::mt19937_64 rng(409);
  Box box = Box::aniso(2, 8);
  PointSet B = random_subset(box, 0.3, rng);
  LabConstants consts = LabConstants::defaults(2);
  consts.eta_override = BigRat(1, 2);

  auto rep = increment::l2_mass_on_major_boxes(B, 8, consts);
  // q list is capped at floor(eta^-k) = 4.
  CHECK(rep.rows.size() == 4);
  BigRat delta = B.density();
  double dd = rat_to_double(delta);
  // Parseval: total normalized mass is (1 - delta) / delta.
  CHECK(rep.total == doctest::Approx((1.0 - dd) / dd).epsilon(1e-9));
  double best = 0.0;
  std::int64_t best_q = 0;
  for (const auto& row : rep.rows) {
    CHECK(row.mass >= 0.0);
    CHECK(row.mass <= rep.total * (1.0 + 1e-12));
    CHECK(row.lattice_points > 0);
    if (row.mass > best) {
      best = row.mass;
      best_q = row.q;
    }
  }
  CHECK(rep.best_q == best_q);
  CHECK(rep.best_mass == doctest::Approx(best).epsilon(1e-15));
}

TEST_CASE("grid convolution bound reports exact interior sums") {
  std::mt19937_64 rng(419);
  Box box = Box::aniso(2, 12);
  PointSet B = random_subset(box, 0.4, rng);
  GridSpec g{2, {0, 0}, 1, 2, +1};

  LabConstants consts = LabConstants::defaults(2);
  consts.eta_override = BigRat(1, 2);
  auto rep = increment::grid_convolution_bound(B, g, BigRat(1, 2), consts);

  CHECK(rep.interior_cells > 0);
  CHECK(rep.edge_cells >= 0);
  CHECK(rep.edge_bound == BigRat(8 * 2) * BigRat(1, 4) * BigRat(1, 2) * BigRat(12 * 144));
  CHECK(rep.edge_ok == (BigRat(rep.edge_cells) <= rep.edge_bound));
  CHECK(rep.sum_sq >= 0);
  CHECK(rep.sum_sq_ok == (rep.sum_sq <= rep.sum_sq_bound));
  CHECK(rep.rail_violations >= 0);

  // Independent recomputation of the interior sum of squares: the interior
  // translates are the m with m + grid offsets inside the box on every axis.
  BigRat delta = B.density();
  std::int64_t count_interior = 0;
  BigRat sum_sq(0);
  for (std::int64_t m1 = 1 - g.offset_lo(0); m1 + g.offset_hi(0) <= 12; ++m1)
    for (std::int64_t m2 = 1 - g.offset_lo(1); m2 + g.offset_hi(1) <= 144; ++m2) {
      ++count_interior;
      std::vector<std::int64_t> pts = g.enumerate();
      BigRat acc(0);
      for (std::size_t i = 0; i < pts.size(); i += 2) {
        std::int64_t p[2] = {pts[i] + m1, pts[i + 1] + m2};
        BigRat fv = B.contains(p) ? BigRat(1) - delta : -delta;
        acc += fv;
      }
      sum_sq += acc * acc;
    }
  CHECK(rep.interior_cells == BigInt(count_interior));
  CHECK(rep.sum_sq == sum_sq);
}

TEST_CASE("grid transform lower bound holds at the calibrated scales") {
  // sigma sits at the stand-in precondition equality 113/2840 (k = 2 leaves
  // it independent of eta). At M = 64, eta = 2/3 admits moduli {1, 2}; the
  // length target ceil(eta^2 sigma M) = 2 fixes L = ceil(target / q).
  BigRat sigma(113, 2840);
  for (auto [q, L] : {std::pair<std::int64_t, std::int64_t>{1, 2}, {2, 1}}) {
    GridSpec g{2, {0, 0}, q, L, +1};
    auto rep = increment::grid_transform_lower_bound(g, BigRat(2, 3), sigma, 64);
    CHECK(rep.samples > 0);
    CHECK(rep.min_ratio >= 0.5 * (1.0 - 1e-9));
    CHECK(rep.drift_sum > 0);
  }
  // At M = 128, eta = 5/9 stretches the admissible moduli to {1, 2, 3}.
  for (auto [q, L] :
       {std::pair<std::int64_t, std::int64_t>{1, 2}, {2, 1}, {3, 1}}) {
    GridSpec g{2, {0, 0}, q, L, +1};
    auto rep = increment::grid_transform_lower_bound(g, BigRat(5, 9), sigma, 128);
    CHECK(rep.samples > 0);
    CHECK(rep.min_ratio >= 0.5 * (1.0 - 1e-9));
    CHECK(rep.drift_sum * 1420 <= BigRat(113));
  }

  // Preconditions reject out-of-tune grids: q beyond floor(eta^-2), and a
  // side length far above the target.
  CHECK_THROWS_AS((void)increment::grid_transform_lower_bound(
                      GridSpec{2, {0, 0}, 3, 1, +1}, BigRat(2, 3), sigma, 64),
                  Error);
  CHECK_THROWS_AS((void)increment::grid_transform_lower_bound(
                      GridSpec{2, {0, 0}, 1, 8, +1}, BigRat(2, 3), sigma, 64),
                  Error);
}

TEST_CASE("rescale to subproblem pulls back grid points exactly") {
  std::mt19937_64 rng(431);
  Box box = Box::aniso(2, 16);
  GridSpec g{2, {1, 2}, 2, 4, +1};
  REQUIRE(g.within(box));
  PointSet B = random_subset(box, 0.5, rng);

  auto sub = increment::rescale_to_subproblem(B, g);
  CHECK(sub.M_next == 4);
  CHECK(sub.next.box().k() == 2);

  // Forward check: index point (l1, l2) in next iff grid image in B.
  std::int64_t hits = 0;
  for (std::int64_t l1 = 1; l1 <= 4; ++l1)
    for (std::int64_t l2 = 1; l2 <= 16; ++l2) {
      std::int64_t img[2] = {1 + 2 * l1, 2 + 4 * l2};
      std::int64_t idx[2] = {l1, l2};
      bool in_b = B.contains(img);
      bool in_next = sub.next.contains(idx);
      CHECK(in_b == in_next);
      if (in_next) ++hits;
    }
  CHECK(sub.next.size() == hits);
}

TEST_CASE("partition reduce: density guarantee and difference preservation") {
  // Points spread over a wide signed cube; the tiling must produce an
  // anisotropic subproblem whose density clears the guarantee.
  std::mt19937_64 rng(433);
  Box wide = Box::signed_cube(2, 40);
  std::vector<std::int64_t> flat;
  std::uniform_int_distribution<std::int64_t> ux(-40, 40);
  for (int i = 0; i < 120; ++i) {
    flat.push_back(ux(rng));
    flat.push_back(ux(rng));
  }
  PointSet B(wide, std::move(flat));
  std::int64_t N = 81 * 81;  // ambient count scale: M = floor(N^(1/2)) = 81

  auto part = increment::partition_reduce(B, N);
  CHECK(part.M == 81);
  CHECK(part.reduced.box().k() == 2);
  CHECK(part.reduced.size() > 0);
  CHECK(part.reduced.density() >= part.guaranteed_density);

  // The reduction is a translation of one tile: differences of reduced
  // points must appear as differences of original points.
  std::set<std::pair<std::int64_t, std::int64_t>> orig_diffs;
  for (std::int64_t i = 0; i < B.size(); ++i)
    for (std::int64_t j = 0; j < B.size(); ++j)
      orig_diffs.insert({B.point(i)[0] - B.point(j)[0], B.point(i)[1] - B.point(j)[1]});
  for (std::int64_t i = 0; i < part.reduced.size(); ++i)
    for (std::int64_t j = 0; j < part.reduced.size(); ++j) {
      std::pair<std::int64_t, std::int64_t> d = {
          part.reduced.point(i)[0] - part.reduced.point(j)[0],
          part.reduced.point(i)[1] - part.reduced.point(j)[1]};
      CHECK(orig_diffs.count(d) == 1);
    }
}

TEST_CASE("dichotomy: full box is random-like, lone point is undecided") {
  LabConstants consts = LabConstants::defaults(2);
  Box box = Box::aniso(2, 8);
  PointSet full = PointSet::full(box);
  auto r = increment::dichotomy(full, consts);
  CHECK(r.kind == increment::DichotomyKind::random_like);
  CHECK(r.count > 0);
  CHECK(BigRat(r.count) >= r.threshold);

  // Frozen walkthrough example: the 5-point set over Q_4.
  Box box4 = Box::aniso(2, 4);
  PointSet b(box4, {1, 1, 2, 1, 2, 3, 3, 2, 4, 4});
  auto rb = increment::dichotomy(b, consts);
  CHECK(rb.kind == increment::DichotomyKind::random_like);
  CHECK(rb.count == 1);
  CHECK(rb.threshold == BigRat(5, 256));
}

TEST_CASE("dichotomy finds structure in a planted set") {
  // Planted q = 2 grid in Q_16 with thin background noise, calibrated so
  // the pre-scan and the pair count both miss: the structured branch fires.
  std::mt19937_64 rng(439);
  Box box = Box::aniso(2, 16);
  GridSpec g{2, {0, 0}, 2, 4, +1};
  PointSet B = planted_grid_set(box, g, 0.01, rng);

  LabConstants consts = LabConstants::defaults(2);
  consts.eps = BigRat(1, 128);  // keeps the q = 1 pre-scan window empty
  consts.eta_override = BigRat(1, 2);
  consts.sigma_override = BigRat(1, 2);

  auto r = increment::dichotomy(B, consts);
  if (r.kind == increment::DichotomyKind::structured) {
    REQUIRE(r.increment.has_value());
    CHECK(r.increment->density > r.increment->required);
    CHECK(r.increment->grid.within(box));
  } else {
    // The pair count threshold scales with eps; with the tiny window the
    // planted set's own differences can still clear it. Either way the
    // outcome must be decisive at these densities.
    CHECK(r.kind != increment::DichotomyKind::undecided);
  }
}

TEST_CASE("iterate stops at the size floor and reports steps") {
  LabConstants consts = LabConstants::defaults(2);
  Box box4 = Box::aniso(2, 4);
  PointSet b(box4, {1, 1, 2, 1, 2, 3, 3, 2, 4, 4});
  auto res = increment::iterate(b, consts);
  // delta = 5/64, delta^-1 = 12.8 > M = 4: the floor check fires first.
  CHECK(res.reason == increment::StopReason::size_floor);
  CHECK(res.steps.empty());
  CHECK(res.final_M == 4);
  CHECK(res.final_delta == BigRat(5, 64));

  // A dense random-like set at larger M takes at least one step and stops
  // with a witness.
  Box box = Box::aniso(2, 16);
  PointSet full = PointSet::full(box);
  auto res2 = increment::iterate(full, consts);
  CHECK(res2.reason == increment::StopReason::witness_found);
  REQUIRE(!res2.steps.empty());
  CHECK(res2.steps[0].outcome == increment::DichotomyKind::random_like);
  REQUIRE(res2.steps[0].witness_d.has_value());
  CHECK(*res2.steps[0].witness_d >= 1);
}

TEST_CASE("bound calculator matches the closed form at scale") {
  auto rep = increment::bound_calculator(1000000, 2);
  CHECK(rep.closed_form ==
        doctest::Approx(std::log(std::log(1e6)) / std::log(1e6)).epsilon(1e-12));
  CHECK(rep.ratio == doctest::Approx(0.7446385108265484).epsilon(1e-9));
  CHECK(rep.delta_star == doctest::Approx(rep.closed_form * rep.ratio).epsilon(1e-12));
  // The bisection solves log M = C delta^-(k-1) log(1/delta) at equality.
  double d = rep.delta_star;
  CHECK(std::log(1e6) == doctest::Approx((1.0 / d) * std::log(1.0 / d)).epsilon(1e-6));
  // Ratio stays within the sanity window across k.
  for (int k : {2, 3, 4}) {
    auto r = increment::bound_calculator(100000, k);
    CHECK(r.ratio > 0.25);
    CHECK(r.ratio < 4.0);
  }
}
