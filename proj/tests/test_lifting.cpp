#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "diffsetlab/core.hpp"
#include "diffsetlab/diffset.hpp"
#include "diffsetlab/lifting.hpp"

using namespace dsl;

TEST_CASE("rank decomposition of coefficient matrices") {
  // Monomials d, d^2: full rank, nothing dependent.
  auto mono = lifting::decompose(PolynomialFamily::monomials(2));
  CHECK(mono.r == 2);
  CHECK(mono.row_selection == std::vector<int>{0, 1});
  CHECK(mono.dependent_rows.empty());
  CHECK(mono.dependency.empty());

  // {d^2, 2d^2}: rank one, second row = 2 * first.
  auto dbl = lifting::decompose(PolynomialFamily(2, 2, {0, 1, 0, 2}));
  CHECK(dbl.r == 1);
  CHECK(dbl.row_selection == std::vector<int>{0});
  CHECK(dbl.dependent_rows == std::vector<int>{1});
  REQUIRE(dbl.dependency.size() == 1);
  CHECK(dbl.dependency[0] == std::vector<BigRat>{BigRat(2)});

  // {d, d^2, d + d^2}: third row is the sum of the first two.
  auto sum = lifting::decompose(PolynomialFamily(3, 2, {1, 0, 0, 1, 1, 1}));
  CHECK(sum.r == 2);
  CHECK(sum.row_selection == std::vector<int>{0, 1});
  CHECK(sum.dependent_rows == std::vector<int>{2});
  REQUIRE(sum.dependency.size() == 1);
  CHECK(sum.dependency[0] == std::vector<BigRat>({BigRat(1), BigRat(1)}));

  // Fractional dependency: {2d, 3d} over one column.
  auto frac = lifting::decompose(PolynomialFamily(2, 1, {2, 3}));
  CHECK(frac.r == 1);
  CHECK(frac.dependency[0] == std::vector<BigRat>{BigRat(3, 2)});

  // row_value is the plain integer functional.
  std::vector<std::int64_t> b = {5, -3};
  CHECK(sum.row_value(0, b) == 5);
  CHECK(sum.row_value(1, b) == -3);
  CHECK(sum.row_value(2, b) == 2);
}

TEST_CASE("reconstruction property on random families") {
  std::mt19937_64 rng(501);
  for (int trial = 0; trial < 30; ++trial) {
    int k = 1 + static_cast<int>(rng() % 3);
    int ell = 1 + static_cast<int>(rng() % 4);
    std::vector<std::int64_t> coeffs(static_cast<std::size_t>(ell * k));
    for (auto& c : coeffs) c = static_cast<std::int64_t>(rng() % 7) - 3;
    // Rows must be nonzero.
    bool ok = true;
    for (int i = 0; i < ell; ++i) {
      bool nz = false;
      for (int j = 0; j < k; ++j) nz = nz || coeffs[static_cast<std::size_t>(i * k + j)] != 0;
      ok = ok && nz;
    }
    if (!ok) continue;
    PolynomialFamily P(ell, k, coeffs);
    auto d = lifting::decompose(P);
    CHECK(d.r >= 1);
    CHECK(d.r <= std::min(ell, k));
    CHECK(d.row_selection.size() + d.dependent_rows.size() ==
          static_cast<std::size_t>(ell));
    // Every dependent row reconstructs exactly from the selected rows.
    for (std::size_t i = 0; i < d.dependent_rows.size(); ++i) {
      int row = d.dependent_rows[i];
      for (int j = 0; j < k; ++j) {
        BigRat acc(0);
        for (int t = 0; t < d.r; ++t)
          acc += d.dependency[i][static_cast<std::size_t>(t)] *
                 BigRat(P.coeff(d.row_selection[static_cast<std::size_t>(t)], j));
        CHECK(acc == BigRat(P.coeff(row, j)));
      }
    }
  }
}

TEST_CASE("shift search satisfies the exact pigeonhole identity") {
  std::vector<std::int64_t> A = {1, 2, 5, 7};
  auto decomp = lifting::decompose(PolynomialFamily::monomials(2));
  std::int64_t N_prime = 8;  // must dominate max(A)
  auto res = lifting::shift_search(A, decomp, N_prime);
  CHECK(res.s.size() == 2);

  // Each (cube point, value tuple in A^r) pair scores at exactly one shift,
  // so the counts over the scan box total |A|^r (2N'+1)^k.
  BigInt cube = pow_big(BigInt(2 * N_prime + 1), 2);
  CHECK(res.scan_total == BigInt(16) * cube);

  // The winner meets the average |A|^r (2N'+1)^k / scan_volume.
  BigInt scan_vol = 1;
  for (auto [lo, hi] : res.scan_range) scan_vol *= BigInt(hi - lo + 1);
  CHECK(BigRat(res.count) >= BigRat(res.scan_total) / BigRat(scan_vol));
  CHECK(res.count >= 1);

  // Recount the winning shift directly.
  std::set<std::int64_t> inA(A.begin(), A.end());
  std::int64_t direct = 0;
  for (std::int64_t b1 = -N_prime; b1 <= N_prime; ++b1)
    for (std::int64_t b2 = -N_prime; b2 <= N_prime; ++b2) {
      std::vector<std::int64_t> b = {b1, b2};
      bool all = true;
      for (int t = 0; t < decomp.r; ++t)
        all = all && inA.count(res.s[static_cast<std::size_t>(t)] +
                               decomp.row_value(decomp.row_selection[static_cast<std::size_t>(t)], b));
      if (all) ++direct;
    }
  CHECK(res.count == BigInt(direct));
}

TEST_CASE("full lift: frozen example and the membership certificate") {
  std::vector<std::int64_t> A = {1, 2, 5, 7};
  auto lift = lifting::build_lifted_set(A, PolynomialFamily::monomials(2));
  CHECK(lift.N_prime == 14);
  CHECK(lift.m == std::vector<std::int64_t>({-7, -7}));
  CHECK(lift.B.size() == 16);
  CHECK(lift.stage_count == 16);
  CHECK(lift.decomp.r == 2);

  // Certificate: every point's shifted row values land in A.
  std::set<std::int64_t> inA(A.begin(), A.end());
  for (std::int64_t i = 0; i < lift.B.size(); ++i) {
    std::vector<std::int64_t> b(lift.B.point(i), lift.B.point(i) + 2);
    for (int row = 0; row < 2; ++row)
      CHECK(inA.count(lift.m[static_cast<std::size_t>(row)] +
                      lift.decomp.row_value(row, b)) == 1);
  }

  // Configuration transfer, both directions, on small instances.
  PolynomialFamily sq(1, 2, {0, 1});
  for (std::vector<std::int64_t> S :
       {std::vector<std::int64_t>{1, 2, 5, 7}, {1, 3, 6, 8}, {2, 4, 7},
        {1, 5, 9}, {3}}) {
    auto lf = lifting::build_lifted_set(S, sq);
    bool has_cfg = diffset::has_polynomial_configuration(S, sq).has_value();
    bool has_diff = diffset::has_monomial_difference(lf.B).has_value();
    CHECK(has_cfg == has_diff);
  }

  // A dependent-row family exercises the stage-two scan: {d^2, 2d^2}.
  PolynomialFamily dep(2, 2, {0, 1, 0, 2});
  auto lift2 = lifting::build_lifted_set({1, 3, 6, 8}, dep);
  CHECK(lift2.decomp.r == 1);
  std::set<std::int64_t> inS = {1, 3, 6, 8};
  for (std::int64_t i = 0; i < lift2.B.size(); ++i) {
    std::vector<std::int64_t> b(lift2.B.point(i), lift2.B.point(i) + 2);
    for (int row = 0; row < 2; ++row)
      CHECK(inS.count(lift2.m[static_cast<std::size_t>(row)] +
                      lift2.decomp.row_value(row, b)) == 1);
  }
  // Identity: the dependent-shift scan counts |A|^(ell - r) |B'| in total.
  CHECK(lift2.dependent_scan_total == BigInt(4) * lift2.stage_count);

  CHECK_THROWS_AS((void)lifting::build_lifted_set({}, sq), Error);
}

TEST_CASE("sumset reduction: frozen examples") {
  auto one = lifting::sumset_reduce({1}, {1});
  CHECK(one.m == 2);
  CHECK(one.D == std::vector<std::int64_t>{1});
  CHECK(one.lower_bound == BigRat(1));
  CHECK(one.pair_total == 1);

  std::vector<std::int64_t> tenA, tenB;
  for (std::int64_t i = 1; i <= 10; ++i) {
    tenA.push_back(i);
    tenB.push_back(i);
  }
  auto ten = lifting::sumset_reduce(tenA, tenB);
  CHECK(ten.m == 11);
  CHECK(ten.D.size() == 10);
  CHECK(ten.lower_bound == BigRat(100, 19));

  auto mix = lifting::sumset_reduce({1, 4, 6}, {2, 3, 5});
  CHECK(mix.m == 6);
  CHECK(mix.D == std::vector<std::int64_t>({2, 5}));
  CHECK(mix.lower_bound == BigRat(9, 11));
  CHECK(mix.pair_total == 9);
}

TEST_CASE("sumset reduction: pigeonhole and difference containment") {
  std::mt19937_64 rng(521);
  for (int trial = 0; trial < 40; ++trial) {
    std::int64_t N = 12;
    std::vector<std::int64_t> A, Bset;
    for (std::int64_t x = 1; x <= N; ++x) {
      if (rng() % 3 == 0) A.push_back(x);
      if (rng() % 3 == 0) Bset.push_back(x);
    }
    if (A.empty()) A.push_back(1 + static_cast<std::int64_t>(rng() % N));
    if (Bset.empty()) Bset.push_back(1 + static_cast<std::int64_t>(rng() % N));

    auto red = lifting::sumset_reduce(A, Bset, N);
    CHECK(red.m >= 2);
    CHECK(red.m <= 2 * N);
    CHECK(red.pair_total == BigInt(static_cast<std::int64_t>(A.size()) *
                                   static_cast<std::int64_t>(Bset.size())));
    CHECK(red.lower_bound ==
          BigRat(BigInt(red.pair_total), BigInt(2 * N - 1)));
    CHECK(BigRat(BigInt(static_cast<std::int64_t>(red.D.size()))) >= red.lower_bound);

    // D = Bset cap (m - A): membership and the difference containment
    // D - D inside A + Bset - m.
    std::set<std::int64_t> inA(A.begin(), A.end());
    std::set<std::int64_t> inB(Bset.begin(), Bset.end());
    std::set<std::int64_t> sum_shift;
    for (std::int64_t a : A)
      for (std::int64_t b : Bset) sum_shift.insert(a + b - red.m);
    for (std::int64_t d : red.D) {
      CHECK(inB.count(d) == 1);
      CHECK(inA.count(red.m - d) == 1);
    }
    for (std::int64_t d1 : red.D)
      for (std::int64_t d2 : red.D) CHECK(sum_shift.count(d1 - d2) == 1);
  }
}
