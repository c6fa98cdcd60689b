#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <vector>

#include "diffsetlab/core.hpp"

using namespace dsl;

TEST_CASE("rational helpers") {
  CHECK(pow_big(BigInt(3), 5) == 243);
  CHECK(pow_big(BigInt(-2), 3) == -8);
  CHECK(pow_i64_checked(2, 62) == (std::int64_t{1} << 62));
  CHECK_THROWS_AS((void)pow_i64_checked(10, 19), Error);
  CHECK(pow_rat(BigRat(2, 3), 3) == BigRat(8, 27));

  CHECK(floor_rat(BigRat(7, 2)) == 3);
  CHECK(floor_rat(BigRat(-7, 2)) == -4);
  CHECK(ceil_rat(BigRat(7, 2)) == 4);
  CHECK(ceil_rat(BigRat(-7, 2)) == -3);
  CHECK(floor_rat(BigRat(6)) == 6);
  CHECK(ceil_rat(BigRat(-6)) == -6);

  CHECK(next_pow2(1) == 1);
  CHECK(next_pow2(5) == 8);
  CHECK(next_pow2(64) == 64);
  CHECK(next_pow2(65) == 128);

  CHECK(to_i64(BigInt(-42)) == -42);
  CHECK_THROWS_AS((void)to_i64(pow_big(BigInt(2), 70)), Error);
  CHECK(rat_to_double(BigRat(1, 4)) == 0.25);
}

TEST_CASE("error codes") {
  try {
    fail(errc::resource_limit, "budget");
  } catch (const Error& e) {
    CHECK(e.code() == errc::resource_limit);
    CHECK(static_cast<int>(e.code()) == 4);
  }
  CHECK(static_cast<int>(errc::invalid_argument) == 2);
  CHECK(static_cast<int>(errc::precondition) == 3);
}

TEST_CASE("anisotropic box geometry") {
  Box b = Box::aniso(3, 4);
  CHECK(b.k() == 3);
  CHECK(b.scale() == 4);
  CHECK(b.lo(0) == 1);
  CHECK(b.hi(0) == 4);
  CHECK(b.hi(1) == 16);
  CHECK(b.hi(2) == 64);
  CHECK(b.volume() == BigInt(4) * 16 * 64);

  std::int64_t inside[3] = {4, 16, 64};
  std::int64_t outside[3] = {4, 17, 64};
  CHECK(b.contains(inside));
  CHECK_FALSE(b.contains(outside));
}

TEST_CASE("signed cube geometry") {
  Box c = Box::signed_cube(2, 3);
  CHECK(c.lo(0) == -3);
  CHECK(c.hi(1) == 3);
  CHECK(c.volume() == 49);
  std::int64_t origin[2] = {0, 0};
  CHECK(c.contains(origin));
}

TEST_CASE("point sets sort, dedup, and bound-check") {
  Box b = Box::aniso(2, 3);
  PointSet ps(b, {3, 9, 1, 1, 3, 9, 2, 4});
  CHECK(ps.size() == 3);  // duplicate collapsed
  CHECK(ps.point(0)[0] == 1);
  CHECK(ps.point(2)[1] == 9);
  CHECK(ps.density() == BigRat(3, 27));
  std::int64_t probe[2] = {2, 4};
  CHECK(ps.contains(probe));
  probe[1] = 5;
  CHECK_FALSE(ps.contains(probe));

  CHECK_THROWS_AS(PointSet(b, {0, 1}), Error);       // outside box
  CHECK_THROWS_AS(PointSet(b, {1, 1, 2}), Error);    // ragged flat array

  PointSet all = PointSet::full(b);
  CHECK(all.size() == 27);
  CHECK(all.density() == 1);
}

TEST_CASE("grid spec enumeration and membership") {
  GridSpec g;
  g.k = 2;
  g.base = {1, 2};
  g.q = 2;
  g.L = 2;
  g.validate();
  CHECK(g.cardinality() == 8);  // L^1 * L^2

  // Offsets are (q*l1, q^2*l2), l_j in [1, L^j].
  CHECK(g.offset_lo(0) == 2);
  CHECK(g.offset_hi(0) == 4);
  CHECK(g.offset_lo(1) == 4);
  CHECK(g.offset_hi(1) == 16);

  std::vector<std::int64_t> pts = g.enumerate();
  CHECK(pts.size() == 16);
  std::int64_t first[2] = {g.base[0] + 2, g.base[1] + 4};
  CHECK(g.within(Box::aniso(2, 5)));
  CHECK_FALSE(g.within(Box::aniso(2, 4)));  // axis 0 tops out at 5
  CHECK(pts[0] == first[0]);
  CHECK(pts[1] == first[1]);

  GridSpec bad = g;
  bad.q = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("polynomial families") {
  PolynomialFamily P(2, 2, {0, 1, 1, 1});  // rows d^2 and d + d^2
  CHECK(P.rows() == 2);
  CHECK(P.degree_columns() == 2);
  CHECK(P.coeff(0, 1) == 1);
  CHECK(P.eval(0, 3) == 9);
  CHECK(P.eval(1, 3) == 12);
  CHECK(P.effective_degree() == 2);

  PolynomialFamily mono = PolynomialFamily::monomials(3);
  CHECK(mono.rows() == 3);
  CHECK(mono.eval(2, 2) == 8);

  CHECK_THROWS_AS(PolynomialFamily(1, 2, {0, 0}), Error);  // zero row
}

TEST_CASE("monomial curve windows") {
  MonomialCurveWindow w{2, 10, BigRat(1, 4)};
  CHECK(w.length() == 2);
  auto p = w.point(2);
  CHECK(p == std::vector<std::int64_t>{2, 4});
}

TEST_CASE("lab constants") {
  LabConstants cst = LabConstants::defaults(3);
  CHECK(cst.k == 3);
  CHECK(cst.eps == BigRat(1, 30));
  CHECK(cst.C == 1);
  cst.validate();

  // eta and sigma track delta unless overridden.
  BigRat delta(1, 8);
  CHECK(cst.eta(delta) == delta / 8);
  CHECK(cst.sigma(delta) == pow_rat(delta, 2));
  cst.eta_override = BigRat(1, 2);
  cst.sigma_override = BigRat(3);
  CHECK(cst.eta(delta) == BigRat(1, 2));
  CHECK(cst.sigma(delta) == 3);

  LabConstants wide = LabConstants::defaults(2);
  wide.eps = BigRat(1, 2);
  CHECK_THROWS_AS(wide.validate(), Error);  // strict cap is 1/(10k)
  wide.validate(true);                      // relaxed allows (0, 1]
}
