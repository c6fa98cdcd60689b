#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "diffsetlab/core.hpp"
#include "diffsetlab/fourier.hpp"

using namespace dsl;
using fourier::cplx;

namespace {

// Quadratic-time reference transform, written against the definition
// fhat(xi) = sum_m f(m) e^{-2 pi i sum_j m_j xi_j / T_j}.
std::vector<cplx> naive_dft(const fourier::LatticeFn& f) {
  const auto& g = f.group;
  std::int64_t n = g.cells();
  std::vector<cplx> out(static_cast<std::size_t>(n));
  std::vector<std::int64_t> m(static_cast<std::size_t>(g.k));
  std::vector<std::int64_t> xi(static_cast<std::size_t>(g.k));
  const double tau = 6.283185307179586476925286766559;
  for (std::int64_t x = 0; x < n; ++x) {
    g.unflatten(x, xi.data());
    long double re = 0.0L, im = 0.0L;
    for (std::int64_t y = 0; y < n; ++y) {
      if (f.v[static_cast<std::size_t>(y)] == 0.0) continue;
      g.unflatten(y, m.data());
      long double phase = 0.0L;
      for (int j = 0; j < g.k; ++j)
        phase += static_cast<long double>(m[static_cast<std::size_t>(j)]) *
                 static_cast<long double>(xi[static_cast<std::size_t>(j)]) /
                 static_cast<long double>(g.T[static_cast<std::size_t>(j)]);
      phase -= std::floor(phase);
      double v = f.v[static_cast<std::size_t>(y)];
      re += v * std::cos(-tau * static_cast<double>(phase));
      im += v * std::sin(-tau * static_cast<double>(phase));
    }
    out[static_cast<std::size_t>(x)] = cplx(static_cast<double>(re), static_cast<double>(im));
  }
  return out;
}

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

}  // namespace

TEST_CASE("embedding group picks the smallest admissible power of two") {
  auto g = fourier::EmbeddingGroup::for_box(2, 4);
  REQUIRE(g.T.size() == 2);
  CHECK(g.T[0] == 16);  // 2*4+1 = 9 -> 16
  CHECK(g.T[1] == 64);  // 2*16+1 = 33 -> 64
  CHECK(g.cells() == 1024);

  auto g2 = fourier::EmbeddingGroup::for_box(2, 2);
  CHECK(g2.T[0] == 8);
  CHECK(g2.T[1] == 16);

  // With a resolution target the lattice must also resolve eta^-k boxes:
  // eta = 1/8, k = 2 forces T_j >= 64 * M^j.
  auto g3 = fourier::EmbeddingGroup::for_box(2, 4, BigRat(1, 8));
  CHECK(g3.T[0] == 256);
  CHECK(g3.T[1] == 1024);

  // eta = 1 adds nothing beyond the wraparound bound.
  auto g4 = fourier::EmbeddingGroup::for_box(2, 64, BigRat(1));
  CHECK(g4.T[0] == 256);    // 2*64+1 = 129 -> 256
  CHECK(g4.T[1] == 16384);  // 2*4096+1 -> 16384

  CHECK_THROWS_AS(fourier::EmbeddingGroup::for_box(2, 4, BigRat(1, 8), 1000), Error);
  try {
    fourier::EmbeddingGroup::for_box(2, 4, BigRat(1, 8), 1000);
  } catch (const Error& e) {
    CHECK(e.code() == errc::resource_limit);
  }
}

TEST_CASE("flat indexing is cyclic and round-trips") {
  auto g = fourier::EmbeddingGroup::for_box(2, 2);  // T = (8, 16)
  std::int64_t m[2] = {3, 5};
  std::int64_t flat = g.flat_index(m);
  std::int64_t back[2];
  g.unflatten(flat, back);
  CHECK(back[0] == 3);
  CHECK(back[1] == 5);
  std::int64_t neg[2] = {-1, -2};
  std::int64_t wrapped[2];
  g.unflatten(g.flat_index(neg), wrapped);
  CHECK(wrapped[0] == 7);
  CHECK(wrapped[1] == 14);
}

TEST_CASE("fft matches the quadratic reference on random data") {
  std::mt19937_64 rng(101);
  auto g = fourier::EmbeddingGroup::for_box(2, 2);  // 8 x 16 = 128 cells
  fourier::LatticeFn f(g);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& x : f.v) x = u(rng);
  auto got = fourier::dft(f);
  auto want = naive_dft(f);
  REQUIRE(got.v.size() == want.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i)
    worst = std::max(worst, std::abs(got.v[i] - want[i]));
  CHECK(worst <= 1e-10);
}

TEST_CASE("parseval and inverse round-trip") {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 5; ++trial) {
    auto g = fourier::EmbeddingGroup::for_box(2, 3);  // 8 x 32
    fourier::LatticeFn f(g);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (auto& x : f.v) x = u(rng);

    auto s = fourier::dft(f);
    long double lhs = 0.0L, rhs = 0.0L;
    for (double x : f.v) rhs += static_cast<long double>(x) * x;
    for (const cplx& z : s.v) lhs += static_cast<long double>(std::norm(z));
    lhs /= static_cast<long double>(g.cells());
    CHECK(std::abs(static_cast<double>(lhs - rhs)) <=
          1e-9 * std::abs(static_cast<double>(rhs)));
    CHECK(s.lattice_measure() == doctest::Approx(1.0 / static_cast<double>(g.cells())).epsilon(1e-15));

    auto back = fourier::idft(s);
    double worst = 0.0;
    for (std::size_t i = 0; i < f.v.size(); ++i)
      worst = std::max(worst, std::abs(back.v[i] - f.v[i]));
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("balance function is mean-zero with the exact l2 norm") {
  std::mt19937_64 rng(107);
  Box box = Box::aniso(2, 4);
  auto g = fourier::EmbeddingGroup::for_box(2, 4);
  for (int trial = 0; trial < 10; ++trial) {
    PointSet B = random_subset(box, 0.3, rng);
    auto fb = fourier::balance_function(B, g);
    CHECK(fb.sum_scaled() == 0);
    CHECK(fb.sum_exact() == BigRat(0));
    BigRat delta = B.density();
    CHECK(fb.l2_norm_exact() == delta * (BigRat(1) - delta) * BigRat(64));
    CHECK(fb.cells_on == BigInt(B.size()));
    CHECK(fb.cells_off == BigInt(64 - B.size()));

    // The double array agrees with the exact values cellwise.
    double on = static_cast<double>(1.0 - rat_to_double(delta));
    std::int64_t nonzero = 0;
    for (double v : fb.fn.v)
      if (v != 0.0) ++nonzero;
    CHECK(nonzero == 64);  // entire box is support (B and its complement)
    const std::int64_t* b0 = B.point(0);
    CHECK(fb.fn.v[static_cast<std::size_t>(g.flat_index(b0))] == doctest::Approx(on).epsilon(1e-15));
  }

  // Support extends outside the torus half-range: reject.
  auto tiny = fourier::EmbeddingGroup::for_box(2, 2);
  PointSet wide(box, {4, 16});
  CHECK_THROWS_AS(fourier::lattice_indicator(wide, tiny), Error);
}

TEST_CASE("weyl sums at rational anchors") {
  BigRat one(1);
  // alpha = 0: every phase is 1.
  cplx z0 = fourier::weyl_sum(std::vector<double>{0.0, 0.0}, 6, one);
  CHECK(z0.real() == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(z0.imag() == doctest::Approx(0.0).epsilon(1e-14));

  // alpha = (0, 1/2): terms alternate (-1)^d and cancel for even D.
  cplx z1 = fourier::weyl_sum(std::vector<double>{0.0, 0.5}, 4, one);
  CHECK(std::abs(z1) <= 1e-13);

  // Quarter phase on the linear coefficient, k = 1 style window inside k = 2:
  // alpha = (1/4, 0), D = 4: sum of e^{-2 pi i d/4} over d=1..4 is 0.
  cplx z2 = fourier::weyl_sum(std::vector<double>{0.25, 0.0}, 4, one);
  CHECK(std::abs(z2) <= 1e-13);

  // Rational overload agrees with the double overload away from seams.
  std::vector<BigRat> ar = {BigRat(1, 3), BigRat(2, 7)};
  std::vector<double> ad = {rat_to_double(BigRat(1, 3)), rat_to_double(BigRat(2, 7))};
  cplx zr = fourier::weyl_sum(ar, 50, one);
  cplx zd = fourier::weyl_sum(ad, 50, one);
  CHECK(std::abs(zr - zd) <= 1e-9);

  // Conjugate symmetry: negating the frequency conjugates the sum.
  std::vector<double> a = {0.1375, -0.21};
  std::vector<double> na = {-0.1375, 0.21};
  cplx zp = fourier::weyl_sum(a, 100, one);
  cplx zn = fourier::weyl_sum(na, 100, one);
  CHECK(std::abs(zp - std::conj(zn)) <= 1e-12);

  // Truncation: eps = 1/2 keeps D = floor(M/2) terms.
  cplx zh = fourier::weyl_sum(std::vector<double>{0.0, 0.0}, 7, BigRat(1, 2));
  CHECK(zh.real() == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("weighted pair count: the four-term expansion is an identity") {
  // Hand-checked example: B = {(1,1)} inside Q_2, eps = 1, window
  // {(1,1), (2,4)}. Only m - n = (1,1) has solutions (3 of them), giving
  // -7/64 + 1/64 + 1/64 = -5/64.
  Box box = Box::aniso(2, 2);
  PointSet B(box, {1, 1});
  auto ci = fourier::weighted_count_identity(B, BigRat(1));
  CHECK(ci.direct == BigRat(-5, 64));
  CHECK(ci.four_term == ci.direct);
  CHECK(ci.pairs_bb == 0);

  // Random sets over Q_8: the identity must hold exactly, and pairs_bb must
  // match a brute-force difference scan.
  std::mt19937_64 rng(109);
  Box box8 = Box::aniso(2, 8);
  for (int trial = 0; trial < 4; ++trial) {
    PointSet R = random_subset(box8, 0.2, rng);
    auto id = fourier::weighted_count_identity(R, BigRat(1));
    CHECK(id.direct == id.four_term);

    MonomialCurveWindow S{2, 8, BigRat(1)};
    std::int64_t want_bb = 0;
    for (std::int64_t i = 0; i < R.size(); ++i)
      for (std::int64_t j = 0; j < R.size(); ++j) {
        std::int64_t d1 = R.point(i)[0] - R.point(j)[0];
        std::int64_t d2 = R.point(i)[1] - R.point(j)[1];
        if (d1 >= 1 && d1 <= S.length() && d2 == d1 * d1) ++want_bb;
      }
    CHECK(id.pairs_bb == BigInt(want_bb));
  }
}

TEST_CASE("spectral count agrees with the exact rational count") {
  std::mt19937_64 rng(113);
  Box box = Box::aniso(2, 8);
  for (int trial = 0; trial < 3; ++trial) {
    PointSet B = random_subset(box, 0.15, rng);
    auto ci = fourier::weighted_count_identity(B, BigRat(1));
    auto sc = fourier::spectral_count(B, BigRat(1));
    double want = rat_to_double(ci.direct);
    CHECK(std::abs(sc.value - want) <= 1e-6 * (1.0 + std::abs(want)));
    CHECK(sc.abs_value >= std::abs(sc.value) - 1e-12);
  }
}

TEST_CASE("magnitude histogram partitions the spectrum") {
  std::mt19937_64 rng(127);
  auto g = fourier::EmbeddingGroup::for_box(2, 3);
  fourier::LatticeFn f(g);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& x : f.v) x = u(rng);
  auto s = fourier::dft(f);
  auto h = fourier::magnitude_histogram(s, 16);
  REQUIRE(h.size() == 16);
  std::int64_t total = 0;
  double maxmag = 0.0;
  for (const cplx& z : s.v) maxmag = std::max(maxmag, std::abs(z));
  for (std::size_t i = 0; i < h.size(); ++i) {
    total += h[i].second;
    if (i > 0) CHECK(h[i].first > h[i - 1].first);
  }
  CHECK(total == g.cells());
  CHECK(h.back().first == doctest::Approx(maxmag).epsilon(1e-12));
}
