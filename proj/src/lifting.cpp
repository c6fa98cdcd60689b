#include "diffsetlab/lifting.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace dsl::lifting {
namespace {

using std::int64_t;

// Sorted, deduplicated copy of A, validated against the universe [1, N].
std::vector<int64_t> canonical_set(const std::vector<int64_t>& A, int64_t N) {
  DSL_REQUIRE(!A.empty(), errc::invalid_argument, "the set must be nonempty");
  DSL_REQUIRE(N >= 1, errc::invalid_argument, "universe bound must be >= 1");
  std::vector<int64_t> a = A;
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  DSL_REQUIRE(a.front() >= 1 && a.back() <= N, errc::invalid_argument,
              "set elements must lie in [1, N]");
  return a;
}

// l1 norm of a coefficient row, exact.
int64_t row_l1(const PolynomialFamily& P, int i) {
  __int128 s = 0;
  for (int j = 0; j < P.degree_columns(); ++j) {
    int64_t c = P.coeff(i, j);
    s += c >= 0 ? static_cast<__int128>(c) : -static_cast<__int128>(c);
  }
  DSL_REQUIRE(s <= (int64_t{1} << 40), errc::resource_limit,
              "coefficient row norm too large");
  return static_cast<int64_t>(s);
}

// Odometer over the signed cube [-H, H]^k in lexicographic order. Returns
// false when the last point has been consumed.
bool next_cube_point(std::vector<int64_t>& b, int64_t H) {
  for (int j = static_cast<int>(b.size()) - 1; j >= 0; --j) {
    if (b[j] < H) {
      ++b[j];
      std::fill(b.begin() + j + 1, b.end(), -H);
      return true;
    }
  }
  return false;
}

}  // namespace

int64_t LiftDecomposition::row_value(int i, const std::vector<int64_t>& b) const {
  DSL_REQUIRE(static_cast<int>(b.size()) == P.degree_columns(), errc::invalid_argument,
              "point dimension must match the coefficient columns");
  __int128 v = 0;
  for (int j = 0; j < P.degree_columns(); ++j)
    v += static_cast<__int128>(P.coeff(i, j)) * b[j];
  DSL_REQUIRE(v >= INT64_MIN && v <= INT64_MAX, errc::resource_limit,
              "row functional overflows int64");
  return static_cast<int64_t>(v);
}

LiftDecomposition decompose(const PolynomialFamily& P) {
  const int ell = P.rows();
  const int k = P.degree_columns();
  DSL_REQUIRE(ell >= 1, errc::invalid_argument, "family must have a row");

  LiftDecomposition out;
  out.P = P;

  // basis[t]: reduced row with pivot column pivot[t], together with its
  // expression over the original selected rows (rep, selection order).
  std::vector<std::vector<BigRat>> basis;
  std::vector<int> pivot;
  std::vector<std::vector<BigRat>> rep;

  for (int i = 0; i < ell; ++i) {
    std::vector<BigRat> v(k);
    for (int j = 0; j < k; ++j) v[j] = BigRat(P.coeff(i, j));
    std::vector<BigRat> x(basis.size(), BigRat(0));  // combo over selected rows
    for (std::size_t t = 0; t < basis.size(); ++t) {
      if (v[pivot[t]] == 0) continue;
      BigRat f = v[pivot[t]] / basis[t][pivot[t]];
      for (int j = 0; j < k; ++j) v[j] -= f * basis[t][j];
      for (std::size_t u = 0; u < rep[t].size(); ++u) x[u] += f * rep[t][u];
    }
    int p = -1;
    for (int j = 0; j < k; ++j)
      if (v[j] != 0) { p = j; break; }
    if (p < 0) {
      out.dependent_rows.push_back(i);
      out.dependency.push_back(std::move(x));
    } else {
      // residual = row_i - sum x_t * selected_t, so over the enlarged
      // selection the new basis row is (-x, ..., +1).
      std::vector<BigRat> r = x;
      for (BigRat& c : r) c = -c;
      r.push_back(BigRat(1));
      basis.push_back(std::move(v));
      pivot.push_back(p);
      rep.push_back(std::move(r));
      out.row_selection.push_back(i);
    }
  }

  out.r = static_cast<int>(out.row_selection.size());
  DSL_REQUIRE(out.r >= 1, errc::invalid_argument, "family has rank zero");
  for (std::vector<BigRat>& d : out.dependency) d.resize(out.r, BigRat(0));

  // Exact reconstruction check: dependent row == dependency * selected rows.
  for (std::size_t di = 0; di < out.dependent_rows.size(); ++di) {
    int i = out.dependent_rows[di];
    for (int j = 0; j < k; ++j) {
      BigRat acc(0);
      for (int t = 0; t < out.r; ++t)
        acc += out.dependency[di][t] * BigRat(P.coeff(out.row_selection[t], j));
      DSL_REQUIRE(acc == BigRat(P.coeff(i, j)), errc::precondition,
                  "rank decomposition failed to reconstruct a dependent row");
    }
  }
  return out;
}

ShiftSearchResult shift_search(const std::vector<int64_t>& A,
                               const LiftDecomposition& decomp,
                               int64_t N_prime) {
  const int k = decomp.P.degree_columns();
  const int r = decomp.r;
  DSL_REQUIRE(N_prime >= 1, errc::invalid_argument, "N' must be >= 1");
  std::vector<int64_t> a = canonical_set(A, A.empty() ? 1 : *std::max_element(A.begin(), A.end()));
  const int64_t maxA = a.back();
  DSL_REQUIRE(N_prime >= maxA, errc::precondition,
              "N' must dominate the universe of A");

  BigInt cells = pow_big(BigInt(2 * N_prime + 1), static_cast<unsigned>(k));
  DSL_REQUIRE(cells <= BigInt(int64_t{1} << 22), errc::resource_limit,
              "lift cube too large to enumerate");

  std::vector<bool> in_a(static_cast<std::size_t>(maxA) + 1, false);
  for (int64_t v : a) in_a[static_cast<std::size_t>(v)] = true;
  auto member = [&](int64_t v) {
    return v >= 1 && v <= maxA && in_a[static_cast<std::size_t>(v)];
  };

  // Histogram of selected-row value tuples over the cube; shifts only see
  // the tuple, so multiplicity collapses the enumeration.
  std::map<std::vector<int64_t>, int64_t> hist;
  {
    std::vector<int64_t> b(static_cast<std::size_t>(k), -N_prime);
    std::vector<int64_t> tup(static_cast<std::size_t>(r));
    do {
      for (int t = 0; t < r; ++t) tup[static_cast<std::size_t>(t)] = decomp.row_value(decomp.row_selection[t], b);
      ++hist[tup];
    } while (next_cube_point(b, N_prime));
  }

  ShiftSearchResult out;
  out.scan_range.resize(static_cast<std::size_t>(r));
  __int128 combos = 1;
  for (int t = 0; t < r; ++t) {
    int64_t V = row_l1(decomp.P, decomp.row_selection[t]);
    __int128 reach = static_cast<__int128>(V) * N_prime;
    DSL_REQUIRE(reach <= (int64_t{1} << 40), errc::resource_limit,
                "row image too wide to scan");
    int64_t v = static_cast<int64_t>(reach);
    out.scan_range[static_cast<std::size_t>(t)] = {1 - v, maxA + v};
    combos *= maxA + 2 * v;
    DSL_REQUIRE(combos <= (int64_t{1} << 22), errc::resource_limit,
                "shift scan box too large");
  }
  DSL_REQUIRE(combos * static_cast<__int128>(hist.size()) <= (int64_t{1} << 32),
              errc::resource_limit, "shift scan too expensive");

  std::vector<int64_t> s(static_cast<std::size_t>(r));
  for (int t = 0; t < r; ++t) s[static_cast<std::size_t>(t)] = out.scan_range[static_cast<std::size_t>(t)].first;
  int64_t best = -1;
  std::vector<int64_t> best_s;
  BigInt total(0);
  for (;;) {
    int64_t cnt = 0;
    for (const auto& [tup, mult] : hist) {
      bool ok = true;
      for (int t = 0; t < r && ok; ++t)
        ok = member(s[static_cast<std::size_t>(t)] + tup[static_cast<std::size_t>(t)]);
      if (ok) cnt += mult;
    }
    total += BigInt(cnt);
    if (cnt > best) {  // lexicographic scan order makes ties keep the least s
      best = cnt;
      best_s = s;
    }
    int t = r - 1;
    while (t >= 0 && s[static_cast<std::size_t>(t)] == out.scan_range[static_cast<std::size_t>(t)].second) --t;
    if (t < 0) break;
    ++s[static_cast<std::size_t>(t)];
    for (int u = t + 1; u < r; ++u) s[static_cast<std::size_t>(u)] = out.scan_range[static_cast<std::size_t>(u)].first;
  }

  DSL_REQUIRE(best >= 1, errc::precondition,
              "shift search found an empty fiber");
  out.s = std::move(best_s);
  out.count = BigInt(best);
  out.scan_total = std::move(total);
  return out;
}

LiftResult build_lifted_set(const std::vector<int64_t>& A,
                            const PolynomialFamily& P,
                            std::optional<int64_t> N) {
  const int ell = P.rows();
  const int k = P.degree_columns();
  int64_t n = N ? *N : (A.empty() ? 0 : *std::max_element(A.begin(), A.end()));
  std::vector<int64_t> a = canonical_set(A, n);
  DSL_REQUIRE(n <= (int64_t{1} << 20), errc::resource_limit, "universe too large");

  LiftResult out;
  out.decomp = decompose(P);

  // Cover a shifted copy of [1,N] through the weakest selected row, with a
  // factor-two margin when that row has unit norm.
  int64_t min_norm = INT64_MAX;
  for (int idx : out.decomp.row_selection) min_norm = std::min(min_norm, row_l1(P, idx));
  int64_t gamma = min_norm >= 2 ? 1 : 2;
  out.N_prime = gamma * n;

  ShiftSearchResult shifts = shift_search(a, out.decomp, out.N_prime);

  const int64_t maxA = a.back();
  std::vector<bool> in_a(static_cast<std::size_t>(maxA) + 1, false);
  for (int64_t v : a) in_a[static_cast<std::size_t>(v)] = true;
  auto member = [&](int64_t v) {
    return v >= 1 && v <= maxA && in_a[static_cast<std::size_t>(v)];
  };

  // Stage-one survivors.
  std::vector<int64_t> prime_flat;
  {
    std::vector<int64_t> b(static_cast<std::size_t>(k), -out.N_prime);
    do {
      bool ok = true;
      for (int t = 0; t < out.decomp.r && ok; ++t)
        ok = member(shifts.s[static_cast<std::size_t>(t)] +
                    out.decomp.row_value(out.decomp.row_selection[t], b));
      if (ok) prime_flat.insert(prime_flat.end(), b.begin(), b.end());
    } while (next_cube_point(b, out.N_prime));
  }
  int64_t prime_n = static_cast<int64_t>(prime_flat.size()) / k;
  DSL_REQUIRE(prime_n >= 1, errc::precondition,
              "reduction degenerate: the selected-row stage is empty");
  out.stage_count = BigInt(prime_n);

  const int dep = ell - out.decomp.r;
  std::vector<int64_t> t_best;
  std::vector<int64_t> final_flat;
  BigInt t_total(0);
  if (dep == 0) {
    final_flat = prime_flat;
    t_total = out.stage_count;  // single empty shift, count = |B'|
  } else {
    // Dependent-row values per survivor, via the rational dependency matrix;
    // the result must be an integer and must match the row functional.
    std::vector<int64_t> w(static_cast<std::size_t>(prime_n) * static_cast<std::size_t>(dep));
    std::vector<int64_t> b(static_cast<std::size_t>(k));
    for (int64_t p = 0; p < prime_n; ++p) {
      std::copy_n(prime_flat.begin() + p * k, k, b.begin());
      for (int di = 0; di < dep; ++di) {
        BigRat acc(0);
        for (int t = 0; t < out.decomp.r; ++t)
          acc += out.decomp.dependency[static_cast<std::size_t>(di)][static_cast<std::size_t>(t)] *
                 BigRat(out.decomp.row_value(out.decomp.row_selection[t], b));
        BigInt fl = floor_rat(acc);
        DSL_REQUIRE(BigRat(fl) == acc, errc::precondition,
                    "dependent row value is not an integer");
        int64_t direct = out.decomp.row_value(out.decomp.dependent_rows[static_cast<std::size_t>(di)], b);
        DSL_REQUIRE(fl == BigInt(direct), errc::precondition,
                    "dependency matrix disagrees with the row functional");
        w[static_cast<std::size_t>(p * dep + di)] = direct;
      }
    }

    std::vector<std::pair<int64_t, int64_t>> range(static_cast<std::size_t>(dep));
    __int128 combos = 1;
    for (int di = 0; di < dep; ++di) {
      int64_t V = row_l1(P, out.decomp.dependent_rows[static_cast<std::size_t>(di)]);
      __int128 reach = static_cast<__int128>(V) * out.N_prime;
      DSL_REQUIRE(reach <= (int64_t{1} << 40), errc::resource_limit,
                  "dependent row image too wide to scan");
      int64_t v = static_cast<int64_t>(reach);
      range[static_cast<std::size_t>(di)] = {1 - v, maxA + v};
      combos *= maxA + 2 * v;
      DSL_REQUIRE(combos <= (int64_t{1} << 22), errc::resource_limit,
                  "dependent shift scan box too large");
    }
    DSL_REQUIRE(combos * static_cast<__int128>(prime_n) <= (int64_t{1} << 32),
                errc::resource_limit, "dependent shift scan too expensive");

    std::vector<int64_t> t(static_cast<std::size_t>(dep));
    for (int di = 0; di < dep; ++di) t[static_cast<std::size_t>(di)] = range[static_cast<std::size_t>(di)].first;
    int64_t best = -1;
    for (;;) {
      int64_t cnt = 0;
      for (int64_t p = 0; p < prime_n; ++p) {
        bool ok = true;
        for (int di = 0; di < dep && ok; ++di)
          ok = member(t[static_cast<std::size_t>(di)] + w[static_cast<std::size_t>(p * dep + di)]);
        if (ok) ++cnt;
      }
      t_total += BigInt(cnt);
      if (cnt > best) {
        best = cnt;
        t_best = t;
      }
      int di = dep - 1;
      while (di >= 0 && t[static_cast<std::size_t>(di)] == range[static_cast<std::size_t>(di)].second) --di;
      if (di < 0) break;
      ++t[static_cast<std::size_t>(di)];
      for (int u = di + 1; u < dep; ++u) t[static_cast<std::size_t>(u)] = range[static_cast<std::size_t>(u)].first;
    }
    DSL_REQUIRE(best >= 1, errc::precondition,
                "reduction degenerate: the lifted set is empty");

    for (int64_t p = 0; p < prime_n; ++p) {
      bool ok = true;
      for (int di = 0; di < dep && ok; ++di)
        ok = member(t_best[static_cast<std::size_t>(di)] + w[static_cast<std::size_t>(p * dep + di)]);
      if (ok)
        final_flat.insert(final_flat.end(), prime_flat.begin() + p * k,
                          prime_flat.begin() + (p + 1) * k);
    }
  }

  // Per-row shifts in original row order.
  out.m.assign(static_cast<std::size_t>(ell), 0);
  for (int t = 0; t < out.decomp.r; ++t)
    out.m[static_cast<std::size_t>(out.decomp.row_selection[t])] = shifts.s[static_cast<std::size_t>(t)];
  for (int di = 0; di < dep; ++di)
    out.m[static_cast<std::size_t>(out.decomp.dependent_rows[static_cast<std::size_t>(di)])] =
        t_best[static_cast<std::size_t>(di)];
  out.dependent_scan_total = std::move(t_total);

  // Exhaustive certificate: every member satisfies every shifted row.
  {
    int64_t cnt = static_cast<int64_t>(final_flat.size()) / k;
    std::vector<int64_t> b(static_cast<std::size_t>(k));
    for (int64_t p = 0; p < cnt; ++p) {
      std::copy_n(final_flat.begin() + p * k, k, b.begin());
      for (int i = 0; i < ell; ++i)
        DSL_REQUIRE(member(out.m[static_cast<std::size_t>(i)] + out.decomp.row_value(i, b)),
                    errc::precondition, "lift certificate failed");
    }
  }

  out.B = PointSet(Box::signed_cube(k, out.N_prime), std::move(final_flat));
  return out;
}

SumsetReduction sumset_reduce(const std::vector<int64_t>& A,
                              const std::vector<int64_t>& Bset,
                              std::optional<int64_t> N) {
  int64_t maxA = A.empty() ? 0 : *std::max_element(A.begin(), A.end());
  int64_t maxB = Bset.empty() ? 0 : *std::max_element(Bset.begin(), Bset.end());
  int64_t n = N ? *N : std::max(maxA, maxB);
  std::vector<int64_t> a = canonical_set(A, n);
  std::vector<int64_t> bs = canonical_set(Bset, n);
  DSL_REQUIRE(static_cast<__int128>(a.size()) * bs.size() <= (int64_t{1} << 26),
              errc::resource_limit, "pair enumeration too large");

  // Slice sizes |Bset cap (m - A)| indexed by the sum m = a + b.
  std::vector<int64_t> cnt(static_cast<std::size_t>(2 * n + 1), 0);
  for (int64_t x : a)
    for (int64_t y : bs) ++cnt[static_cast<std::size_t>(x + y)];

  SumsetReduction out;
  BigInt total(0);
  int64_t best = -1;
  for (int64_t m = 2; m <= 2 * n; ++m) {
    total += BigInt(cnt[static_cast<std::size_t>(m)]);
    if (cnt[static_cast<std::size_t>(m)] > best) {
      best = cnt[static_cast<std::size_t>(m)];
      out.m = m;
    }
  }
  out.pair_total = std::move(total);

  std::vector<bool> in_a(static_cast<std::size_t>(n) + 1, false);
  for (int64_t v : a) in_a[static_cast<std::size_t>(v)] = true;
  for (int64_t y : bs) {
    int64_t x = out.m - y;
    if (x >= 1 && x <= n && in_a[static_cast<std::size_t>(x)]) out.D.push_back(y);
  }
  DSL_REQUIRE(static_cast<int64_t>(out.D.size()) == best, errc::precondition,
              "slice recount disagrees with the scan");

  out.lower_bound = BigRat(BigInt(static_cast<int64_t>(a.size())) *
                               BigInt(static_cast<int64_t>(bs.size())),
                           BigInt(2 * n - 1));
  DSL_REQUIRE(BigRat(static_cast<int64_t>(out.D.size())) >= out.lower_bound,
              errc::precondition, "pigeonhole bound violated");
  return out;
}

}  // namespace dsl::lifting
