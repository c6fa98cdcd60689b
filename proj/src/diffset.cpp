#include "diffsetlab/diffset.hpp"

#include <algorithm>
#include <cmath>

#include "diffsetlab/kernels.hpp"

namespace dsl::diffset {

namespace {

// Saturating 128-bit Horner for P_i(d). Values whose magnitude passes the
// saturation rail can never return to a small range (k <= 16 steps of +-2^63
// drift), so "saturated" safely means |P_i(d)| > any difference bound we use.
constexpr __int128 kSatRail = static_cast<__int128>(1) << 90;

struct EvalResult {
  __int128 value;
  bool saturated;
};

EvalResult eval128(const PolynomialFamily& P, int row, std::int64_t d) {
  __int128 acc = 0;
  for (int j = P.degree_columns() - 1; j >= 0; --j) {
    acc = acc * d + P.coeff(row, j);
    if (acc > kSatRail || acc < -kSatRail) return {acc, true};
  }
  acc *= d;  // zero constant term: P(d) = d * (c_1 + c_2 d + ...)
  if (acc > kSatRail || acc < -kSatRail) return {acc, true};
  return {acc, false};
}

// Complete scan bound: past |d| >= N + sum|coeffs|, every row exceeds N-1 in
// magnitude (leading coefficient at least 1 in absolute value).
std::int64_t derived_d_max(const PolynomialFamily& P, std::int64_t N) {
  BigInt total = N;
  for (std::int64_t c : P.coeffs()) total += c < 0 ? -c : c;
  DSL_REQUIRE(total <= (std::int64_t{1} << 22), errc::resource_limit,
              "configuration scan range too large; pass an explicit d_max");
  return to_i64(total);
}

// All rows' |P_i(d)| as values <= bound, or nothing when some row leaves the
// representable difference range (that d can never be completed).
std::optional<std::vector<std::int64_t>> config_values(const PolynomialFamily& P,
                                                       std::int64_t d, std::int64_t bound) {
  std::vector<std::int64_t> vals(static_cast<std::size_t>(P.rows()));
  for (int i = 0; i < P.rows(); ++i) {
    EvalResult e = eval128(P, i, d);
    if (e.saturated || e.value > bound || e.value < -bound) return std::nullopt;
    vals[static_cast<std::size_t>(i)] =
        static_cast<std::int64_t>(e.value < 0 ? -e.value : e.value);
  }
  return vals;
}

}  // namespace

// ---------------------------------------------------------------------------
// Polynomial configurations in A - A

std::optional<ConfigWitness> has_polynomial_configuration(
    const std::vector<std::int64_t>& A, const PolynomialFamily& P,
    std::optional<std::int64_t> d_max, std::optional<std::int64_t> N) {
  if (A.empty()) return std::nullopt;
  DSL_REQUIRE(P.rows() >= 1, errc::invalid_argument, "empty polynomial family");
  std::vector<std::int64_t> a_sorted(A);
  std::sort(a_sorted.begin(), a_sorted.end());
  a_sorted.erase(std::unique(a_sorted.begin(), a_sorted.end()), a_sorted.end());
  std::int64_t n_bound = N.value_or(a_sorted.back());
  DSL_REQUIRE(n_bound >= 1 && n_bound <= (std::int64_t{1} << 24), errc::invalid_argument,
              "has_polynomial_configuration: N out of range");
  DSL_REQUIRE(a_sorted.front() >= 1 && a_sorted.back() <= n_bound, errc::invalid_argument,
              "has_polynomial_configuration: A must lie in [1, N]");
  if (d_max) DSL_REQUIRE(*d_max >= 1, errc::invalid_argument, "d_max must be >= 1");
  std::int64_t scan = d_max ? *d_max : derived_d_max(P, n_bound);

  std::vector<std::uint8_t> member(static_cast<std::size_t>(n_bound) + 1, 0);
  for (std::int64_t a : a_sorted) member[static_cast<std::size_t>(a)] = 1;
  std::vector<std::uint8_t> diff(static_cast<std::size_t>(n_bound), 0);
  diff[0] = 1;
  for (std::size_t i = 0; i < a_sorted.size(); ++i)
    for (std::size_t j = i + 1; j < a_sorted.size(); ++j)
      diff[static_cast<std::size_t>(a_sorted[j] - a_sorted[i])] = 1;

  auto witness_for = [&](std::int64_t d) -> std::optional<ConfigWitness> {
    ConfigWitness w;
    w.d = d;
    for (int i = 0; i < P.rows(); ++i) {
      EvalResult e = eval128(P, i, d);
      if (e.saturated || e.value > n_bound - 1 || e.value < -(n_bound - 1)) return std::nullopt;
      auto v = static_cast<std::int64_t>(e.value);
      std::int64_t mag = v < 0 ? -v : v;
      if (!diff[static_cast<std::size_t>(mag)]) return std::nullopt;
      // Recover the least pair (a, a') with a - a' = v.
      bool found = false;
      for (std::int64_t a : a_sorted) {
        std::int64_t other = a - v;
        if (other >= 1 && other <= n_bound && member[static_cast<std::size_t>(other)]) {
          w.pairs.emplace_back(a, other);
          found = true;
          break;
        }
      }
      if (!found) return std::nullopt;  // diff bit was stale only for v = 0 edge; defensive
    }
    return w;
  };

  for (std::int64_t a = 1; a <= scan; ++a) {
    if (auto w = witness_for(a)) return w;
    if (auto w = witness_for(-a)) return w;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Monomial-difference counting

namespace {

struct PaddedBits {
  std::vector<std::uint64_t> words;
  std::vector<std::int64_t> stride;  // per axis, in bits
  std::int64_t nbits = 0;
};

// Each axis j gets a padded slot of 2 M^j + 1 cells, so the flat offset of a
// difference never aliases across axis boundaries.
PaddedBits padded_indicator(const PointSet& B) {
  const Box& box = B.box();
  const int k = box.k();
  PaddedBits out;
  out.stride.assign(static_cast<std::size_t>(k), 1);
  std::int64_t nbits = 1;
  for (int j = k - 1; j >= 0; --j) {
    out.stride[static_cast<std::size_t>(j)] = nbits;
    std::int64_t slot = 2 * (box.hi(j) - box.lo(j) + 1) + 1;
    DSL_REQUIRE(nbits <= (std::int64_t{1} << 28) / slot, errc::resource_limit,
                "count_monomial_differences: padded bitset too large");
    nbits *= slot;
  }
  out.nbits = nbits;
  out.words.assign(static_cast<std::size_t>((nbits + 63) / 64), 0);
  for (std::int64_t i = 0; i < B.size(); ++i) {
    const std::int64_t* p = B.point(i);
    std::int64_t off = 0;
    for (int j = 0; j < k; ++j) {
      std::int64_t ext = box.hi(j) - box.lo(j) + 1;
      off += (p[j] - box.lo(j) + ext) * out.stride[static_cast<std::size_t>(j)];
    }
    out.words[static_cast<std::size_t>(off >> 6)] |= std::uint64_t{1} << (off & 63);
  }
  return out;
}

}  // namespace

BigInt count_monomial_differences(const PointSet& B, const BigRat& eps) {
  const Box& box = B.box();
  DSL_REQUIRE(box.mode() == BoxMode::box, errc::precondition,
              "count_monomial_differences: expects an anisotropic box set");
  DSL_REQUIRE(eps > 0 && eps <= 1, errc::invalid_argument,
              "count_monomial_differences: eps must be in (0,1]");
  const std::int64_t D = to_i64(floor_rat(eps * box.scale()));
  if (B.empty() || D < 1) return 0;
  PaddedBits bits = padded_indicator(B);
  const kern::Backend& be = kern::active_backend();
  BigInt total = 0;
  for (std::int64_t d = 1; d <= D; ++d) {
    std::int64_t off = 0;
    for (int j = 0; j < box.k(); ++j)
      off += pow_i64_checked(d, static_cast<unsigned>(j + 1)) *
             bits.stride[static_cast<std::size_t>(j)];
    total += be.shifted_and_popcount(bits.words.data(), bits.words.data(),
                                     static_cast<std::size_t>(bits.nbits),
                                     static_cast<std::size_t>(off));
  }
  return total;
}

BigInt count_monomial_differences_dft(const PointSet& B, const BigRat& eps,
                                      std::int64_t max_cells) {
  const Box& box = B.box();
  DSL_REQUIRE(box.mode() == BoxMode::box, errc::precondition,
              "count_monomial_differences_dft: expects an anisotropic box set");
  DSL_REQUIRE(eps > 0 && eps <= 1, errc::invalid_argument,
              "count_monomial_differences_dft: eps must be in (0,1]");
  const std::int64_t D = to_i64(floor_rat(eps * box.scale()));
  if (B.empty() || D < 1) return 0;
  fourier::EmbeddingGroup g =
      fourier::EmbeddingGroup::for_box(box.k(), box.scale(), std::nullopt, max_cells);
  fourier::Spectrum bhat = fourier::dft(fourier::lattice_indicator(B, g));
  MonomialCurveWindow S{box.k(), box.scale(), eps};
  fourier::Spectrum shat = fourier::dft(fourier::lattice_curve(S, g));
  double value = fourier::spectral_correlation(bhat, shat).value;
  return BigInt(std::llround(value));
}

std::optional<std::int64_t> has_monomial_difference(const PointSet& B) {
  if (B.empty()) return std::nullopt;
  const Box& box = B.box();
  const int k = box.k();
  std::vector<std::int64_t> span(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) span[static_cast<std::size_t>(j)] = box.extent(j) - 1;
  for (std::int64_t a = 1;; ++a) {
    bool in_range = true;
    for (int j = 0; j < k && in_range; ++j) {
      __int128 p = 1;
      for (int e = 0; e <= j; ++e) p *= a;
      if (p > span[static_cast<std::size_t>(j)]) in_range = false;
    }
    if (!in_range) return std::nullopt;
    for (std::int64_t d : {a, -a})
      if (find_monomial_difference_at(B, d)) return d;
  }
}

std::optional<std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>>
find_monomial_difference_at(const PointSet& B, std::int64_t d) {
  DSL_REQUIRE(d != 0, errc::invalid_argument, "find_monomial_difference_at: d must be nonzero");
  const int k = B.box().k();
  std::vector<std::int64_t> s(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) s[static_cast<std::size_t>(j)] = pow_i64_checked(d, static_cast<unsigned>(j + 1));
  std::vector<std::int64_t> other(static_cast<std::size_t>(k));
  for (std::int64_t i = 0; i < B.size(); ++i) {
    const std::int64_t* b = B.point(i);
    for (int j = 0; j < k; ++j) other[static_cast<std::size_t>(j)] = b[j] - s[static_cast<std::size_t>(j)];
    if (B.contains(other.data()))
      return std::make_pair(std::vector<std::int64_t>(b, b + k), other);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Random-branch defect

RandomnessDefect randomness_defect(const PointSet& B, const LabConstants& consts) {
  DSL_REQUIRE(!B.empty(), errc::precondition, "randomness_defect: density of an empty set");
  DSL_REQUIRE(consts.eps > 0 && consts.eps <= 1, errc::invalid_argument,
              "randomness_defect: eps must be in (0,1]");
  RandomnessDefect out;
  // Full-range count, d = 1..M. The bar (eps/4)*delta*|B|*M is far below the
  // eps*delta*|B|*M a random set would collect on the eps-window alone, so
  // clearing it is the weakest of the two natural calibrations.
  out.count = count_monomial_differences(B, BigRat(1));
  BigRat delta = B.density();
  out.threshold = consts.eps / 4 * delta * BigRat(B.size()) * BigRat(B.box().scale());
  out.is_random = BigRat(out.count) >= out.threshold;
  return out;
}

// ---------------------------------------------------------------------------
// Greedy constructions

std::vector<std::int64_t> greedy_free_set(std::int64_t N, const PolynomialFamily& P) {
  DSL_REQUIRE(N >= 1 && N <= (std::int64_t{1} << 20), errc::invalid_argument,
              "greedy_free_set: N out of range");
  std::int64_t scan = derived_d_max(P, N);
  // All completable value tuples |P_i(d)|, d != 0.
  std::vector<std::vector<std::int64_t>> configs;
  for (std::int64_t a = 1; a <= scan; ++a)
    for (std::int64_t d : {a, -a})
      if (auto vals = config_values(P, d, N - 1)) configs.push_back(std::move(*vals));

  std::vector<std::int64_t> kept;
  std::vector<std::uint8_t> present(static_cast<std::size_t>(N), 0);
  std::vector<std::int64_t> added;
  for (std::int64_t n = 1; n <= N; ++n) {
    added.clear();
    if (kept.empty() && !present[0]) {
      present[0] = 1;
      added.push_back(0);
    }
    for (std::int64_t a : kept) {
      std::int64_t v = n - a;
      if (!present[static_cast<std::size_t>(v)]) {
        present[static_cast<std::size_t>(v)] = 1;
        added.push_back(v);
      }
    }
    bool bad = false;
    for (const auto& cfg : configs) {
      bool all = true;
      for (std::int64_t v : cfg)
        if (!present[static_cast<std::size_t>(v)]) {
          all = false;
          break;
        }
      if (all) {
        bad = true;
        break;
      }
    }
    if (bad) {
      for (std::int64_t v : added) present[static_cast<std::size_t>(v)] = 0;
    } else {
      kept.push_back(n);
    }
  }
  return kept;
}

PointSet greedy_free_box(int k, std::int64_t L) {
  Box box = Box::aniso(k, L);
  BigInt vol = box.volume();
  DSL_REQUIRE(vol <= (std::int64_t{1} << 22), errc::resource_limit,
              "greedy_free_box: box too large");
  std::vector<std::int64_t> ext(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) ext[static_cast<std::size_t>(j)] = box.extent(j);
  auto flat = [&](const std::int64_t* m) {
    std::int64_t idx = 0;
    for (int j = 0; j < k; ++j) idx = idx * ext[static_cast<std::size_t>(j)] + (m[j] - 1);
    return idx;
  };
  std::vector<std::uint8_t> kept_mask(static_cast<std::size_t>(to_i64(vol)), 0);
  std::vector<std::int64_t> kept_flat;

  // Forbidden difference vectors: curve(d) and -curve(d) for d = +-a.
  std::vector<std::vector<std::int64_t>> deltas;
  for (std::int64_t a = 1; a < L; ++a) {
    bool any = false;
    for (std::int64_t d : {a, -a}) {
      std::vector<std::int64_t> s(static_cast<std::size_t>(k));
      bool fits = true;
      for (int j = 0; j < k; ++j) {
        s[static_cast<std::size_t>(j)] = pow_i64_checked(d, static_cast<unsigned>(j + 1));
        std::int64_t mag = s[static_cast<std::size_t>(j)] < 0 ? -s[static_cast<std::size_t>(j)]
                                                              : s[static_cast<std::size_t>(j)];
        if (mag > ext[static_cast<std::size_t>(j)] - 1) fits = false;
      }
      if (!fits) continue;
      any = true;
      deltas.push_back(s);
      for (std::int64_t& c : s) c = -c;
      deltas.push_back(s);
    }
    if (!any) break;
  }

  std::vector<std::int64_t> m(static_cast<std::size_t>(k), 1);
  std::vector<std::int64_t> o(static_cast<std::size_t>(k));
  bool done = false;
  while (!done) {
    bool bad = false;
    for (const auto& dl : deltas) {
      bool inside = true;
      for (int j = 0; j < k; ++j) {
        o[static_cast<std::size_t>(j)] = m[static_cast<std::size_t>(j)] - dl[static_cast<std::size_t>(j)];
        if (o[static_cast<std::size_t>(j)] < 1 || o[static_cast<std::size_t>(j)] > ext[static_cast<std::size_t>(j)]) {
          inside = false;
          break;
        }
      }
      if (inside && kept_mask[static_cast<std::size_t>(flat(o.data()))]) {
        bad = true;
        break;
      }
    }
    if (!bad) {
      kept_mask[static_cast<std::size_t>(flat(m.data()))] = 1;
      for (int j = 0; j < k; ++j) kept_flat.push_back(m[static_cast<std::size_t>(j)]);
    }
    int axis = k - 1;
    while (axis >= 0) {
      if (++m[static_cast<std::size_t>(axis)] <= ext[static_cast<std::size_t>(axis)]) break;
      m[static_cast<std::size_t>(axis)] = 1;
      --axis;
    }
    done = axis < 0;
  }
  return PointSet(box, std::move(kept_flat));
}

// ---------------------------------------------------------------------------
// Exact extremal search

namespace {

struct SearchState {
  std::int64_t N;
  std::vector<std::vector<std::int64_t>> configs;   // sorted unique values per d
  std::vector<std::vector<std::int32_t>> need;      // value -> config ids
  std::vector<std::int32_t> cnt;                    // multiplicity per value > 0
  std::vector<std::int64_t> chosen;
  std::vector<std::int64_t> best;
  std::uint64_t nodes = 0;
  std::uint64_t budget = 0;
  bool stopped = false;

  bool value_present(std::int64_t v) const {
    return v == 0 ? !chosen.empty() : cnt[static_cast<std::size_t>(v)] > 0;
  }

  void dfs(std::int64_t n) {
    if (stopped) return;
    if (++nodes > budget) {
      stopped = true;
      return;
    }
    if (static_cast<std::int64_t>(chosen.size()) + (N - n + 1) <=
        static_cast<std::int64_t>(best.size()))
      return;
    if (n > N) {
      if (chosen.size() > best.size()) best = chosen;
      return;
    }
    // Include n when no configuration becomes fully present.
    std::vector<std::int64_t> fresh;
    bool was_empty = chosen.empty();
    for (std::int64_t a : chosen) {
      std::int64_t v = n - a;
      if (cnt[static_cast<std::size_t>(v)]++ == 0) fresh.push_back(v);
    }
    chosen.push_back(n);
    bool bad = false;
    auto completes = [&](std::int64_t v) {
      for (std::int32_t ci : need[static_cast<std::size_t>(v)]) {
        bool all = true;
        for (std::int64_t u : configs[static_cast<std::size_t>(ci)])
          if (!value_present(u)) {
            all = false;
            break;
          }
        if (all) return true;
      }
      return false;
    };
    for (std::int64_t v : fresh)
      if (completes(v)) {
        bad = true;
        break;
      }
    if (!bad && was_empty && !need[0].empty() && completes(0)) bad = true;
    if (!bad) dfs(n + 1);
    chosen.pop_back();
    for (std::int64_t a : chosen) --cnt[static_cast<std::size_t>(n - a)];
    // Exclude n.
    if (!stopped) dfs(n + 1);
  }
};

}  // namespace

ExactMaxResult max_free_set_exact(std::int64_t N, const PolynomialFamily& P,
                                  std::uint64_t node_budget) {
  DSL_REQUIRE(N >= 1 && N <= (std::int64_t{1} << 16), errc::invalid_argument,
              "max_free_set_exact: N out of range");
  DSL_REQUIRE(node_budget >= 1, errc::invalid_argument, "max_free_set_exact: empty budget");
  SearchState st;
  st.N = N;
  st.budget = node_budget;
  std::int64_t scan = derived_d_max(P, N);
  for (std::int64_t a = 1; a <= scan; ++a)
    for (std::int64_t d : {a, -a})
      if (auto vals = config_values(P, d, N - 1)) {
        std::sort(vals->begin(), vals->end());
        vals->erase(std::unique(vals->begin(), vals->end()), vals->end());
        st.configs.push_back(std::move(*vals));
      }
  // Dedup identical tuples (d and -d often coincide for even polynomials).
  std::sort(st.configs.begin(), st.configs.end());
  st.configs.erase(std::unique(st.configs.begin(), st.configs.end()), st.configs.end());
  st.need.assign(static_cast<std::size_t>(N), {});
  for (std::size_t ci = 0; ci < st.configs.size(); ++ci)
    for (std::int64_t v : st.configs[ci])
      st.need[static_cast<std::size_t>(v)].push_back(static_cast<std::int32_t>(ci));
  st.cnt.assign(static_cast<std::size_t>(N), 0);
  st.dfs(1);
  ExactMaxResult out;
  out.size = static_cast<std::int64_t>(st.best.size());
  out.witness = std::move(st.best);
  out.exact = !st.stopped;
  out.nodes = st.nodes;
  return out;
}

// ---------------------------------------------------------------------------
// Density ceiling

double density_upper_bound(std::int64_t N, const PolynomialFamily& P, double C) {
  DSL_REQUIRE(N >= 16, errc::precondition, "density_upper_bound: needs N >= 16");
  DSL_REQUIRE(C > 0, errc::invalid_argument, "density_upper_bound: C must be positive");
  int k = P.effective_degree();
  int ell = P.rows();
  DSL_REQUIRE(k >= 2, errc::invalid_argument,
              "density_upper_bound: family degree must be at least 2");
  double logN = std::log(static_cast<double>(N));
  double ratio = std::log(logN) / logN;
  return C * std::pow(ratio, 1.0 / (static_cast<double>(ell) * (k - 1)));
}

}  // namespace dsl::diffset
