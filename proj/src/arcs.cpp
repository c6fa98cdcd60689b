#include "diffsetlab/arcs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <vector>

#include "diffsetlab/fourier.hpp"
#include "diffsetlab/kernels.hpp"

namespace dsl::arcs {

namespace {

// Distance between two rationals on the torus R/Z, exactly.
BigRat torus_dist(const BigRat& x, const BigRat& y) {
  BigRat d = x - y;
  d -= BigRat(floor_rat(d));  // now in [0, 1)
  BigRat other = BigRat(1) - d;
  return d < other ? d : other;
}

// eta^{-k} as an exact rational. Requires eta in (0, 1].
BigRat inverse_eta_pow(const BigRat& eta, int k) {
  DSL_REQUIRE(eta > 0 && eta <= 1, errc::invalid_argument,
              "frequency resolution parameter eta must lie in (0, 1]");
  return BigRat(1) / pow_rat(eta, k);
}

}  // namespace

// ---------------------------------------------------------------------------
// Box membership and classification

void MajorBoxSpec::validate() const {
  DSL_REQUIRE(k >= 1 && k <= 16, errc::invalid_argument, "box spec: k out of range");
  DSL_REQUIRE(q >= 1, errc::invalid_argument, "box spec: modulus must be positive");
  DSL_REQUIRE(M >= 1, errc::invalid_argument, "box spec: window scale must be positive");
  DSL_REQUIRE(static_cast<int>(a.size()) == k, errc::invalid_argument,
              "box spec: need one numerator per axis");
  for (std::int64_t aj : a)
    DSL_REQUIRE(aj >= 1 && aj <= q, errc::invalid_argument,
                "box spec: numerators must lie in [1, q]");
  DSL_REQUIRE(eta > 0 && eta <= 1, errc::invalid_argument, "box spec: eta must lie in (0, 1]");
}

BigRat MajorBoxSpec::half_width(int j) const {
  DSL_REQUIRE(j >= 0 && j < k, errc::invalid_argument, "box spec: axis out of range");
  return inverse_eta_pow(eta, k) / BigRat(pow_big(BigInt(M), j + 1));
}

bool MajorBoxSpec::contains(const std::vector<BigRat>& alpha) const {
  validate();
  DSL_REQUIRE(static_cast<int>(alpha.size()) == k, errc::invalid_argument,
              "box spec: frequency dimension mismatch");
  for (int j = 0; j < k; ++j) {
    BigRat center(BigInt(a[static_cast<std::size_t>(j)]), BigInt(q));
    if (torus_dist(alpha[static_cast<std::size_t>(j)], center) > half_width(j)) return false;
  }
  return true;
}

Classification classify_frequency(const std::vector<BigRat>& alpha, const BigRat& eta,
                                  std::int64_t M) {
  int k = static_cast<int>(alpha.size());
  DSL_REQUIRE(k >= 1 && k <= 16, errc::invalid_argument, "classify_frequency: k out of range");
  DSL_REQUIRE(M >= 1, errc::invalid_argument, "classify_frequency: window scale must be positive");
  BigRat inv = inverse_eta_pow(eta, k);
  std::int64_t q_max = to_i64(floor_rat(inv));
  DSL_REQUIRE(q_max >= 1, errc::precondition,
              "classify_frequency: degenerate resolution, floor(eta^-k) < 1");

  // Per-axis half-widths, shared across moduli.
  std::vector<BigRat> hw(static_cast<std::size_t>(k));
  {
    BigInt mj = 1;
    for (int j = 0; j < k; ++j) {
      mj *= M;
      hw[static_cast<std::size_t>(j)] = inv / BigRat(mj);
    }
  }

  for (std::int64_t q = 1; q <= q_max; ++q) {
    std::vector<std::int64_t> wit(static_cast<std::size_t>(k));
    bool ok = true;
    for (int j = 0; j < k && ok; ++j) {
      // The nearest multiple of 1/q decides membership for this axis: any
      // other numerator is at least as far away on the torus.
      BigRat t = alpha[static_cast<std::size_t>(j)] * q;
      BigInt n = floor_rat(t + BigRat(1, 2));
      BigRat dist = t - BigRat(n);
      if (dist < 0) dist = -dist;
      if (dist / q > hw[static_cast<std::size_t>(j)]) {
        ok = false;
        break;
      }
      BigInt r = n % q;
      if (r < 0) r += q;
      wit[static_cast<std::size_t>(j)] = (r == 0) ? q : to_i64(r);
    }
    if (ok) return Classification{true, q, std::move(wit)};
  }
  return Classification{false, 0, {}};
}

// ---------------------------------------------------------------------------
// Complete exponential sums mod q

GaussSumResult gauss_sum(const std::vector<std::int64_t>& a, std::int64_t q,
                         double hua_constant) {
  int k = static_cast<int>(a.size());
  DSL_REQUIRE(k >= 1 && k <= 16, errc::invalid_argument, "gauss_sum: k out of range");
  DSL_REQUIRE(q >= 1, errc::invalid_argument, "gauss_sum: modulus must be positive");
  DSL_REQUIRE(q <= (std::int64_t{1} << 26), errc::resource_limit, "gauss_sum: modulus too large");
  DSL_REQUIRE(hua_constant > 0, errc::invalid_argument, "gauss_sum: constant must be positive");

  std::vector<std::int64_t> am(static_cast<std::size_t>(k));
  std::int64_t g = q;
  for (int j = 0; j < k; ++j) {
    std::int64_t r = a[static_cast<std::size_t>(j)] % q;
    if (r < 0) r += q;
    am[static_cast<std::size_t>(j)] = r;
    g = std::gcd(g, r);
  }

  std::vector<double> turns(static_cast<std::size_t>(q));
  for (std::int64_t r = 0; r < q; ++r) {
    __int128 rho = 0;
    __int128 p = 1;  // r^j mod q
    for (int j = 0; j < k; ++j) {
      p = (p * r) % q;
      rho = (rho + static_cast<__int128>(am[static_cast<std::size_t>(j)]) * p) % q;
    }
    turns[static_cast<std::size_t>(r)] =
        phase::turn_from_residue(static_cast<std::int64_t>(rho), q);
  }
  double re = 0.0, im = 0.0;
  kern::active_backend().phase_sum(turns.data(), turns.size(), &re, &im);

  GaussSumResult out;
  out.value = cplx(re, im);
  out.magnitude = std::abs(out.value);
  out.coprime = (g == 1);
  out.power_saving = out.magnitude / std::pow(static_cast<double>(q), 1.0 - 1.0 / k);
  DSL_REQUIRE(out.magnitude <= static_cast<double>(q) * (1.0 + 1e-12) + 1e-9, errc::precondition,
              "gauss_sum: magnitude exceeds the trivial bound; phase kernel is broken");
  out.hua_ok = !out.coprime || out.power_saving <= hua_constant * (1.0 + 1e-9);
  return out;
}

// ---------------------------------------------------------------------------
// Oscillatory integrals

namespace {

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1]. Nodes with odd index are
// the embedded Gauss-7 nodes; index 7 is the center.
constexpr double kNode[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691, 0.7415311855993945,
    0.5860872354676911, 0.4058451513773972, 0.2077849550078985, 0.0};
constexpr double kWeightK[8] = {
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502, 0.1406532597155259,
    0.1690047266392679, 0.1903505780647854, 0.2044329400752989, 0.2094821410847278};
constexpr double kWeightG[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189, 0.4179591836734694};

cplx eval_phase_point(const std::vector<double>& beta, double x) {
  double p = 0.0;
  for (std::size_t j = beta.size(); j-- > 0;) p = p * x + beta[j];
  p *= x;  // the phase polynomial has no constant term
  double ang = 2.0 * M_PI * p;
  return cplx(std::cos(ang), std::sin(ang));
}

struct PanelEstimate {
  cplx k15;
  double err;
};

PanelEstimate gk_panel(const std::vector<double>& beta, double lo, double hi) {
  double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  cplx s15 = kWeightK[7] * eval_phase_point(beta, c);
  cplx s7 = kWeightG[3] * eval_phase_point(beta, c);
  for (int i = 0; i < 7; ++i) {
    cplx pair = eval_phase_point(beta, c + h * kNode[i]) + eval_phase_point(beta, c - h * kNode[i]);
    s15 += kWeightK[i] * pair;
    if (i % 2 == 1) s7 += kWeightG[i / 2] * pair;
  }
  s15 *= h;
  s7 *= h;
  return PanelEstimate{s15, std::abs(s15 - s7)};
}

double phase_turns(const std::vector<double>& beta, double N) {
  double omega = 0.0, pw = 1.0;
  for (double b : beta) {
    pw *= N;
    omega += std::abs(b) * pw;
  }
  return omega;
}

}  // namespace

OscillatoryIntegral oscillatory_integral(const std::vector<double>& beta, double N,
                                         double tol_scale, double vdc_constant) {
  int k = static_cast<int>(beta.size());
  DSL_REQUIRE(k >= 1 && k <= 16, errc::invalid_argument, "oscillatory_integral: k out of range");
  DSL_REQUIRE(N > 0 && std::isfinite(N), errc::invalid_argument,
              "oscillatory_integral: length must be positive and finite");
  for (double b : beta)
    DSL_REQUIRE(std::isfinite(b), errc::invalid_argument,
                "oscillatory_integral: coefficients must be finite");
  DSL_REQUIRE(tol_scale > 0, errc::invalid_argument, "oscillatory_integral: bad tolerance");

  double omega = phase_turns(beta, N);
  DSL_REQUIRE(omega <= 1e9, errc::resource_limit,
              "oscillatory_integral: phase oscillates too fast for quadrature");
  double tol = tol_scale * N;

  // Seed panels so that each holds a bounded number of turns, then refine
  // panels whose Gauss/Kronrod discrepancy exceeds their share of tol.
  std::int64_t first = std::clamp<std::int64_t>(
      static_cast<std::int64_t>(std::ceil(4.0 * omega)), 1, 65536);
  std::vector<std::pair<double, double>> work;
  work.reserve(static_cast<std::size_t>(first));
  for (std::int64_t i = first; i-- > 0;) {
    double lo = N * static_cast<double>(i) / static_cast<double>(first);
    double hi = N * static_cast<double>(i + 1) / static_cast<double>(first);
    work.emplace_back(lo, hi);
  }

  constexpr std::int64_t kPanelBudget = std::int64_t{1} << 20;
  cplx total = 0.0;
  double err_total = 0.0;
  std::int64_t accepted = 0, evaluated = 0;
  while (!work.empty()) {
    auto [lo, hi] = work.back();
    work.pop_back();
    PanelEstimate pe = gk_panel(beta, lo, hi);
    ++evaluated;
    if (pe.err <= tol * (hi - lo) / N || (hi - lo) <= 1e-15 * N) {
      total += pe.k15;
      err_total += pe.err;
      ++accepted;
      continue;
    }
    if (evaluated >= kPanelBudget) {
      // Fold the unfinished panels into a best estimate before giving up.
      cplx best = total + pe.k15;
      for (auto [l2, h2] : work) best += gk_panel(beta, l2, h2).k15;
      char msg[160];
      std::snprintf(msg, sizeof msg,
                    "oscillatory_integral: refinement budget exhausted; best estimate "
                    "(%.9g, %.9g)",
                    best.real(), best.imag());
      fail(errc::resource_limit, msg);
    }
    double mid = 0.5 * (lo + hi);
    work.emplace_back(lo, mid);
    work.emplace_back(mid, hi);
  }

  OscillatoryIntegral out;
  out.value = total;
  out.error_bound = err_total;
  out.panels = accepted;
  out.decay_ratio = std::abs(total) * std::pow(1.0 + omega, 1.0 / k) / N;
  out.decay_ok = out.decay_ratio <= vdc_constant;
  return out;
}

namespace {

cplx simpson_rec(const std::vector<double>& beta, double lo, double hi, cplx flo, cplx fmid,
                 cplx fhi, cplx whole, double tol, int depth) {
  double mid = 0.5 * (lo + hi);
  cplx fl = eval_phase_point(beta, 0.5 * (lo + mid));
  cplx fr = eval_phase_point(beta, 0.5 * (mid + hi));
  cplx left = (mid - lo) / 6.0 * (flo + 4.0 * fl + fmid);
  cplx right = (hi - mid) / 6.0 * (fmid + 4.0 * fr + fhi);
  cplx both = left + right;
  if (depth <= 0 || std::abs(both - whole) <= 15.0 * tol) return both + (both - whole) / 15.0;
  return simpson_rec(beta, lo, mid, flo, fl, fmid, left, tol / 2.0, depth - 1) +
         simpson_rec(beta, mid, hi, fmid, fr, fhi, right, tol / 2.0, depth - 1);
}

}  // namespace

cplx oscillatory_integral_simpson(const std::vector<double>& beta, double N, double tol) {
  DSL_REQUIRE(!beta.empty() && beta.size() <= 16, errc::invalid_argument,
              "oscillatory_integral_simpson: k out of range");
  DSL_REQUIRE(N > 0 && std::isfinite(N), errc::invalid_argument,
              "oscillatory_integral_simpson: length must be positive and finite");
  double omega = phase_turns(beta, N);
  DSL_REQUIRE(omega <= 1e9, errc::resource_limit,
              "oscillatory_integral_simpson: phase oscillates too fast for quadrature");
  std::int64_t first = std::clamp<std::int64_t>(
      static_cast<std::int64_t>(std::ceil(8.0 * omega)), 1, 65536);
  cplx total = 0.0;
  for (std::int64_t i = 0; i < first; ++i) {
    double lo = N * static_cast<double>(i) / static_cast<double>(first);
    double hi = N * static_cast<double>(i + 1) / static_cast<double>(first);
    double mid = 0.5 * (lo + hi);
    cplx flo = eval_phase_point(beta, lo);
    cplx fmid = eval_phase_point(beta, mid);
    cplx fhi = eval_phase_point(beta, hi);
    cplx whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    total += simpson_rec(beta, lo, hi, flo, fmid, fhi, whole,
                         tol / static_cast<double>(first), 40);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Weyl inequality report

WeylRatioResult weyl_inequality_ratio(const std::vector<BigRat>& alpha, std::int64_t a,
                                      std::int64_t q, std::int64_t N, double eps_exp) {
  int k = static_cast<int>(alpha.size());
  DSL_REQUIRE(k >= 1 && k <= 16, errc::invalid_argument, "weyl_inequality_ratio: k out of range");
  DSL_REQUIRE(q >= 1, errc::invalid_argument, "weyl_inequality_ratio: modulus must be positive");
  DSL_REQUIRE(N >= 1, errc::invalid_argument, "weyl_inequality_ratio: window must be positive");
  DSL_REQUIRE(eps_exp >= 0, errc::invalid_argument, "weyl_inequality_ratio: negative exponent");
  std::int64_t ar = a % q;
  if (ar < 0) ar += q;
  DSL_REQUIRE(std::gcd(ar, q) == 1, errc::precondition,
              "weyl_inequality_ratio: numerator and modulus must be coprime");
  BigRat gap = alpha[static_cast<std::size_t>(k - 1)] - BigRat(BigInt(a), BigInt(q));
  if (gap < 0) gap = -gap;
  DSL_REQUIRE(gap * q * q <= 1, errc::precondition,
              "weyl_inequality_ratio: leading frequency is not a close rational approximation");

  WeylRatioResult out;
  out.lhs = std::abs(fourier::weyl_sum(alpha, N, BigRat(1)));
  double nk = std::pow(static_cast<double>(N), static_cast<double>(k));
  double base = 1.0 / static_cast<double>(q) + 1.0 / static_cast<double>(N) +
                static_cast<double>(q) / nk;
  out.rhs = std::pow(static_cast<double>(N), 1.0 + eps_exp) *
            std::pow(base, std::ldexp(1.0, 1 - k));
  out.ratio = out.lhs / out.rhs;
  return out;
}

// ---------------------------------------------------------------------------
// Arc estimate sweeps

MinorArcSweep verify_minor_estimate(const BigRat& eta, std::int64_t M, std::int64_t trials,
                                    std::uint64_t seed, const LabConstants& consts) {
  consts.validate();
  int k = consts.k;
  DSL_REQUIRE(M >= 1, errc::invalid_argument, "verify_minor_estimate: bad window scale");
  DSL_REQUIRE(trials >= 1 && trials <= (std::int64_t{1} << 24), errc::invalid_argument,
              "verify_minor_estimate: trials out of range");
  std::int64_t D = to_i64(floor_rat(consts.eps * M));
  DSL_REQUIRE(D >= 1, errc::precondition, "verify_minor_estimate: empty curve window");
  double eta_d = rat_to_double(eta);

  // 40-bit dyadic rationals are exact both as BigRat (for classification)
  // and as double (for the phase kernel), so the two views never disagree.
  std::mt19937_64 rng(seed);
  const BigInt two40 = BigInt(1) << 40;
  MinorArcSweep out;
  out.trials = trials;
  out.seed = seed;
  double c_flag = rat_to_double(consts.C);
  std::vector<BigRat> alpha(static_cast<std::size_t>(k));
  std::vector<double> alpha_d(static_cast<std::size_t>(k));
  for (std::int64_t t = 0; t < trials; ++t) {
    for (int j = 0; j < k; ++j) {
      std::uint64_t u = rng() >> 24;
      alpha[static_cast<std::size_t>(j)] = BigRat(BigInt(u), two40);
      alpha_d[static_cast<std::size_t>(j)] = std::ldexp(static_cast<double>(u), -40);
    }
    if (classify_frequency(alpha, eta, M).major) continue;
    ++out.minor_samples;
    double w = std::abs(fourier::weyl_sum(alpha_d, M, consts.eps));
    double ratio = w / (eta_d * static_cast<double>(D));
    out.max_ratio = std::max(out.max_ratio, ratio);
    if (ratio > c_flag) ++out.flagged;
  }
  return out;
}

MajorArcSweep verify_major_estimate(std::int64_t q, const BigRat& eta, std::int64_t M,
                                    const LabConstants& consts, std::int64_t max_samples) {
  consts.validate();
  int k = consts.k;
  DSL_REQUIRE(M >= 1, errc::invalid_argument, "verify_major_estimate: bad window scale");
  DSL_REQUIRE(max_samples >= 1, errc::invalid_argument, "verify_major_estimate: bad sample cap");
  BigRat inv = inverse_eta_pow(eta, k);
  DSL_REQUIRE(q >= 1 && BigRat(q) <= inv, errc::precondition,
              "verify_major_estimate: modulus exceeds the box resolution floor(eta^-k)");
  std::int64_t D = to_i64(floor_rat(consts.eps * M));
  DSL_REQUIRE(D >= 1, errc::precondition, "verify_major_estimate: empty curve window");

  // The embedding torus supplies the frequency lattice xi_j / T_j. Only the
  // axis lengths are used; no cell array is built, so skip the cell budget.
  fourier::EmbeddingGroup g =
      fourier::EmbeddingGroup::for_box(k, M, eta, std::int64_t{1} << 62);

  // Per-axis, per-numerator lists of lattice frequencies inside the box.
  // Axis contents depend only on the numerator, so build them per (j, a_j).
  std::vector<std::vector<std::vector<BigRat>>> per_axis(static_cast<std::size_t>(k));
  {
    BigInt mj = 1;
    for (int j = 0; j < k; ++j) {
      mj *= M;
      BigRat hwj = inv / BigRat(mj);
      std::int64_t T = g.T[static_cast<std::size_t>(j)];
      auto& lists = per_axis[static_cast<std::size_t>(j)];
      lists.resize(static_cast<std::size_t>(q));
      for (std::int64_t aj = 1; aj <= q; ++aj) {
        BigRat center{BigInt(aj), BigInt(q)};
        BigInt lo = ceil_rat((center - hwj) * T);
        BigInt hi = floor_rat((center + hwj) * T);
        if (hi - lo + 1 >= T) {
          lo = 0;
          hi = T - 1;
        }
        auto& lst = lists[static_cast<std::size_t>(aj - 1)];
        for (BigInt xi = lo; xi <= hi; ++xi) lst.emplace_back(BigRat(xi, BigInt(T)));
      }
    }
  }

  // Walk coprime centers a in [1, q]^k and the lattice points around each.
  MajorArcSweep out;
  out.q = q;
  std::vector<std::int64_t> a(static_cast<std::size_t>(k), 1);
  std::vector<BigRat> alpha(static_cast<std::size_t>(k));
  std::int64_t visited = 0;

  // First pass counts points so the stride keeps the sweep under the cap.
  BigInt combos = 0;
  {
    std::fill(a.begin(), a.end(), 1);
    for (;;) {
      std::int64_t gg = q;
      for (std::int64_t aj : a) gg = std::gcd(gg, aj % q);
      if (gg == 1) {
        BigInt c = 1;
        for (int j = 0; j < k; ++j)
          c *= static_cast<std::int64_t>(
              per_axis[static_cast<std::size_t>(j)][static_cast<std::size_t>(a[static_cast<std::size_t>(j)] - 1)]
                  .size());
        combos += c;
      }
      int j = 0;
      while (j < k && ++a[static_cast<std::size_t>(j)] > q) {
        a[static_cast<std::size_t>(j)] = 1;
        ++j;
      }
      if (j == k) break;
    }
  }
  DSL_REQUIRE(combos > 0, errc::precondition, "verify_major_estimate: boxes hold no lattice points");
  std::int64_t stride = combos > max_samples ? to_i64((combos + max_samples - 1) / max_samples) : 1;

  std::fill(a.begin(), a.end(), 1);
  for (;;) {
    std::int64_t gg = q;
    for (std::int64_t aj : a) gg = std::gcd(gg, aj % q);
    if (gg == 1) {
      // Odometer over the per-axis lattice lists for this center.
      std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
      std::vector<const std::vector<BigRat>*> lists(static_cast<std::size_t>(k));
      for (int j = 0; j < k; ++j)
        lists[static_cast<std::size_t>(j)] =
            &per_axis[static_cast<std::size_t>(j)]
                     [static_cast<std::size_t>(a[static_cast<std::size_t>(j)] - 1)];
      for (;;) {
        if (visited % stride == 0) {
          double fac = 1.0;
          for (int j = 0; j < k; ++j) {
            alpha[static_cast<std::size_t>(j)] =
                (*lists[static_cast<std::size_t>(j)])[idx[static_cast<std::size_t>(j)]];
            BigRat center(BigInt(a[static_cast<std::size_t>(j)]), BigInt(q));
            double dist = rat_to_double(torus_dist(alpha[static_cast<std::size_t>(j)], center));
            fac += std::pow(static_cast<double>(D), j + 1) * dist;
          }
          double w = std::abs(fourier::weyl_sum(alpha, M, consts.eps));
          double plain =
              w * std::pow(static_cast<double>(q), 1.0 / k) / static_cast<double>(D);
          out.max_ratio = std::max(out.max_ratio, plain);
          out.max_refined_ratio =
              std::max(out.max_refined_ratio, plain * std::pow(fac, -1.0 / k));
          ++out.samples;
        }
        ++visited;
        int j = 0;
        while (j < k && ++idx[static_cast<std::size_t>(j)] ==
                            lists[static_cast<std::size_t>(j)]->size()) {
          idx[static_cast<std::size_t>(j)] = 0;
          ++j;
        }
        if (j == k) break;
      }
    }
    int j = 0;
    while (j < k && ++a[static_cast<std::size_t>(j)] > q) {
      a[static_cast<std::size_t>(j)] = 1;
      ++j;
    }
    if (j == k) break;
  }
  return out;
}

}  // namespace dsl::arcs
