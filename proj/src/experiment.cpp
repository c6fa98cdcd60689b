#include "diffsetlab/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>

#include "diffsetlab/arcs.hpp"
#include "diffsetlab/diffset.hpp"
#include "diffsetlab/io.hpp"

namespace dsl::experiment {
namespace {

using std::int64_t;
using std::uint64_t;

constexpr char kTableHeader[] = "k,M_or_N,q,eta,quantity,empirical_constant,seed\n";

struct TableRow {
  int k;
  int64_t scale;
  int64_t q;
  double eta;
  double quantity;
  uint64_t seed;
};

// Two-pass emission: the empirical_constant column repeats the table maximum.
std::string emit_table(const std::vector<TableRow>& rows) {
  double emp = 0.0;
  for (const TableRow& r : rows) emp = std::max(emp, r.quantity);
  std::string out = kTableHeader;
  for (const TableRow& r : rows) {
    out += std::to_string(r.k);
    out += ',';
    out += std::to_string(r.scale);
    out += ',';
    out += std::to_string(r.q);
    out += ',';
    out += format_double(r.eta);
    out += ',';
    out += format_double(r.quantity);
    out += ',';
    out += format_double(emp);
    out += ',';
    out += std::to_string(r.seed);
    out += '\n';
  }
  return out;
}

// Uniform dyadic rational u / 2^40 from the generator's high bits; exactly
// representable as a double, so rational and floating views agree.
uint64_t draw_dyadic(std::mt19937_64& rng) { return rng() >> 24; }

int64_t isqrt_i64(int64_t n) {
  int64_t r = static_cast<int64_t>(std::llround(std::sqrt(static_cast<double>(n))));
  while (r > 0 && r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

}  // namespace

BigRat parse_rational(const std::string& text) {
  std::string t;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  DSL_REQUIRE(!t.empty(), errc::invalid_argument, "empty rational literal");
  std::string::size_type slash = t.find('/');
  auto parse_int = [](const std::string& s) {
    DSL_REQUIRE(!s.empty(), errc::invalid_argument, "empty integer literal");
    std::string::size_type i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
    DSL_REQUIRE(i < s.size(), errc::invalid_argument, "sign without digits");
    for (; i < s.size(); ++i)
      DSL_REQUIRE(std::isdigit(static_cast<unsigned char>(s[i])), errc::invalid_argument,
                  "malformed rational literal");
    return BigInt(s);
  };
  if (slash == std::string::npos) return BigRat(parse_int(t));
  BigInt num = parse_int(t.substr(0, slash));
  BigInt den = parse_int(t.substr(slash + 1));
  DSL_REQUIRE(den != 0, errc::invalid_argument, "rational with zero denominator");
  return BigRat(num, den);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string rational_string(const BigRat& r) {
  BigInt num = boost::multiprecision::numerator(r);
  BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

std::string config_hash(const std::vector<std::pair<std::string, std::string>>& params) {
  std::vector<std::pair<std::string, std::string>> p = params;
  std::sort(p.begin(), p.end());
  std::string canon;
  for (const auto& [key, value] : p) {
    canon += key;
    canon += '=';
    canon += value;
    canon += '\n';
  }
  return io::hash_hex(canon);
}

std::string hua_table_csv(int64_t q_max, const std::vector<int>& ks, int samples_per_q,
                          uint64_t seed, double hua_constant) {
  DSL_REQUIRE(q_max >= 1, errc::invalid_argument, "q_max must be >= 1");
  DSL_REQUIRE(!ks.empty(), errc::invalid_argument, "at least one degree required");
  DSL_REQUIRE(samples_per_q >= 0 && samples_per_q <= 64, errc::invalid_argument,
              "samples_per_q out of range");
  std::mt19937_64 rng(seed);
  std::vector<TableRow> rows;
  for (int k : ks) {
    DSL_REQUIRE(k >= 2 && k <= 16, errc::invalid_argument, "degree out of range");
    for (int64_t q = 1; q <= q_max; ++q) {
      std::vector<std::vector<int64_t>> tuples;
      std::vector<int64_t> a(static_cast<std::size_t>(k), 0);
      a.back() = q > 1 ? 1 : 0;  // the pure top-degree tuple; q = 1 is a single term
      tuples.push_back(a);
      tuples.push_back(std::vector<int64_t>(static_cast<std::size_t>(k), q > 1 ? 1 : 0));
      for (int s = 0; s < samples_per_q; ++s) {
        std::vector<int64_t> t(static_cast<std::size_t>(k));
        for (int attempt = 0; attempt < 64; ++attempt) {
          int64_t g = q;
          for (int j = 0; j < k; ++j) {
            t[static_cast<std::size_t>(j)] = q == 1 ? 0 : static_cast<int64_t>(rng() % static_cast<uint64_t>(q));
            g = std::gcd(g, t[static_cast<std::size_t>(j)]);
          }
          if (g == 1) break;
        }
        tuples.push_back(t);
      }
      double best = 0.0;
      for (const std::vector<int64_t>& tup : tuples) {
        arcs::GaussSumResult r = arcs::gauss_sum(tup, q, hua_constant);
        if (r.coprime) best = std::max(best, r.power_saving);
      }
      rows.push_back({k, 0, q, 0.0, best, seed});
    }
  }
  return emit_table(rows);
}

std::string weyl_ratio_table_csv(const std::vector<int64_t>& Ns, int k, double eps_exp,
                                 int trials, uint64_t seed) {
  DSL_REQUIRE(!Ns.empty(), errc::invalid_argument, "at least one N required");
  DSL_REQUIRE(k >= 2 && k <= 8, errc::invalid_argument, "degree out of range");
  DSL_REQUIRE(trials >= 1 && trials <= 4096, errc::invalid_argument, "trials out of range");
  std::mt19937_64 rng(seed);
  std::vector<TableRow> rows;
  for (int64_t N : Ns) {
    DSL_REQUIRE(N >= 2, errc::invalid_argument, "N must be >= 2");
    int64_t q_cap = std::max<int64_t>(1, isqrt_i64(N));
    for (int t = 0; t < trials; ++t) {
      int64_t q = 1 + static_cast<int64_t>(rng() % static_cast<uint64_t>(q_cap));
      int64_t a = 1;
      for (int attempt = 0; attempt < 64; ++attempt) {
        a = 1 + static_cast<int64_t>(rng() % static_cast<uint64_t>(q));
        if (std::gcd(a, q) == 1) break;
      }
      std::vector<BigRat> alpha(static_cast<std::size_t>(k));
      for (int j = 0; j + 1 < k; ++j)
        alpha[static_cast<std::size_t>(j)] = BigRat(BigInt(draw_dyadic(rng)), BigInt(uint64_t{1} << 40));
      alpha[static_cast<std::size_t>(k - 1)] = BigRat(a, q);
      arcs::WeylRatioResult r = arcs::weyl_inequality_ratio(alpha, a, q, N, eps_exp);
      rows.push_back({k, N, q, 0.0, r.ratio, seed});
    }
  }
  return emit_table(rows);
}

std::string minor_sweep_csv(const std::vector<int>& ks, const std::vector<int64_t>& Ms,
                            const BigRat& eta, int64_t trials, uint64_t seed) {
  DSL_REQUIRE(!ks.empty() && !Ms.empty(), errc::invalid_argument,
              "degree and scale lists must be nonempty");
  std::vector<TableRow> rows;
  for (int k : ks) {
    LabConstants consts = LabConstants::defaults(k);
    for (int64_t M : Ms) {
      arcs::MinorArcSweep rep = arcs::verify_minor_estimate(eta, M, trials, seed, consts);
      rows.push_back({k, M, 0, rat_to_double(eta), rep.max_ratio, seed});
    }
  }
  return emit_table(rows);
}

std::string major_sweep_csv(int k, int64_t M, const BigRat& eta, int64_t q_max) {
  DSL_REQUIRE(q_max >= 1, errc::invalid_argument, "q_max must be >= 1");
  LabConstants consts = LabConstants::defaults(k);
  std::vector<TableRow> rows;
  for (int64_t q = 1; q <= q_max; ++q) {
    arcs::MajorArcSweep rep = arcs::verify_major_estimate(q, eta, M, consts);
    rows.push_back({k, M, q, rat_to_double(eta), rep.max_ratio, 0});
  }
  return emit_table(rows);
}

std::string vint_table_csv(int k, int64_t N, int trials, uint64_t seed,
                           double vdc_constant) {
  DSL_REQUIRE(k >= 2 && k <= 8, errc::invalid_argument, "degree out of range");
  DSL_REQUIRE(N >= 1, errc::invalid_argument, "N must be >= 1");
  DSL_REQUIRE(trials >= 1 && trials <= 4096, errc::invalid_argument, "trials out of range");
  std::mt19937_64 rng(seed);
  std::vector<TableRow> rows;
  for (int t = 0; t < trials; ++t) {
    // Cycle the phase budget through four decades so both the flat and the
    // highly oscillatory regimes appear in every table.
    double scale = std::pow(10.0, (t % 4) - 1);
    std::vector<double> beta(static_cast<std::size_t>(k));
    for (int j = 1; j <= k; ++j) {
      double u = static_cast<double>(draw_dyadic(rng)) * std::ldexp(1.0, -40);  // [0,1)
      beta[static_cast<std::size_t>(j - 1)] =
          (2.0 * u - 1.0) * scale / std::pow(static_cast<double>(N), j);
    }
    arcs::OscillatoryIntegral r = arcs::oscillatory_integral(
        beta, static_cast<double>(N), 1e-8, vdc_constant);
    rows.push_back({k, N, 0, 0.0, r.decay_ratio, seed});
  }
  return emit_table(rows);
}

std::string extremal_table_csv(int64_t N_max, const PolynomialFamily& P, double bound_C) {
  DSL_REQUIRE(N_max >= 1 && N_max <= 200, errc::invalid_argument, "N_max out of range");
  std::string out = "N_prime,exact_max,greedy,density_bound\n";
  for (int64_t n = 1; n <= N_max; ++n) {
    diffset::ExactMaxResult ex = diffset::max_free_set_exact(n, P);
    DSL_REQUIRE(ex.exact, errc::resource_limit,
                "branch and bound budget exhausted; table would not be exact");
    std::vector<int64_t> gr = diffset::greedy_free_set(n, P);
    double bound = n >= 16 ? diffset::density_upper_bound(n, P, bound_C)
                           : std::nan("");
    out += std::to_string(n);
    out += ',';
    out += std::to_string(ex.size);
    out += ',';
    out += std::to_string(static_cast<int64_t>(gr.size()));
    out += ',';
    out += format_double(bound);
    out += '\n';
  }
  return out;
}

}  // namespace dsl::experiment
