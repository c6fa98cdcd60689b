// diffsetlab: experiment runner over the library modules. Every verb prints
// one JSON record to stdout (provenance: config hash, version, seed; plus
// wall-clock runtime) and writes its artifact files under --out. Artifact
// files never contain wall-clock data, so identical (config, seed) reruns
// are byte-identical.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "diffsetlab/arcs.hpp"
#include "diffsetlab/core.hpp"
#include "diffsetlab/diffset.hpp"
#include "diffsetlab/experiment.hpp"
#include "diffsetlab/fourier.hpp"
#include "diffsetlab/increment.hpp"
#include "diffsetlab/io.hpp"
#include "diffsetlab/lifting.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dsl;

namespace {

struct Opts {
  std::string set, set2, poly, out = ".";
  std::string eps, eta, sigma, c_lab, C_lab;
  std::string alpha, beta, a_str, ks = "2,3", Ns = "100,1000";
  std::string kind;
  std::int64_t M = 0, N = 0, q = 0, q_max = 0, trials = 16, bins = 32;
  std::uint64_t seed = 1, budget = 50'000'000;
  int k = 2, threads = 1, max_steps = 64, samples = 8;
  double eps_exp = 0.1, hua_c = 4.0, vdc_c = 8.0, bound_C = 1.0;
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::int64_t> parse_i64_list(const std::string& s) {
  std::vector<std::int64_t> out;
  for (const std::string& part : split_commas(s)) {
    DSL_REQUIRE(!part.empty(), errc::invalid_argument, "empty entry in integer list");
    out.push_back(to_i64(floor_rat(experiment::parse_rational(part))));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (std::int64_t v : parse_i64_list(s)) out.push_back(static_cast<int>(v));
  return out;
}

std::vector<BigRat> parse_rat_list(const std::string& s) {
  std::vector<BigRat> out;
  for (const std::string& part : split_commas(s)) out.push_back(experiment::parse_rational(part));
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const std::string& part : split_commas(s)) out.push_back(std::stod(part));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  DSL_REQUIRE(in.good(), errc::invalid_argument, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PointSet load_set(const std::string& path, std::string* hash_out) {
  std::string content = read_file(path);
  if (hash_out) *hash_out = io::hash_hex(content);
  std::istringstream in(content);
  return io::read_point_set(in, path);
}

std::string write_artifact(const std::string& out_dir, const std::string& name,
                           const std::string& content) {
  fs::create_directories(out_dir);
  fs::path p = fs::path(out_dir) / name;
  std::ofstream f(p, std::ios::binary);
  DSL_REQUIRE(f.good(), errc::invalid_argument, "cannot write " + p.string());
  f << content;
  return p.string();
}

LabConstants make_consts(const Opts& o, int k) {
  LabConstants c = LabConstants::defaults(k);
  if (!o.eps.empty()) c.eps = experiment::parse_rational(o.eps);
  if (!o.eta.empty()) c.eta_override = experiment::parse_rational(o.eta);
  if (!o.sigma.empty()) c.sigma_override = experiment::parse_rational(o.sigma);
  if (!o.c_lab.empty()) c.c = experiment::parse_rational(o.c_lab);
  if (!o.C_lab.empty()) c.C = experiment::parse_rational(o.C_lab);
  c.hua_constant = o.hua_c;
  c.vdc_constant = o.vdc_c;
  return c;
}

using Params = std::vector<std::pair<std::string, std::string>>;

json make_record(const std::string& verb, const Params& params, std::uint64_t seed) {
  json rec;
  rec["verb"] = verb;
  rec["version"] = io::kVersion;
  rec["config_hash"] = experiment::config_hash(params);
  rec["seed"] = seed;
  json p = json::object();
  for (const auto& [key, value] : params) p[key] = value;
  rec["params"] = p;
  return rec;
}

const char* kind_str(increment::DichotomyKind k) {
  switch (k) {
    case increment::DichotomyKind::random_like: return "random";
    case increment::DichotomyKind::structured: return "structured";
    default: return "undecided";
  }
}

const char* reason_str(increment::StopReason r) {
  switch (r) {
    case increment::StopReason::witness_found: return "witness_found";
    case increment::StopReason::size_floor: return "size_floor";
    case increment::StopReason::step_limit: return "step_limit";
    default: return "undecided";
  }
}

json grid_json(const GridSpec& g) { return json::parse(io::grid_to_json(g)); }

json increment_json(const increment::IncrementGrid& ig) {
  json j;
  j["grid"] = grid_json(ig.grid);
  j["count"] = ig.count.str();
  j["density"] = experiment::rational_string(ig.density);
  j["required"] = experiment::rational_string(ig.required);
  j["meets_length_target"] = ig.meets_length_target;
  return j;
}

json mass_report_json(const increment::MajorMassReport& rep) {
  json rows = json::array();
  for (const increment::MajorMassRow& r : rep.rows)
    rows.push_back({{"q", r.q}, {"lattice_points", r.lattice_points}, {"mass", r.mass}});
  return json{{"rows", rows},
              {"total", rep.total},
              {"best_q", rep.best_q},
              {"best_mass", rep.best_mass}};
}

// --- verb handlers ----------------------------------------------------------

json do_count(const Opts& o) {
  std::string set_hash;
  PointSet B = load_set(o.set, &set_hash);
  BigRat eps = o.eps.empty() ? BigRat(1) : experiment::parse_rational(o.eps);
  BigInt count = diffset::count_monomial_differences(B, eps);
  json rec = make_record("count", {{"set_hash", set_hash},
                                   {"eps", experiment::rational_string(eps)}},
                         o.seed);
  rec["result"] = {{"count", count.str()},
                   {"k", B.k()},
                   {"M", B.box().scale()},
                   {"size", B.size()},
                   {"density", experiment::rational_string(B.density())}};
  return rec;
}

json do_witness(const Opts& o) {
  std::string set_hash;
  PointSet B = load_set(o.set, &set_hash);
  Params params = {{"set_hash", set_hash}};
  json result;
  if (!o.poly.empty()) {
    DSL_REQUIRE(B.k() == 1, errc::invalid_argument,
                "polynomial witnesses need a 1-dimensional set");
    PolynomialFamily P = io::parse_polynomial(o.poly);
    params.push_back({"poly", io::polynomial_to_string(P)});
    std::vector<std::int64_t> A(B.flat());
    auto w = diffset::has_polynomial_configuration(A, P);
    result["found"] = w.has_value();
    if (w) {
      result["d"] = w->d;
      json pairs = json::array();
      for (auto& [x, y] : w->pairs) pairs.push_back({x, y});
      result["pairs"] = pairs;
    }
  } else {
    auto d = diffset::has_monomial_difference(B);
    result["found"] = d.has_value();
    if (d) {
      result["d"] = *d;
      auto pr = diffset::find_monomial_difference_at(B, *d);
      DSL_REQUIRE(pr.has_value(), errc::precondition, "witness recheck failed");
      result["pair"] = {pr->first, pr->second};
    }
  }
  json rec = make_record("witness", params, o.seed);
  rec["result"] = result;
  return rec;
}

json do_greedy(const Opts& o) {
  DSL_REQUIRE(o.N >= 1, errc::invalid_argument, "--N is required and must be >= 1");
  PolynomialFamily P = io::parse_polynomial(o.poly.empty() ? "d^2" : o.poly);
  std::vector<std::int64_t> g = diffset::greedy_free_set(o.N, P);
  json rec = make_record("greedy", {{"N", std::to_string(o.N)},
                                    {"poly", io::polynomial_to_string(P)}},
                         o.seed);
  rec["result"] = {{"size", g.size()}, {"elements", g}};
  return rec;
}

json do_exact_max(const Opts& o) {
  DSL_REQUIRE(o.N >= 1, errc::invalid_argument, "--N is required and must be >= 1");
  PolynomialFamily P = io::parse_polynomial(o.poly.empty() ? "d^2" : o.poly);
  diffset::ExactMaxResult r = diffset::max_free_set_exact(o.N, P, o.budget);
  json rec = make_record("exact-max", {{"N", std::to_string(o.N)},
                                       {"budget", std::to_string(o.budget)},
                                       {"poly", io::polynomial_to_string(P)}},
                         o.seed);
  rec["result"] = {{"size", r.size},
                   {"witness", r.witness},
                   {"exact", r.exact},
                   {"nodes", r.nodes}};
  return rec;
}

json do_spectrum(const Opts& o) {
  std::string set_hash;
  PointSet B = load_set(o.set, &set_hash);
  DSL_REQUIRE(B.box().mode() == BoxMode::box, errc::invalid_argument,
              "spectra are computed over anisotropic boxes");
  std::optional<BigRat> eta;
  if (!o.eta.empty()) eta = experiment::parse_rational(o.eta);
  fourier::EmbeddingGroup g = fourier::EmbeddingGroup::for_box(B.k(), B.box().scale(), eta);
  fourier::BalanceFunction bf = fourier::balance_function(B, g);
  fourier::Spectrum sp = fourier::dft(bf.fn);
  fs::create_directories(o.out);
  auto paths = fourier::write_spectrum(sp, (fs::path(o.out) / "spectrum").string());
  std::string hist_csv = "upper_edge,count\n";
  for (auto& [edge, cnt] : fourier::magnitude_histogram(sp, static_cast<int>(o.bins)))
    hist_csv += experiment::format_double(edge) + "," + std::to_string(cnt) + "\n";
  std::string hist_path = write_artifact(o.out, "spectrum_hist.csv", hist_csv);
  json rec = make_record("spectrum",
                         {{"set_hash", set_hash},
                          {"eta", eta ? experiment::rational_string(*eta) : ""},
                          {"bins", std::to_string(o.bins)}},
                         o.seed);
  json tj = json::array();
  for (std::int64_t t : g.T) tj.push_back(t);
  rec["result"] = {{"binary", paths.first},
                   {"sidecar", paths.second},
                   {"histogram", hist_path},
                   {"T", tj},
                   {"cells", g.cells()},
                   {"l2_exact", experiment::rational_string(bf.l2_norm_exact())}};
  return rec;
}

json do_classify(const Opts& o) {
  DSL_REQUIRE(!o.alpha.empty(), errc::invalid_argument, "--alpha is required");
  DSL_REQUIRE(!o.eta.empty(), errc::invalid_argument, "--eta is required");
  DSL_REQUIRE(o.M >= 1, errc::invalid_argument, "--M is required and must be >= 1");
  std::vector<BigRat> alpha = parse_rat_list(o.alpha);
  BigRat eta = experiment::parse_rational(o.eta);
  arcs::Classification cls = arcs::classify_frequency(alpha, eta, o.M);
  json rec = make_record("classify", {{"alpha", o.alpha},
                                      {"eta", experiment::rational_string(eta)},
                                      {"M", std::to_string(o.M)}},
                         o.seed);
  rec["result"] = {{"major", cls.major}, {"q", cls.q}, {"a", cls.a}};
  return rec;
}

json do_gauss(const Opts& o) {
  if (o.q >= 1) {
    DSL_REQUIRE(!o.a_str.empty(), errc::invalid_argument, "--a is required with --q");
    std::vector<std::int64_t> a = parse_i64_list(o.a_str);
    arcs::GaussSumResult r = arcs::gauss_sum(a, o.q, o.hua_c);
    json rec = make_record("gauss", {{"a", o.a_str},
                                     {"q", std::to_string(o.q)},
                                     {"hua_constant", experiment::format_double(o.hua_c)}},
                           o.seed);
    rec["result"] = {{"re", r.value.real()},       {"im", r.value.imag()},
                     {"magnitude", r.magnitude},    {"coprime", r.coprime},
                     {"power_saving", r.power_saving}, {"hua_ok", r.hua_ok}};
    return rec;
  }
  std::int64_t q_max = o.q_max >= 1 ? o.q_max : 100;
  std::vector<int> ks = parse_int_list(o.ks);
  std::string csv = experiment::hua_table_csv(q_max, ks, o.samples, o.seed, o.hua_c);
  std::string path = write_artifact(o.out, "hua_table.csv", csv);
  json rec = make_record("gauss", {{"hua_constant", experiment::format_double(o.hua_c)},
                                   {"ks", o.ks},
                                   {"q_max", std::to_string(q_max)},
                                   {"samples", std::to_string(o.samples)},
                                   {"seed", std::to_string(o.seed)}},
                         o.seed);
  rec["result"] = {{"table", path}, {"table_hash", io::hash_hex(csv)}};
  return rec;
}

json do_vint(const Opts& o) {
  DSL_REQUIRE(o.N >= 1, errc::invalid_argument, "--N is required and must be >= 1");
  if (!o.beta.empty()) {
    std::vector<double> beta = parse_double_list(o.beta);
    arcs::OscillatoryIntegral r =
        arcs::oscillatory_integral(beta, static_cast<double>(o.N), 1e-8, o.vdc_c);
    fourier::cplx s = arcs::oscillatory_integral_simpson(beta, static_cast<double>(o.N));
    json rec = make_record("vint", {{"N", std::to_string(o.N)}, {"beta", o.beta}}, o.seed);
    rec["result"] = {{"re", r.value.real()},
                     {"im", r.value.imag()},
                     {"error_bound", r.error_bound},
                     {"panels", r.panels},
                     {"decay_ratio", r.decay_ratio},
                     {"decay_ok", r.decay_ok},
                     {"simpson_re", s.real()},
                     {"simpson_im", s.imag()},
                     {"cross_delta", std::abs(r.value - s)}};
    return rec;
  }
  std::string csv = experiment::vint_table_csv(o.k, o.N, static_cast<int>(o.trials),
                                               o.seed, o.vdc_c);
  std::string path = write_artifact(o.out, "vint_table.csv", csv);
  json rec = make_record("vint", {{"N", std::to_string(o.N)},
                                  {"k", std::to_string(o.k)},
                                  {"seed", std::to_string(o.seed)},
                                  {"trials", std::to_string(o.trials)},
                                  {"vdc_constant", experiment::format_double(o.vdc_c)}},
                         o.seed);
  rec["result"] = {{"table", path}, {"table_hash", io::hash_hex(csv)}};
  return rec;
}

json do_sweep_minor(const Opts& o) {
  DSL_REQUIRE(!o.eta.empty(), errc::invalid_argument, "--eta is required");
  DSL_REQUIRE(o.M >= 1, errc::invalid_argument, "--M is required and must be >= 1");
  BigRat eta = experiment::parse_rational(o.eta);
  LabConstants consts = make_consts(o, o.k);
  arcs::MinorArcSweep rep = arcs::verify_minor_estimate(eta, o.M, o.trials, o.seed, consts);
  std::string csv = experiment::minor_sweep_csv({o.k}, {o.M}, eta, o.trials, o.seed);
  std::string path = write_artifact(o.out, "minor_sweep.csv", csv);
  json rec = make_record("sweep-minor", {{"M", std::to_string(o.M)},
                                         {"eta", experiment::rational_string(eta)},
                                         {"k", std::to_string(o.k)},
                                         {"seed", std::to_string(o.seed)},
                                         {"trials", std::to_string(o.trials)}},
                         o.seed);
  rec["result"] = {{"trials", rep.trials},
                   {"minor_samples", rep.minor_samples},
                   {"max_ratio", rep.max_ratio},
                   {"flagged", rep.flagged},
                   {"table", path},
                   {"table_hash", io::hash_hex(csv)}};
  return rec;
}

json do_sweep_major(const Opts& o) {
  DSL_REQUIRE(!o.eta.empty(), errc::invalid_argument, "--eta is required");
  DSL_REQUIRE(o.M >= 1, errc::invalid_argument, "--M is required and must be >= 1");
  BigRat eta = experiment::parse_rational(o.eta);
  LabConstants consts = make_consts(o, o.k);
  if (o.q >= 1) {
    arcs::MajorArcSweep rep = arcs::verify_major_estimate(o.q, eta, o.M, consts);
    json rec = make_record("sweep-major", {{"M", std::to_string(o.M)},
                                           {"eta", experiment::rational_string(eta)},
                                           {"k", std::to_string(o.k)},
                                           {"q", std::to_string(o.q)}},
                           o.seed);
    rec["result"] = {{"q", rep.q},
                     {"samples", rep.samples},
                     {"max_ratio", rep.max_ratio},
                     {"max_refined_ratio", rep.max_refined_ratio}};
    return rec;
  }
  std::int64_t q_max = o.q_max >= 1 ? o.q_max : 4;
  std::string csv = experiment::major_sweep_csv(o.k, o.M, eta, q_max);
  std::string path = write_artifact(o.out, "major_sweep.csv", csv);
  json rec = make_record("sweep-major", {{"M", std::to_string(o.M)},
                                         {"eta", experiment::rational_string(eta)},
                                         {"k", std::to_string(o.k)},
                                         {"q_max", std::to_string(q_max)}},
                         o.seed);
  rec["result"] = {{"table", path}, {"table_hash", io::hash_hex(csv)}};
  return rec;
}

json do_weyl_ratio(const Opts& o) {
  std::vector<std::int64_t> Ns = parse_i64_list(o.Ns);
  std::string csv = experiment::weyl_ratio_table_csv(Ns, o.k, o.eps_exp,
                                                     static_cast<int>(o.trials), o.seed);
  std::string path = write_artifact(o.out, "weyl_ratio.csv", csv);
  json rec = make_record("weyl-ratio", {{"Ns", o.Ns},
                                        {"eps_exp", experiment::format_double(o.eps_exp)},
                                        {"k", std::to_string(o.k)},
                                        {"seed", std::to_string(o.seed)},
                                        {"trials", std::to_string(o.trials)}},
                         o.seed);
  rec["result"] = {{"table", path}, {"table_hash", io::hash_hex(csv)}};
  return rec;
}

json do_dichotomy(const Opts& o) {
  std::string set_hash;
  PointSet B = load_set(o.set, &set_hash);
  LabConstants consts = make_consts(o, B.k());
  increment::DichotomyResult dr = increment::dichotomy(B, consts);
  json rec = make_record("dichotomy", {{"set_hash", set_hash}}, o.seed);
  json result;
  result["kind"] = kind_str(dr.kind);
  result["count"] = dr.count.str();
  result["threshold"] = experiment::rational_string(dr.threshold);
  if (dr.increment) result["increment"] = increment_json(*dr.increment);
  if (dr.diagnostics) result["diagnostics"] = mass_report_json(*dr.diagnostics);
  rec["result"] = result;
  return rec;
}

json do_iterate(const Opts& o) {
  std::string set_hash;
  PointSet B = load_set(o.set, &set_hash);
  LabConstants consts = make_consts(o, B.k());
  increment::IterationResult ir = increment::iterate(B, consts, o.max_steps);
  std::string trace;
  for (const increment::IterationStep& st : ir.steps) {
    json line;
    line["n"] = st.step;
    line["M"] = st.M;
    line["size"] = st.size.str();
    line["delta"] = experiment::rational_string(st.delta);
    line["outcome"] = kind_str(st.outcome);
    line["count"] = st.count.str();
    line["threshold"] = experiment::rational_string(st.threshold);
    if (st.witness_d) line["witness_d"] = *st.witness_d;
    if (st.grid) {
      line["grid"] = grid_json(*st.grid);
      line["density_next"] = experiment::rational_string(st.density_next);
      line["m_ratio_ok"] = st.m_ratio_ok;
      line["delta_ratio_ok"] = st.delta_ratio_ok;
    }
    trace += line.dump();
    trace += '\n';
  }
  std::string path = write_artifact(o.out, "trace.jsonl", trace);
  json rec = make_record("iterate", {{"max_steps", std::to_string(o.max_steps)},
                                     {"set_hash", set_hash}},
                         o.seed);
  rec["result"] = {{"reason", reason_str(ir.reason)},
                   {"steps", ir.steps.size()},
                   {"final_M", ir.final_M},
                   {"final_delta", experiment::rational_string(ir.final_delta)},
                   {"trace", path}};
  return rec;
}

json do_l2table(const Opts& o) {
  std::string set_hash;
  PointSet B = load_set(o.set, &set_hash);
  LabConstants consts = make_consts(o, B.k());
  std::int64_t q_max = o.q_max >= 1 ? o.q_max : 8;
  increment::MajorMassReport rep = increment::l2_mass_on_major_boxes(B, q_max, consts);
  json rec = make_record("l2table", {{"q_max", std::to_string(q_max)},
                                     {"set_hash", set_hash}},
                         o.seed);
  rec["result"] = mass_report_json(rep);
  return rec;
}

json do_bound(const Opts& o) {
  DSL_REQUIRE(o.M >= 1, errc::invalid_argument, "--M is required and must be >= 1");
  increment::BoundReport br = increment::bound_calculator(o.M, o.k, o.bound_C);
  json rec = make_record("bound", {{"C", experiment::format_double(o.bound_C)},
                                   {"M", std::to_string(o.M)},
                                   {"k", std::to_string(o.k)}},
                         o.seed);
  rec["result"] = {{"delta_star", br.delta_star},
                   {"closed_form", br.closed_form},
                   {"ratio", br.ratio}};
  return rec;
}

json do_lift(const Opts& o) {
  std::string set_hash;
  PointSet A = load_set(o.set, &set_hash);
  DSL_REQUIRE(A.k() == 1, errc::invalid_argument, "lifting needs a 1-dimensional set");
  DSL_REQUIRE(!o.poly.empty(), errc::invalid_argument, "--poly is required");
  PolynomialFamily P = io::parse_polynomial(o.poly);
  std::optional<std::int64_t> N;
  if (o.N >= 1) N = o.N;
  lifting::LiftResult lr = lifting::build_lifted_set(A.flat(), P, N);
  fs::create_directories(o.out);
  std::string pts_path = (fs::path(o.out) / "lifted.pts").string();
  io::write_point_set_file(lr.B, pts_path);
  json rec = make_record("lift", {{"N", N ? std::to_string(*N) : ""},
                                  {"poly", io::polynomial_to_string(P)},
                                  {"set_hash", set_hash}},
                         o.seed);
  rec["result"] = {{"N_prime", lr.N_prime},
                   {"m", lr.m},
                   {"size", lr.B.size()},
                   {"rank", lr.decomp.r},
                   {"row_selection", lr.decomp.row_selection},
                   {"stage_count", lr.stage_count.str()},
                   {"dependent_scan_total", lr.dependent_scan_total.str()},
                   {"certificate", "exhaustive"},
                   {"lifted", pts_path}};
  return rec;
}

json do_sumset_reduce(const Opts& o) {
  std::string hash_a, hash_b;
  PointSet A = load_set(o.set, &hash_a);
  PointSet Bs = load_set(o.set2, &hash_b);
  DSL_REQUIRE(A.k() == 1 && Bs.k() == 1, errc::invalid_argument,
              "sumset reduction needs 1-dimensional sets");
  std::optional<std::int64_t> N;
  if (o.N >= 1) N = o.N;
  lifting::SumsetReduction sr = lifting::sumset_reduce(A.flat(), Bs.flat(), N);
  json rec = make_record("sumset-reduce", {{"N", N ? std::to_string(*N) : ""},
                                           {"set2_hash", hash_b},
                                           {"set_hash", hash_a}},
                         o.seed);
  rec["result"] = {{"m", sr.m},
                   {"D_size", sr.D.size()},
                   {"D", sr.D},
                   {"lower_bound", experiment::rational_string(sr.lower_bound)},
                   {"pair_total", sr.pair_total.str()}};
  return rec;
}

json do_extremal(const Opts& o) {
  DSL_REQUIRE(o.N >= 1, errc::invalid_argument, "--N is required and must be >= 1");
  PolynomialFamily P = io::parse_polynomial(o.poly.empty() ? "d^2" : o.poly);
  std::string csv = experiment::extremal_table_csv(o.N, P, o.bound_C);
  std::string path = write_artifact(o.out, "extremal.csv", csv);
  json rec = make_record("extremal", {{"C", experiment::format_double(o.bound_C)},
                                      {"N", std::to_string(o.N)},
                                      {"poly", io::polynomial_to_string(P)}},
                         o.seed);
  rec["result"] = {{"table", path}, {"table_hash", io::hash_hex(csv)}};
  return rec;
}

json dispatch_kind(const Opts& o) {
  if (o.kind == "count") return do_count(o);
  if (o.kind == "dichotomy") return do_dichotomy(o);
  if (o.kind == "iterate") return do_iterate(o);
  if (o.kind == "sweep-minor") return do_sweep_minor(o);
  if (o.kind == "sweep-major") return do_sweep_major(o);
  if (o.kind == "lift") return do_lift(o);
  if (o.kind == "extremal") return do_extremal(o);
  if (o.kind == "bound") return do_bound(o);
  fail(errc::invalid_argument, "unknown experiment kind: " + o.kind);
}

json do_run(const Opts& o) {
  json rec = dispatch_kind(o);
  fs::create_directories(o.out);
  fs::path p = fs::path(o.out) / "results.jsonl";
  std::ofstream f(p, std::ios::binary | std::ios::app);
  DSL_REQUIRE(f.good(), errc::invalid_argument, "cannot write " + p.string());
  f << rec.dump() << '\n';
  rec["artifact"] = p.string();
  return rec;
}

}  // namespace

int main(int argc, char** argv) {
  Opts o;
  CLI::App app{"computational laboratory for difference-set configurations"};
  app.require_subcommand(1);
  std::function<json()> run_fn;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "RNG seed recorded in outputs");
    sub->add_option("--trials", o.trials, "sample count for sweeps")->check(CLI::Range(1, 1 << 20));
    sub->add_option("--threads", o.threads, "worker pool bound (tables are computed serially)")
        ->check(CLI::Range(1, 256));
    sub->add_option("--out", o.out, "artifact output directory (default: .)");
    return sub;
  };
  auto add_consts = [&](CLI::App* sub) {
    sub->add_option("--eps", o.eps, "window fraction, rational p/q");
    sub->add_option("--eta", o.eta, "resolution parameter override, rational");
    sub->add_option("--sigma", o.sigma, "structure threshold override, rational");
    sub->add_option("--c-lab", o.c_lab, "small constant knob, rational");
    sub->add_option("--C-lab", o.C_lab, "large constant knob, rational");
    return sub;
  };

  CLI::App* sc;

  sc = add_common(app.add_subcommand("count", "monomial-difference pair count of a point set"));
  sc->add_option("--set", o.set, "point set file")->required();
  sc->add_option("--eps", o.eps, "window fraction, rational (default 1)");
  sc->callback([&] { run_fn = [&] { return do_count(o); }; });

  sc = add_common(app.add_subcommand("witness", "least difference witness"));
  sc->add_option("--set", o.set, "point set file")->required();
  sc->add_option("--poly", o.poly, "polynomial family (1-dimensional sets)");
  sc->callback([&] { run_fn = [&] { return do_witness(o); }; });

  sc = add_common(app.add_subcommand("greedy", "greedy configuration-free subset of [1,N]"));
  sc->add_option("--N", o.N, "interval endpoint")->required();
  sc->add_option("--poly", o.poly, "polynomial family (default d^2)");
  sc->callback([&] { run_fn = [&] { return do_greedy(o); }; });

  sc = add_common(app.add_subcommand("exact-max", "exact maximum configuration-free subset"));
  sc->add_option("--N", o.N, "interval endpoint")->required();
  sc->add_option("--poly", o.poly, "polynomial family (default d^2)");
  sc->add_option("--budget", o.budget, "branch and bound node budget");
  sc->callback([&] { run_fn = [&] { return do_exact_max(o); }; });

  sc = add_common(app.add_subcommand("spectrum", "balance-function spectrum export"));
  sc->add_option("--set", o.set, "point set file")->required();
  sc->add_option("--eta", o.eta, "resolution parameter, rational");
  sc->add_option("--bins", o.bins, "histogram bins")->check(CLI::Range(1, 4096));
  sc->callback([&] { run_fn = [&] { return do_spectrum(o); }; });

  sc = add_common(app.add_subcommand("classify", "major/minor classification of a frequency"));
  sc->add_option("--alpha", o.alpha, "comma-separated rational frequency vector")->required();
  sc->add_option("--eta", o.eta, "resolution parameter, rational")->required();
  sc->add_option("--M", o.M, "box scale")->required();
  sc->callback([&] { run_fn = [&] { return do_classify(o); }; });

  sc = add_common(app.add_subcommand("gauss", "complete exponential sums and the power-saving table"));
  sc->add_option("--q", o.q, "single modulus (with --a)");
  sc->add_option("--a", o.a_str, "comma-separated numerator tuple");
  sc->add_option("--q-max", o.q_max, "table mode: moduli 1..q_max");
  sc->add_option("--ks", o.ks, "table mode: degrees, comma-separated (default 2,3)");
  sc->add_option("--samples", o.samples, "table mode: sampled tuples per modulus")->check(CLI::Range(0, 64));
  sc->add_option("--hua-c", o.hua_c, "power-saving constant to report against");
  sc->callback([&] { run_fn = [&] { return do_gauss(o); }; });

  sc = add_common(app.add_subcommand("vint", "oscillatory integral and its decay table"));
  sc->add_option("--N", o.N, "integration endpoint")->required();
  sc->add_option("--beta", o.beta, "comma-separated coefficients (single evaluation)");
  sc->add_option("--k", o.k, "degree (table mode)")->check(CLI::Range(2, 8));
  sc->add_option("--vdc-c", o.vdc_c, "decay constant to report against");
  sc->callback([&] { run_fn = [&] { return do_vint(o); }; });

  sc = add_consts(add_common(app.add_subcommand("sweep-minor", "minor-frequency empirical constants")));
  sc->add_option("--M", o.M, "box scale")->required();
  sc->add_option("--k", o.k, "degree")->check(CLI::Range(2, 8));
  sc->callback([&] { run_fn = [&] { return do_sweep_minor(o); }; });

  sc = add_consts(add_common(app.add_subcommand("sweep-major", "major-box empirical constants")));
  sc->add_option("--M", o.M, "box scale")->required();
  sc->add_option("--k", o.k, "degree")->check(CLI::Range(2, 8));
  sc->add_option("--q", o.q, "single modulus");
  sc->add_option("--q-max", o.q_max, "table mode: moduli 1..q_max");
  sc->callback([&] { run_fn = [&] { return do_sweep_major(o); }; });

  sc = add_common(app.add_subcommand("weyl-ratio", "direct Weyl sums against the inequality envelope"));
  sc->add_option("--Ns", o.Ns, "comma-separated endpoints (default 100,1000)");
  sc->add_option("--k", o.k, "degree")->check(CLI::Range(2, 8));
  sc->add_option("--eps-exp", o.eps_exp, "epsilon exponent in the envelope");
  sc->callback([&] { run_fn = [&] { return do_weyl_ratio(o); }; });

  sc = add_consts(add_common(app.add_subcommand("dichotomy", "random/structured dichotomy of a point set")));
  sc->add_option("--set", o.set, "point set file")->required();
  sc->callback([&] { run_fn = [&] { return do_dichotomy(o); }; });

  sc = add_consts(add_common(app.add_subcommand("iterate", "density increment iteration")));
  sc->add_option("--set", o.set, "point set file")->required();
  sc->add_option("--max-steps", o.max_steps, "iteration cap")->check(CLI::Range(1, 4096));
  sc->callback([&] { run_fn = [&] { return do_iterate(o); }; });

  sc = add_consts(add_common(app.add_subcommand("l2table", "spectral mass per modulus")));
  sc->add_option("--set", o.set, "point set file")->required();
  sc->add_option("--q-max", o.q_max, "moduli 1..q_max (default 8)");
  sc->callback([&] { run_fn = [&] { return do_l2table(o); }; });

  sc = add_common(app.add_subcommand("bound", "density floor where the increment stalls"));
  sc->add_option("--M", o.M, "scale")->required();
  sc->add_option("--k", o.k, "degree")->check(CLI::Range(2, 16));
  sc->add_option("--bound-C", o.bound_C, "ceiling constant");
  sc->callback([&] { run_fn = [&] { return do_bound(o); }; });

  sc = add_common(app.add_subcommand("lift", "lift a 1-dimensional set through a polynomial family"));
  sc->add_option("--set", o.set, "point set file (1-dimensional)")->required();
  sc->add_option("--poly", o.poly, "polynomial family")->required();
  sc->add_option("--N", o.N, "universe bound (default: max of the set)");
  sc->callback([&] { run_fn = [&] { return do_lift(o); }; });

  sc = add_common(app.add_subcommand("sumset-reduce", "best difference slice of two sets"));
  sc->add_option("--set", o.set, "first point set file")->required();
  sc->add_option("--set2", o.set2, "second point set file")->required();
  sc->add_option("--N", o.N, "universe bound (default: max of both sets)");
  sc->callback([&] { run_fn = [&] { return do_sumset_reduce(o); }; });

  sc = add_common(app.add_subcommand("extremal", "exact/greedy extremal table over [1,N]"));
  sc->add_option("--N", o.N, "table endpoint")->required();
  sc->add_option("--poly", o.poly, "polynomial family (default d^2)");
  sc->add_option("--bound-C", o.bound_C, "ceiling constant for the reference column");
  sc->callback([&] { run_fn = [&] { return do_extremal(o); }; });

  sc = add_consts(add_common(app.add_subcommand("run", "config-driven experiment with JSONL results")));
  sc->add_option("kind", o.kind, "count|dichotomy|iterate|sweep-minor|sweep-major|lift|extremal|bound")
      ->required();
  sc->add_option("--set", o.set, "point set file");
  sc->add_option("--poly", o.poly, "polynomial family");
  sc->add_option("--M", o.M, "box scale");
  sc->add_option("--N", o.N, "interval endpoint / universe bound");
  sc->add_option("--k", o.k, "degree")->check(CLI::Range(2, 16));
  sc->add_option("--q", o.q, "modulus");
  sc->add_option("--q-max", o.q_max, "modulus cap");
  sc->add_option("--max-steps", o.max_steps, "iteration cap")->check(CLI::Range(1, 4096));
  sc->add_option("--bound-C", o.bound_C, "ceiling constant");
  sc->callback([&] { run_fn = [&] { return do_run(o); }; });

  try {
    app.parse(argc, argv);
    DSL_REQUIRE(static_cast<bool>(run_fn), errc::invalid_argument, "no verb selected");
    auto t0 = std::chrono::steady_clock::now();
    json rec = run_fn();
    auto t1 = std::chrono::steady_clock::now();
    rec["runtime_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    std::cout << rec.dump() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
