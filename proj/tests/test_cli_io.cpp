#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "diffsetlab/core.hpp"
#include "diffsetlab/io.hpp"
#include "diffsetlab/lifting.hpp"

using namespace dsl;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("DIFFSETLAB_CLI");
  REQUIRE(p != nullptr);
  return p;
}

// Runs the binary with the given argument string; returns the exit code and
// fills `out` with stdout.
int run_cli(const std::string& args, std::string* out) {
  std::string cmd = "'" + cli_path() + "' " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string text;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) text.append(buf, n);
  int status = pclose(pipe);
  if (out != nullptr) *out = text;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string strip_runtime(std::string s) {
  static const std::regex rt(",\"runtime_ms\":\\d+");
  return std::regex_replace(s, rt, "");
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "dsl_cli_XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    REQUIRE(mkdtemp(buf.data()) != nullptr);
    path = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

const char kSet5[] = "2 4 box\n1 1\n2 1\n2 3\n3 2\n4 4\n";

}  // namespace

TEST_CASE("point set files round-trip in both box modes") {
  Box box = Box::aniso(2, 4);
  PointSet ps(box, {1, 1, 2, 3, 4, 16});
  std::ostringstream out;
  io::write_point_set(ps, out);
  std::istringstream in(out.str());
  PointSet back = io::read_point_set(in);
  CHECK(back.flat() == ps.flat());
  CHECK(back.box().k() == 2);
  CHECK(back.box().scale() == 4);

  PointSet sg(Box::signed_cube(2, 5), {-5, 5, 0, 0, 3, -2});
  std::ostringstream out2;
  io::write_point_set(sg, out2);
  std::istringstream in2(out2.str());
  PointSet back2 = io::read_point_set(in2);
  CHECK(back2.flat() == sg.flat());

  // Parse errors carry the right codes.
  std::istringstream bad_mode("2 4 cylinder\n1 1\n");
  CHECK_THROWS_AS((void)io::read_point_set(bad_mode), Error);
  std::istringstream outside("2 4 box\n9 1\n");
  try {
    (void)io::read_point_set(outside);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::precondition);
  }
}

TEST_CASE("polynomial grammar and canonical display") {
  PolynomialFamily mono = PolynomialFamily::monomials(2);
  CHECK(io::parse_polynomial("d, d^2") == mono);
  CHECK(io::polynomial_to_string(mono) == "d, d^2");

  PolynomialFamily f = io::parse_polynomial("3*d - d^2, d");
  CHECK(f.rows() == 2);
  CHECK(f.coeff(0, 0) == 3);
  CHECK(f.coeff(0, 1) == -1);
  CHECK(f.coeff(1, 0) == 1);
  CHECK(io::parse_polynomial(io::polynomial_to_string(f)) == f);

  CHECK_THROWS_AS((void)io::parse_polynomial("1 + d"), Error);  // constant term
  CHECK_THROWS_AS((void)io::parse_polynomial(""), Error);
  CHECK_THROWS_AS((void)io::parse_polynomial("d - d"), Error);  // zero row

  CHECK(io::family_from_json(io::family_to_json(f)) == f);
}

TEST_CASE("grid specs serialize with string integers") {
  GridSpec g{2, {123456789012345, -7}, 3, 4, -1};
  std::string j = io::grid_to_json(g);
  GridSpec back = io::grid_from_json(j);
  CHECK(back.k == 2);
  CHECK(back.base == g.base);
  CHECK(back.q == 3);
  CHECK(back.L == 4);
  CHECK(back.sign == -1);
  CHECK(j.find("\"123456789012345\"") != std::string::npos);
}

TEST_CASE("config hashing is the reference FNV-1a") {
  CHECK(io::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(io::hash_hex("a") == "af63dc4c8601ec8c");
  CHECK(io::hash_hex("").size() == 16);
}

TEST_CASE("fixture path resolution") {
  CHECK(!io::fixtures_dir().empty());
  CHECK(fs::exists(io::fixture_path("hua_table.csv")));
  CHECK_THROWS_AS((void)io::fixture_path("definitely_missing.csv"), Error);
}

TEST_CASE("cli: counting record is stable modulo runtime") {
  TempDir td;
  std::ofstream(td.path / "B.pts") << kSet5;
  std::string set = (td.path / "B.pts").string();

  std::string out1, out2;
  CHECK(run_cli("count --set '" + set + "'", &out1) == 0);
  CHECK(run_cli("count --set '" + set + "'", &out2) == 0);
  CHECK(out1.find("\"runtime_ms\":") != std::string::npos);
  CHECK(strip_runtime(out1) == strip_runtime(out2));
  CHECK(out1.find("\"count\":\"1\"") != std::string::npos);
  CHECK(out1.find("\"density\":\"5/64\"") != std::string::npos);
  CHECK(out1.find("\"verb\":\"count\"") != std::string::npos);
}

TEST_CASE("cli: artifacts are byte-deterministic") {
  TempDir td;
  std::ofstream(td.path / "B.pts") << kSet5;
  std::string set = (td.path / "B.pts").string();
  std::string d1 = (td.path / "s1").string();
  std::string d2 = (td.path / "s2").string();

  CHECK(run_cli("spectrum --set '" + set + "' --out '" + d1 + "'", nullptr) == 0);
  CHECK(run_cli("spectrum --set '" + set + "' --out '" + d2 + "'", nullptr) == 0);
  for (const char* name : {"spectrum.bin", "spectrum.json", "spectrum_hist.csv"})
    CHECK(slurp(td.path / "s1" / name) == slurp(td.path / "s2" / name));
}

TEST_CASE("cli: exit codes map the error taxonomy") {
  TempDir td;
  std::ofstream(td.path / "B.pts") << kSet5;
  std::ofstream(td.path / "bad.pts") << "2 4 box\n9 1\n";
  std::string set = (td.path / "B.pts").string();

  CHECK(run_cli("count --set '" + set + "'", nullptr) == 0);
  CHECK(run_cli("count --set '" + (td.path / "nope.pts").string() + "'", nullptr) == 2);
  CHECK(run_cli("count --definitely-not-a-flag", nullptr) == 2);
  CHECK(run_cli("count --set '" + (td.path / "bad.pts").string() + "'", nullptr) == 3);
  // Tiny eta blows the embedding-group cell budget.
  CHECK(run_cli("spectrum --set '" + set + "' --eta 1/128 --out '" +
                    (td.path / "x").string() + "'",
                nullptr) == 4);
}

TEST_CASE("cli: run appends runtime-free records") {
  TempDir td;
  std::ofstream(td.path / "B.pts") << kSet5;
  std::string set = (td.path / "B.pts").string();
  std::string out = (td.path / "R").string();

  CHECK(run_cli("run count --set '" + set + "' --out '" + out + "'", nullptr) == 0);
  CHECK(run_cli("run count --set '" + set + "' --out '" + out + "'", nullptr) == 0);
  std::string log = slurp(td.path / "R" / "results.jsonl");
  CHECK(log.find("runtime_ms") == std::string::npos);
  std::istringstream lines(log);
  std::string l1, l2, extra;
  REQUIRE(std::getline(lines, l1));
  REQUIRE(std::getline(lines, l2));
  CHECK(!std::getline(lines, extra));
  CHECK(l1 == l2);
}

TEST_CASE("cli: lift artifact matches the library result") {
  TempDir td;
  std::ofstream(td.path / "A.pts") << "1 7 box\n1\n2\n5\n7\n";
  std::string out = (td.path / "L").string();
  CHECK(run_cli("lift --set '" + (td.path / "A.pts").string() + "' --poly 'd, d^2' --out '" +
                    out + "'",
                nullptr) == 0);
  PointSet fromcli = io::read_point_set_file((td.path / "L" / "lifted.pts").string());
  auto lib = lifting::build_lifted_set({1, 2, 5, 7}, PolynomialFamily::monomials(2));
  CHECK(fromcli.flat() == lib.B.flat());
  CHECK(fromcli.box().scale() == 14);
}

TEST_CASE("cli: fixture tables regenerate byte for byte") {
  TempDir td;
  std::string out = (td.path / "F").string();
  CHECK(run_cli("weyl-ratio --Ns 100,1000,10000 --k 2 --eps-exp 0.1 --trials 6 "
                "--seed 20260816 --out '" + out + "'",
                nullptr) == 0);
  CHECK(slurp(td.path / "F" / "weyl_ratio.csv") ==
        slurp(io::fixture_path("weyl_ratio.csv")));

  CHECK(run_cli("extremal --N 40 --poly d^2 --bound-C 1.0 --out '" + out + "'",
                nullptr) == 0);
  CHECK(slurp(td.path / "F" / "extremal.csv") == slurp(io::fixture_path("extremal.csv")));
}
