#include "diffsetlab/io.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dsl::io {

namespace {

using nlohmann::json;

std::int64_t parse_i64(const std::string& tok, const std::string& what) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(tok, &pos);
    DSL_REQUIRE(pos == tok.size(), errc::invalid_argument, what + ": bad integer '" + tok + "'");
    return static_cast<std::int64_t>(v);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(errc::invalid_argument, what + ": bad integer '" + tok + "'");
  }
}

}  // namespace

// --- PointSet files ---------------------------------------------------------

PointSet read_point_set(std::istream& in, const std::string& origin) {
  std::string line;
  // Header: first nonblank line.
  int k = 0;
  std::int64_t scale = 0;
  std::string mode;
  bool have_header = false;
  std::vector<std::int64_t> flat;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // blank
    if (!have_header) {
      k = static_cast<int>(parse_i64(tok, origin + " header k"));
      std::string mtok, stok;
      DSL_REQUIRE(ls >> stok >> mtok, errc::invalid_argument,
                  origin + ": header must be 'k M mode'");
      scale = parse_i64(stok, origin + " header M");
      mode = mtok;
      DSL_REQUIRE(mode == "box" || mode == "signed", errc::invalid_argument,
                  origin + ": mode must be 'box' or 'signed', got '" + mode + "'");
      std::string extra;
      DSL_REQUIRE(!(ls >> extra), errc::invalid_argument, origin + ": trailing header tokens");
      have_header = true;
      continue;
    }
    flat.push_back(parse_i64(tok, origin + ":" + std::to_string(lineno)));
    for (int j = 1; j < k; ++j) {
      std::string ctok;
      DSL_REQUIRE(ls >> ctok, errc::invalid_argument,
                  origin + ":" + std::to_string(lineno) + ": expected " + std::to_string(k) +
                      " coordinates");
      flat.push_back(parse_i64(ctok, origin + ":" + std::to_string(lineno)));
    }
    std::string extra;
    DSL_REQUIRE(!(ls >> extra), errc::invalid_argument,
                origin + ":" + std::to_string(lineno) + ": too many coordinates");
  }
  DSL_REQUIRE(have_header, errc::invalid_argument, origin + ": empty point set file");
  Box box = (mode == "box") ? Box::aniso(k, scale) : Box::signed_cube(k, scale);
  return PointSet(box, std::move(flat));
}

PointSet read_point_set_file(const std::string& path) {
  std::ifstream in(path);
  DSL_REQUIRE(in.good(), errc::invalid_argument, "cannot open point set file: " + path);
  return read_point_set(in, path);
}

void write_point_set(const PointSet& ps, std::ostream& out) {
  const Box& box = ps.box();
  out << box.k() << ' ' << box.scale() << ' '
      << (box.mode() == BoxMode::box ? "box" : "signed") << '\n';
  for (std::int64_t i = 0; i < ps.size(); ++i) {
    const std::int64_t* p = ps.point(i);
    for (int j = 0; j < box.k(); ++j) out << (j ? " " : "") << p[j];
    out << '\n';
  }
}

void write_point_set_file(const PointSet& ps, const std::string& path) {
  std::ofstream out(path);
  DSL_REQUIRE(out.good(), errc::invalid_argument, "cannot write point set file: " + path);
  write_point_set(ps, out);
  out.flush();
  DSL_REQUIRE(out.good(), errc::resource_limit, "write failed: " + path);
}

// --- Polynomial families ----------------------------------------------------

namespace {

struct RowAccum {
  // exponent -> coefficient; exponents start at 1.
  std::vector<std::int64_t> coeff;
  void add(int exp, std::int64_t c) {
    if (static_cast<int>(coeff.size()) < exp) coeff.resize(exp, 0);
    coeff[exp - 1] += c;
  }
};

// One row: term (('+'|'-') term)*, term = [int]['*']'d'['^'int].
RowAccum parse_row(const std::string& row, const std::string& what) {
  RowAccum acc;
  std::size_t i = 0;
  auto skip_ws = [&] { while (i < row.size() && std::isspace(static_cast<unsigned char>(row[i]))) ++i; };
  auto read_int = [&](bool allow_sign) -> std::int64_t {
    skip_ws();
    std::size_t start = i;
    if (allow_sign && i < row.size() && (row[i] == '+' || row[i] == '-')) ++i;
    while (i < row.size() && std::isdigit(static_cast<unsigned char>(row[i]))) ++i;
    DSL_REQUIRE(i > start && std::isdigit(static_cast<unsigned char>(row[i - 1])),
                errc::invalid_argument, what + ": expected integer at '" + row.substr(start) + "'");
    return parse_i64(row.substr(start, i - start), what);
  };
  bool first = true;
  bool saw_term = false;
  while (true) {
    skip_ws();
    if (i >= row.size()) break;
    std::int64_t sign = 1;
    if (row[i] == '+' || row[i] == '-') {
      sign = (row[i] == '-') ? -1 : 1;
      ++i;
      skip_ws();
    } else {
      DSL_REQUIRE(first, errc::invalid_argument, what + ": expected '+' or '-' before term");
    }
    first = false;
    // Optional coefficient.
    std::int64_t c = 1;
    bool have_coeff = false;
    if (i < row.size() && std::isdigit(static_cast<unsigned char>(row[i]))) {
      c = read_int(false);
      have_coeff = true;
      skip_ws();
      if (i < row.size() && row[i] == '*') {
        ++i;
        skip_ws();
      }
    }
    if (i < row.size() && (row[i] == 'd' || row[i] == 'D')) {
      ++i;
      int exp = 1;
      skip_ws();
      if (i < row.size() && row[i] == '^') {
        ++i;
        std::int64_t e = read_int(false);
        DSL_REQUIRE(e >= 1 && e <= 64, errc::invalid_argument,
                    what + ": exponent out of range: " + std::to_string(e));
        exp = static_cast<int>(e);
      }
      acc.add(exp, sign * c);
      saw_term = true;
    } else {
      DSL_REQUIRE(have_coeff, errc::invalid_argument, what + ": expected term near '" + row.substr(i) + "'");
      fail(errc::invalid_argument, what + ": constant term '" + std::to_string(sign * c) +
                                       "' not allowed (polynomials must vanish at 0)");
    }
  }
  DSL_REQUIRE(saw_term, errc::invalid_argument, what + ": empty polynomial");
  return acc;
}

}  // namespace

PolynomialFamily parse_polynomial(const std::string& expr) {
  std::vector<RowAccum> rows;
  std::size_t start = 0;
  while (start <= expr.size()) {
    std::size_t comma = expr.find(',', start);
    std::string row = expr.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    rows.push_back(parse_row(row, "polynomial '" + row + "'"));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  int k = 0;
  for (const RowAccum& r : rows) k = std::max(k, static_cast<int>(r.coeff.size()));
  std::vector<std::int64_t> coeffs;
  coeffs.reserve(rows.size() * static_cast<std::size_t>(k));
  for (const RowAccum& r : rows) {
    for (int j = 0; j < k; ++j)
      coeffs.push_back(j < static_cast<int>(r.coeff.size()) ? r.coeff[j] : 0);
  }
  return PolynomialFamily(static_cast<int>(rows.size()), k, std::move(coeffs));
}

std::string polynomial_to_string(const PolynomialFamily& fam) {
  std::string out;
  for (int i = 0; i < fam.rows(); ++i) {
    if (i) out += ", ";
    bool first = true;
    for (int j = 0; j < fam.degree_columns(); ++j) {
      std::int64_t c = fam.coeff(i, j);
      if (c == 0) continue;
      if (first) {
        if (c < 0) out += "-";
      } else {
        out += (c < 0) ? " - " : " + ";
      }
      std::int64_t a = c < 0 ? -c : c;
      if (a != 1) {
        out += std::to_string(a);
        out += "*";
      }
      out += "d";
      if (j != 0) {
        out += "^";
        out += std::to_string(j + 1);
      }
      first = false;
    }
    if (first) out += "0";  // unreachable for valid families; keeps output total
  }
  return out;
}

std::string family_to_json(const PolynomialFamily& fam) {
  json j;
  j["ell"] = fam.rows();
  j["k"] = fam.degree_columns();
  json rows = json::array();
  for (int i = 0; i < fam.rows(); ++i) {
    json row = json::array();
    for (int c = 0; c < fam.degree_columns(); ++c) row.push_back(std::to_string(fam.coeff(i, c)));
    rows.push_back(std::move(row));
  }
  j["coeffs"] = std::move(rows);
  return j.dump();
}

PolynomialFamily family_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(errc::invalid_argument, std::string("polynomial JSON: ") + e.what());
  }
  DSL_REQUIRE(j.contains("ell") && j.contains("k") && j.contains("coeffs"),
              errc::invalid_argument, "polynomial JSON: need fields ell, k, coeffs");
  int ell = j["ell"].get<int>();
  int k = j["k"].get<int>();
  DSL_REQUIRE(j["coeffs"].is_array() && static_cast<int>(j["coeffs"].size()) == ell,
              errc::invalid_argument, "polynomial JSON: coeffs must have ell rows");
  std::vector<std::int64_t> coeffs;
  for (const auto& row : j["coeffs"]) {
    DSL_REQUIRE(row.is_array() && static_cast<int>(row.size()) == k, errc::invalid_argument,
                "polynomial JSON: each row needs k entries");
    for (const auto& v : row)
      coeffs.push_back(parse_i64(v.get<std::string>(), "polynomial JSON coeff"));
  }
  return PolynomialFamily(ell, k, std::move(coeffs));
}

// --- Grid specs -------------------------------------------------------------

std::string grid_to_json(const GridSpec& g) {
  json j;
  j["k"] = g.k;
  json base = json::array();
  for (std::int64_t b : g.base) base.push_back(std::to_string(b));
  j["base"] = std::move(base);
  j["q"] = std::to_string(g.q);
  j["L"] = std::to_string(g.L);
  j["sign"] = g.sign;
  return j.dump();
}

GridSpec grid_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(errc::invalid_argument, std::string("grid JSON: ") + e.what());
  }
  for (const char* field : {"k", "base", "q", "L", "sign"})
    DSL_REQUIRE(j.contains(field), errc::invalid_argument,
                std::string("grid JSON: missing field ") + field);
  GridSpec g;
  g.k = j["k"].get<int>();
  for (const auto& v : j["base"]) g.base.push_back(parse_i64(v.get<std::string>(), "grid base"));
  g.q = parse_i64(j["q"].get<std::string>(), "grid q");
  g.L = parse_i64(j["L"].get<std::string>(), "grid L");
  g.sign = j["sign"].get<int>();
  g.validate();
  return g;
}

// --- Provenance -------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::string_view data) {
  static const char* digits = "0123456789abcdef";
  std::uint64_t h = fnv1a64(data);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

// --- Fixtures ---------------------------------------------------------------

std::string fixtures_dir() {
  const char* env = std::getenv("DIFFSETLAB_FIXTURES");
  return env != nullptr ? std::string(env) : std::string();
}

std::string fixture_path(const std::string& name) {
  std::string dir = fixtures_dir();
  DSL_REQUIRE(!dir.empty(), errc::precondition,
              "DIFFSETLAB_FIXTURES is not set; cannot locate fixture " + name);
  std::filesystem::path p = std::filesystem::path(dir) / name;
  DSL_REQUIRE(std::filesystem::exists(p), errc::precondition, "missing fixture: " + p.string());
  return p.string();
}

}  // namespace dsl::io
