#ifndef DIFFSETLAB_IO_HPP
#define DIFFSETLAB_IO_HPP

// Serialization and parsing: PointSet text files, polynomial families from a
// small expression grammar or JSON, grid specs as JSON, config hashing for
// output provenance, and fixture path resolution.
//
// PointSet file format: a header line "k M mode" with mode in {box, signed},
// then one point per line, k whitespace-separated integers. Blank lines are
// ignored. "signed" boxes are cubes [-M,M]^k; "box" is [1,M]x...x[1,M^k].

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "diffsetlab/core.hpp"

namespace dsl::io {

inline constexpr const char kVersion[] = "0.1.0";

// --- PointSet files ---------------------------------------------------------

PointSet read_point_set(std::istream& in, const std::string& origin = "<stream>");
PointSet read_point_set_file(const std::string& path);

void write_point_set(const PointSet& ps, std::ostream& out);
void write_point_set_file(const PointSet& ps, const std::string& path);

// --- Polynomial families ----------------------------------------------------

// Expression grammar: rows separated by ','; each row is a sum of terms
// c*d^j (coefficient and exponent optional: "d" = 1*d^1, "3*d" = 3*d^1,
// "-d^2" = -1*d^2). Constant terms are rejected so P(0) = 0 holds by
// construction. Example: "d^2, 2*d^2, d + d^2".
PolynomialFamily parse_polynomial(const std::string& expr);

// Canonical display form, parseable by parse_polynomial.
std::string polynomial_to_string(const PolynomialFamily& fam);

std::string family_to_json(const PolynomialFamily& fam);
PolynomialFamily family_from_json(const std::string& text);

// --- Grid specs -------------------------------------------------------------

// Integer fields are serialized as decimal strings so consumers never face
// precision loss on large values.
std::string grid_to_json(const GridSpec& g);
GridSpec grid_from_json(const std::string& text);

// --- Provenance -------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view data);
// 16 lowercase hex digits of fnv1a64, the config hash carried in outputs.
std::string hash_hex(std::string_view data);

// --- Fixtures ---------------------------------------------------------------

// Directory from DIFFSETLAB_FIXTURES; empty string when unset.
std::string fixtures_dir();
// fixtures_dir()/name, throwing a precondition error when the env var is
// unset or the file is absent.
std::string fixture_path(const std::string& name);

}  // namespace dsl::io

#endif  // DIFFSETLAB_IO_HPP
