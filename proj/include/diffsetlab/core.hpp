#ifndef DIFFSETLAB_CORE_HPP
#define DIFFSETLAB_CORE_HPP

// Exact geometry and bookkeeping types shared by every module: anisotropic
// boxes [1,M] x [1,M^2] x ... x [1,M^k], lattice point sets with exact
// rational densities, arithmetic grids m + sign*(l_1 q, l_2 q^2, ..., l_k q^k),
// integer polynomial families with zero constant term, and the tunable
// constants (eps, eta, sigma, ...) that the experiments share.
//
// Cardinalities, coordinates and volumes are exact integers; densities and
// thresholds are exact rationals. Floating point is confined to the spectral
// and quadrature layers.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/cpp_int/literals.hpp>

namespace dsl {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Errors. Codes map onto the CLI exit codes (usage=2, precondition=3,
// resource limit=4); library code throws, main() translates.

enum class errc {
  invalid_argument = 2,
  precondition = 3,
  resource_limit = 4,
};

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw Error(code, msg); }

#define DSL_REQUIRE(cond, code, msg) \
  do {                               \
    if (!(cond)) ::dsl::fail((code), (msg)); \
  } while (0)

// ---------------------------------------------------------------------------
// Small exact helpers.

// base^exp as BigInt, exp >= 0.
BigInt pow_big(BigInt base, unsigned exp);

// base^exp as int64, throwing on overflow. base may be negative.
std::int64_t pow_i64_checked(std::int64_t base, unsigned exp);

// r^exp for rationals, exp >= 0.
BigRat pow_rat(const BigRat& r, unsigned exp);

BigInt floor_rat(const BigRat& r);
BigInt ceil_rat(const BigRat& r);

// BigInt -> int64, throwing if out of range.
std::int64_t to_i64(const BigInt& v);

// Smallest power of two >= v (v >= 1).
std::int64_t next_pow2(std::int64_t v);

double rat_to_double(const BigRat& r);

// ---------------------------------------------------------------------------
// Boxes. Mode "box" is the anisotropic box [1,M] x [1,M^2] x ... x [1,M^k];
// mode "signed" is the cube [-H,H]^k used by the lifting construction. The
// `scale` field stores M resp. H.

enum class BoxMode { box, signed_cube };

class Box {
 public:
  Box() = default;
  Box(BoxMode mode, int k, std::int64_t scale);

  static Box aniso(int k, std::int64_t M) { return Box(BoxMode::box, k, M); }
  static Box signed_cube(int k, std::int64_t H) { return Box(BoxMode::signed_cube, k, H); }

  BoxMode mode() const { return mode_; }
  int k() const { return k_; }
  std::int64_t scale() const { return scale_; }

  std::int64_t lo(int j) const;      // inclusive, axis j in [0,k)
  std::int64_t hi(int j) const;      // inclusive
  std::int64_t extent(int j) const { return hi(j) - lo(j) + 1; }
  BigInt volume() const;

  bool contains(const std::int64_t* p) const;
  bool operator==(const Box& o) const = default;

 private:
  BoxMode mode_ = BoxMode::box;
  int k_ = 2;
  std::int64_t scale_ = 1;
  std::vector<std::int64_t> hi_;     // per-axis upper bound (aniso: M^j)
};

// Convenience alias for the dominant case.
inline Box aniso_box(int k, std::int64_t M) { return Box::aniso(k, M); }

// ---------------------------------------------------------------------------
// PointSet: an immutable sorted set of lattice points inside a Box, with
// exact cardinality and exact rational density. Points are stored flat,
// stride k, sorted lexicographically, deduplicated.

class PointSet {
 public:
  PointSet() = default;
  PointSet(Box box, std::vector<std::int64_t> flat_points);

  const Box& box() const { return box_; }
  int k() const { return box_.k(); }
  std::int64_t size() const { return static_cast<std::int64_t>(pts_.size()) / box_.k(); }
  bool empty() const { return pts_.empty(); }

  // |B| / vol(box), exact.
  BigRat density() const;

  const std::int64_t* point(std::int64_t i) const { return pts_.data() + i * box_.k(); }
  const std::vector<std::int64_t>& flat() const { return pts_; }

  bool contains(const std::int64_t* p) const;

  // Every point of the box, in lexicographic order.
  static PointSet full(const Box& box, std::int64_t max_cells = (std::int64_t{1} << 26));

 private:
  Box box_;
  std::vector<std::int64_t> pts_;
};

// ---------------------------------------------------------------------------
// GridSpec: the arithmetic grid { base + sign*(l_1 q, l_2 q^2, ..., l_k q^k) :
// 1 <= l_j <= L^j }. Cardinality L^{k(k+1)/2}.

struct GridSpec {
  int k = 2;
  std::vector<std::int64_t> base;  // size k
  std::int64_t q = 1;              // modulus, >= 1
  std::int64_t L = 1;              // side parameter, >= 1
  int sign = +1;                   // +1 or -1

  void validate() const;
  BigInt cardinality() const;

  // Axis-j offsets run over {sign * l * q^j : 1 <= l <= L^j}.
  std::int64_t offset_lo(int j) const;  // smallest offset on axis j
  std::int64_t offset_hi(int j) const;  // largest offset on axis j

  bool within(const Box& box) const;    // all grid points inside box?

  // Materialize all points (lexicographic in l). Guarded by max_cells.
  std::vector<std::int64_t> enumerate(std::int64_t max_cells = (std::int64_t{1} << 26)) const;
};

// ---------------------------------------------------------------------------
// PolynomialFamily: rows are integer polynomials with zero constant term,
// P_i(d) = sum_j coeff(i,j) d^j, j = 1..k. k is the number of coefficient
// columns. Rows must be nonzero. Operations whose mathematics requires
// degree >= 2 enforce that themselves; the type admits k >= 1 so degree-1
// families remain expressible for the combinatorial searches.

class PolynomialFamily {
 public:
  PolynomialFamily() = default;
  // coeffs: ell rows, k columns, row-major; coeffs[i*k + (j-1)] multiplies d^j.
  PolynomialFamily(int ell, int k, std::vector<std::int64_t> coeffs);

  int rows() const { return ell_; }
  int degree_columns() const { return k_; }
  std::int64_t coeff(int i, int j) const { return coeffs_[i * k_ + j]; }  // j in [0,k): d^{j+1}
  const std::vector<std::int64_t>& coeffs() const { return coeffs_; }

  // Max j with a nonzero column anywhere in the family.
  int effective_degree() const;

  std::int64_t eval(int i, std::int64_t d) const;  // throws on int64 overflow

  // The pure monomial family {d, d^2, ..., d^k}.
  static PolynomialFamily monomials(int k);

  bool operator==(const PolynomialFamily& o) const = default;

 private:
  int ell_ = 0;
  int k_ = 0;
  std::vector<std::int64_t> coeffs_;
};

// ---------------------------------------------------------------------------
// MonomialCurveWindow: the truncated monomial curve
// S = {(d, d^2, ..., d^k) : 1 <= d <= floor(eps*M)}.

struct MonomialCurveWindow {
  int k = 2;
  std::int64_t M = 1;
  BigRat eps;                       // 0 < eps <= 1
  std::int64_t length() const;     // floor(eps*M); the number of curve points
  std::vector<std::int64_t> point(std::int64_t d) const;  // (d, d^2, ..., d^k)
};

// ---------------------------------------------------------------------------
// LabConstants: shared tunables. eps defaults to 1/(10k) and must stay in
// (0, 1/(10k)] unless relaxed_eps is set (counting experiments legitimately
// run the full window eps = 1). eta defaults to delta/(8*C) and sigma to
// c*delta^{k-1}; both can be pinned explicitly for calibrated runs.

struct LabConstants {
  int k = 2;
  BigRat eps;                       // monomial window fraction
  BigRat C = 1;                     // large constant knob
  BigRat c = 1;                     // small constant knob
  BigRat mu;                        // exponent nudge for the coprime box variant
  std::optional<BigRat> eta_override;
  std::optional<BigRat> sigma_override;
  double hua_constant = 2.0;        // complete-sum bound multiplier
  double vdc_constant = 8.0;        // oscillatory-decay bound multiplier

  static LabConstants defaults(int k);

  // delta/(8C), or the pinned override. Always in (0, 1].
  BigRat eta(const BigRat& delta) const;
  // c*delta^{k-1}, or the pinned override. Always > 0.
  BigRat sigma(const BigRat& delta) const;

  void validate(bool relaxed_eps = false) const;
};

}  // namespace dsl

#endif  // DIFFSETLAB_CORE_HPP
