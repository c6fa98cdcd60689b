#include "diffsetlab/core.hpp"

#include <algorithm>
#include <limits>

namespace dsl {

BigInt pow_big(BigInt base, unsigned exp) {
  BigInt r = 1;
  while (exp) {
    if (exp & 1u) r *= base;
    base *= base;
    exp >>= 1u;
  }
  return r;
}

std::int64_t pow_i64_checked(std::int64_t base, unsigned exp) {
  __int128 r = 1;
  const __int128 lim = std::numeric_limits<std::int64_t>::max();
  for (unsigned i = 0; i < exp; ++i) {
    r *= base;
    if (r > lim || r < -lim) fail(errc::precondition, "integer power overflows 64 bits");
  }
  return static_cast<std::int64_t>(r);
}

BigRat pow_rat(const BigRat& r, unsigned exp) {
  BigRat out = 1;
  BigRat b = r;
  while (exp) {
    if (exp & 1u) out *= b;
    b *= b;
    exp >>= 1u;
  }
  return out;
}

BigInt floor_rat(const BigRat& r) {
  BigInt n = numerator(r), d = denominator(r);  // d > 0 canonical
  BigInt q = n / d;
  if (n < 0 && q * d != n) --q;
  return q;
}

BigInt ceil_rat(const BigRat& r) {
  BigInt n = numerator(r), d = denominator(r);
  BigInt q = n / d;
  if (n > 0 && q * d != n) ++q;
  return q;
}

std::int64_t to_i64(const BigInt& v) {
  DSL_REQUIRE(v >= std::numeric_limits<std::int64_t>::min() &&
                  v <= std::numeric_limits<std::int64_t>::max(),
              errc::resource_limit, "value exceeds 64-bit range");
  return static_cast<std::int64_t>(v);
}

std::int64_t next_pow2(std::int64_t v) {
  DSL_REQUIRE(v >= 1 && v <= (std::int64_t{1} << 62), errc::precondition, "next_pow2 domain");
  std::int64_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

double rat_to_double(const BigRat& r) { return r.convert_to<double>(); }

// ---------------------------------------------------------------------------

Box::Box(BoxMode mode, int k, std::int64_t scale) : mode_(mode), k_(k), scale_(scale) {
  DSL_REQUIRE(k >= 1 && k <= 16, errc::invalid_argument, "box dimension out of range");
  DSL_REQUIRE(scale >= 1, errc::invalid_argument, "box scale must be >= 1");
  hi_.resize(k);
  if (mode_ == BoxMode::box) {
    for (int j = 0; j < k; ++j) hi_[j] = pow_i64_checked(scale, static_cast<unsigned>(j + 1));
  } else {
    for (int j = 0; j < k; ++j) hi_[j] = scale;
  }
}

std::int64_t Box::lo(int j) const { return mode_ == BoxMode::box ? 1 : -hi_[j]; }
std::int64_t Box::hi(int j) const { return hi_[j]; }

BigInt Box::volume() const {
  BigInt v = 1;
  for (int j = 0; j < k_; ++j) v *= BigInt(extent(j));
  return v;
}

bool Box::contains(const std::int64_t* p) const {
  for (int j = 0; j < k_; ++j)
    if (p[j] < lo(j) || p[j] > hi(j)) return false;
  return true;
}

// ---------------------------------------------------------------------------

namespace {

struct LexLess {
  int k;
  bool operator()(const std::int64_t* a, const std::int64_t* b) const {
    for (int j = 0; j < k; ++j) {
      if (a[j] != b[j]) return a[j] < b[j];
    }
    return false;
  }
};

}  // namespace

PointSet::PointSet(Box box, std::vector<std::int64_t> flat_points) : box_(box) {
  const int k = box_.k();
  DSL_REQUIRE(flat_points.size() % static_cast<std::size_t>(k) == 0, errc::invalid_argument,
              "flat point array length not divisible by dimension");
  const std::int64_t n = static_cast<std::int64_t>(flat_points.size()) / k;
  for (std::int64_t i = 0; i < n; ++i) {
    DSL_REQUIRE(box_.contains(flat_points.data() + i * k), errc::precondition,
                "point outside its box");
  }
  // Sort indices lexicographically, then rebuild deduplicated flat storage.
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  LexLess less{k};
  std::sort(idx.begin(), idx.end(), [&](std::int64_t a, std::int64_t b) {
    return less(flat_points.data() + a * k, flat_points.data() + b * k);
  });
  pts_.reserve(flat_points.size());
  for (std::int64_t ii = 0; ii < n; ++ii) {
    const std::int64_t* p = flat_points.data() + idx[static_cast<std::size_t>(ii)] * k;
    if (!pts_.empty()) {
      const std::int64_t* last = pts_.data() + pts_.size() - static_cast<std::size_t>(k);
      if (std::equal(p, p + k, last)) continue;
    }
    pts_.insert(pts_.end(), p, p + k);
  }
}

BigRat PointSet::density() const {
  BigInt vol = box_.volume();
  DSL_REQUIRE(vol > 0, errc::precondition, "density of empty box undefined");
  return BigRat(BigInt(size()), vol);
}

bool PointSet::contains(const std::int64_t* p) const {
  const int k = box_.k();
  std::int64_t lo = 0, hi = size() - 1;
  while (lo <= hi) {
    std::int64_t mid = lo + (hi - lo) / 2;
    const std::int64_t* m = point(mid);
    int cmp = 0;
    for (int j = 0; j < k; ++j) {
      if (m[j] != p[j]) {
        cmp = m[j] < p[j] ? -1 : 1;
        break;
      }
    }
    if (cmp == 0) return true;
    if (cmp < 0)
      lo = mid + 1;
    else
      hi = mid - 1;
  }
  return false;
}

PointSet PointSet::full(const Box& box, std::int64_t max_cells) {
  BigInt vol = box.volume();
  DSL_REQUIRE(vol <= max_cells, errc::resource_limit, "box too large to materialize");
  const int k = box.k();
  const std::int64_t n = to_i64(vol);
  std::vector<std::int64_t> flat;
  flat.reserve(static_cast<std::size_t>(n) * k);
  std::vector<std::int64_t> cur(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) cur[static_cast<std::size_t>(j)] = box.lo(j);
  for (std::int64_t i = 0; i < n; ++i) {
    flat.insert(flat.end(), cur.begin(), cur.end());
    for (int j = k - 1; j >= 0; --j) {
      if (++cur[static_cast<std::size_t>(j)] <= box.hi(j)) break;
      cur[static_cast<std::size_t>(j)] = box.lo(j);
    }
  }
  return PointSet(box, std::move(flat));
}

// ---------------------------------------------------------------------------

void GridSpec::validate() const {
  DSL_REQUIRE(k >= 1 && k <= 16, errc::invalid_argument, "grid dimension out of range");
  DSL_REQUIRE(static_cast<int>(base.size()) == k, errc::invalid_argument, "grid base size != k");
  DSL_REQUIRE(q >= 1, errc::invalid_argument, "grid modulus must be >= 1");
  DSL_REQUIRE(L >= 1, errc::invalid_argument, "grid side must be >= 1");
  DSL_REQUIRE(sign == 1 || sign == -1, errc::invalid_argument, "grid sign must be +-1");
  // All offsets must be representable.
  (void)pow_i64_checked(L, static_cast<unsigned>(k));
  for (int j = 1; j <= k; ++j) {
    __int128 off = static_cast<__int128>(pow_i64_checked(L, static_cast<unsigned>(j))) *
                   pow_i64_checked(q, static_cast<unsigned>(j));
    DSL_REQUIRE(off <= std::numeric_limits<std::int64_t>::max(), errc::precondition,
                "grid offsets overflow 64 bits");
  }
}

BigInt GridSpec::cardinality() const {
  BigInt c = 1;
  for (int j = 1; j <= k; ++j) c *= pow_big(L, static_cast<unsigned>(j));
  return c;
}

std::int64_t GridSpec::offset_lo(int j) const {
  std::int64_t qj = pow_i64_checked(q, static_cast<unsigned>(j + 1));
  std::int64_t Lj = pow_i64_checked(L, static_cast<unsigned>(j + 1));
  return sign > 0 ? qj : -Lj * qj;
}

std::int64_t GridSpec::offset_hi(int j) const {
  std::int64_t qj = pow_i64_checked(q, static_cast<unsigned>(j + 1));
  std::int64_t Lj = pow_i64_checked(L, static_cast<unsigned>(j + 1));
  return sign > 0 ? Lj * qj : -qj;
}

bool GridSpec::within(const Box& box) const {
  validate();
  DSL_REQUIRE(box.k() == k, errc::invalid_argument, "grid/box dimension mismatch");
  for (int j = 0; j < k; ++j) {
    if (base[static_cast<std::size_t>(j)] + offset_lo(j) < box.lo(j)) return false;
    if (base[static_cast<std::size_t>(j)] + offset_hi(j) > box.hi(j)) return false;
  }
  return true;
}

std::vector<std::int64_t> GridSpec::enumerate(std::int64_t max_cells) const {
  validate();
  BigInt card = cardinality();
  DSL_REQUIRE(card <= max_cells, errc::resource_limit, "grid too large to materialize");
  const std::int64_t n = to_i64(card);
  std::vector<std::int64_t> sides(static_cast<std::size_t>(k));
  std::vector<std::int64_t> steps(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    sides[static_cast<std::size_t>(j)] = pow_i64_checked(L, static_cast<unsigned>(j + 1));
    steps[static_cast<std::size_t>(j)] =
        sign * pow_i64_checked(q, static_cast<unsigned>(j + 1));
  }
  std::vector<std::int64_t> flat;
  flat.reserve(static_cast<std::size_t>(n) * k);
  std::vector<std::int64_t> l(static_cast<std::size_t>(k), 1);
  for (std::int64_t i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j)
      flat.push_back(base[static_cast<std::size_t>(j)] +
                     steps[static_cast<std::size_t>(j)] * l[static_cast<std::size_t>(j)]);
    for (int j = k - 1; j >= 0; --j) {
      if (++l[static_cast<std::size_t>(j)] <= sides[static_cast<std::size_t>(j)]) break;
      l[static_cast<std::size_t>(j)] = 1;
    }
  }
  return flat;
}

// ---------------------------------------------------------------------------

PolynomialFamily::PolynomialFamily(int ell, int k, std::vector<std::int64_t> coeffs)
    : ell_(ell), k_(k), coeffs_(std::move(coeffs)) {
  DSL_REQUIRE(ell >= 1, errc::invalid_argument, "polynomial family needs >= 1 row");
  DSL_REQUIRE(k >= 1 && k <= 16, errc::invalid_argument, "polynomial degree out of range");
  DSL_REQUIRE(coeffs_.size() == static_cast<std::size_t>(ell) * static_cast<std::size_t>(k),
              errc::invalid_argument, "coefficient matrix shape mismatch");
  for (int i = 0; i < ell; ++i) {
    bool nonzero = false;
    for (int j = 0; j < k; ++j) nonzero |= (coeff(i, j) != 0);
    DSL_REQUIRE(nonzero, errc::invalid_argument, "zero polynomial row rejected");
  }
}

int PolynomialFamily::effective_degree() const {
  int deg = 0;
  for (int i = 0; i < ell_; ++i)
    for (int j = 0; j < k_; ++j)
      if (coeff(i, j) != 0) deg = std::max(deg, j + 1);
  return deg;
}

std::int64_t PolynomialFamily::eval(int i, std::int64_t d) const {
  DSL_REQUIRE(i >= 0 && i < ell_, errc::invalid_argument, "row index out of range");
  // Horner in __int128 with overflow guard.
  __int128 acc = 0;
  const __int128 lim = std::numeric_limits<std::int64_t>::max();
  for (int j = k_ - 1; j >= 0; --j) {
    acc = acc * d + coeff(i, j);
    if (acc > lim * 2 || acc < -lim * 2) fail(errc::precondition, "polynomial value overflow");
  }
  acc *= d;  // zero constant term: P(d) = d * (c_1 + c_2 d + ... + c_k d^{k-1})
  DSL_REQUIRE(acc <= lim && acc >= -lim, errc::precondition, "polynomial value overflow");
  return static_cast<std::int64_t>(acc);
}

PolynomialFamily PolynomialFamily::monomials(int k) {
  std::vector<std::int64_t> coeffs(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0);
  for (int j = 0; j < k; ++j) coeffs[static_cast<std::size_t>(j) * k + j] = 1;
  return PolynomialFamily(k, k, std::move(coeffs));
}

// ---------------------------------------------------------------------------

std::int64_t MonomialCurveWindow::length() const {
  DSL_REQUIRE(eps > 0 && eps <= 1, errc::precondition, "window fraction must be in (0,1]");
  return to_i64(floor_rat(eps * BigRat(M)));
}

std::vector<std::int64_t> MonomialCurveWindow::point(std::int64_t d) const {
  std::vector<std::int64_t> p(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) p[static_cast<std::size_t>(j)] = pow_i64_checked(d, static_cast<unsigned>(j + 1));
  return p;
}

// ---------------------------------------------------------------------------

LabConstants LabConstants::defaults(int k) {
  DSL_REQUIRE(k >= 2 && k <= 16, errc::invalid_argument, "constants need degree k >= 2");
  LabConstants lc;
  lc.k = k;
  lc.eps = BigRat(1, 10 * k);
  lc.mu = BigRat(1, 10 * k);
  return lc;
}

BigRat LabConstants::eta(const BigRat& delta) const {
  BigRat e = eta_override ? *eta_override : delta / (8 * C);
  DSL_REQUIRE(e > 0 && e <= 1, errc::precondition, "eta must lie in (0,1]");
  return e;
}

BigRat LabConstants::sigma(const BigRat& delta) const {
  BigRat s = sigma_override ? *sigma_override
                            : c * pow_rat(delta, static_cast<unsigned>(k - 1));
  DSL_REQUIRE(s > 0, errc::precondition, "sigma must be positive");
  return s;
}

void LabConstants::validate(bool relaxed_eps) const {
  DSL_REQUIRE(k >= 2 && k <= 16, errc::invalid_argument, "constants need degree k >= 2");
  DSL_REQUIRE(C > 0 && c > 0, errc::invalid_argument, "C and c must be positive");
  if (relaxed_eps) {
    DSL_REQUIRE(eps > 0 && eps <= 1, errc::precondition, "eps must lie in (0,1]");
  } else {
    DSL_REQUIRE(eps > 0 && eps <= BigRat(1, 10 * k), errc::precondition,
                "eps must lie in (0, 1/(10k)]");
  }
}

}  // namespace dsl
