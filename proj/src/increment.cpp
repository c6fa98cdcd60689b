#include "diffsetlab/increment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

#include "diffsetlab/diffset.hpp"
#include "diffsetlab/fourier.hpp"

namespace dsl::increment {

namespace {

BigInt big_from_i128(__int128 v) {
  bool neg = v < 0;
  unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
  BigInt r = BigInt(static_cast<std::uint64_t>(u >> 64));
  r <<= 64;
  r += BigInt(static_cast<std::uint64_t>(u));
  return neg ? -r : r;
}

// Dense row-major product domain. Axis 0 carries the largest stride, so
// ascending flat order is lexicographic in the coordinate tuple; cell c on
// axis j sits at point coordinate org[j] + c.
struct DenseDomain {
  int k = 0;
  std::vector<std::int64_t> pext, org, stride;
  std::int64_t total = 0;
};

DenseDomain make_domain(int k, std::vector<std::int64_t> pext, std::vector<std::int64_t> org,
                        std::int64_t max_cells) {
  DenseDomain d;
  d.k = k;
  d.pext = std::move(pext);
  d.org = std::move(org);
  d.stride.assign(static_cast<std::size_t>(k), 1);
  BigInt tot = 1;
  for (int j = k; j-- > 0;) {
    DSL_REQUIRE(d.pext[static_cast<std::size_t>(j)] >= 1, errc::invalid_argument,
                "dense domain: empty axis");
    if (j + 1 < k)
      d.stride[static_cast<std::size_t>(j)] = d.stride[static_cast<std::size_t>(j + 1)] *
                                              d.pext[static_cast<std::size_t>(j + 1)];
    tot *= d.pext[static_cast<std::size_t>(j)];
    DSL_REQUIRE(tot <= max_cells, errc::resource_limit, "dense domain: grid scan needs too much memory");
  }
  d.total = to_i64(tot);
  // stride[0]*pext[0] == total; recompute to keep the invariant checked
  DSL_REQUIRE(d.stride[0] * d.pext[0] == d.total, errc::resource_limit,
              "dense domain: stride overflow");
  return d;
}

// In-place sliding sums along one axis: v[c] <- sum_{l=1..n} v[c + dir*l*step],
// reading zero outside the array. Prefix sums are captured per residue line
// before writing back, so the update is safe in place.
void window_axis(std::vector<std::int64_t>& v, const DenseDomain& d, int axis, std::int64_t step,
                 std::int64_t n, int dir) {
  std::int64_t ext = d.pext[static_cast<std::size_t>(axis)];
  std::int64_t inner = d.stride[static_cast<std::size_t>(axis)];
  std::int64_t block = inner * ext;
  std::int64_t outer = d.total / block;
  std::vector<std::int64_t> pre;
  for (std::int64_t ob = 0; ob < outer; ++ob) {
    for (std::int64_t ib = 0; ib < inner; ++ib) {
      std::int64_t base = ob * block + ib;
      for (std::int64_t r = 0; r < step && r < ext; ++r) {
        std::int64_t m = (ext - 1 - r) / step + 1;  // cells in this residue class
        pre.assign(static_cast<std::size_t>(m + 1), 0);
        for (std::int64_t i = 0; i < m; ++i)
          pre[static_cast<std::size_t>(i + 1)] =
              pre[static_cast<std::size_t>(i)] + v[base + (r + i * step) * inner];
        for (std::int64_t i = 0; i < m; ++i) {
          std::int64_t s;
          if (dir > 0) {
            std::int64_t hi = std::min(i + n, m - 1);
            s = pre[static_cast<std::size_t>(hi + 1)] - pre[static_cast<std::size_t>(i + 1)];
          } else {
            std::int64_t lo = std::max<std::int64_t>(i - n, 0);
            s = pre[static_cast<std::size_t>(i)] - pre[static_cast<std::size_t>(lo)];
          }
          v[base + (r + i * step) * inner] = s;
        }
      }
    }
  }
}

struct GridScanHit {
  GridSpec grid;
  std::int64_t count = 0;
};

// First grid (sign +1 before -1, bases lexicographic) with parameters (q, L)
// that fits inside B's box and meets count > required * |grid| exactly.
std::optional<GridScanHit> scan_grids(const PointSet& B, std::int64_t q, std::int64_t L,
                                      const BigRat& required) {
  const Box& box = B.box();
  int k = box.k();
  std::vector<std::int64_t> s(static_cast<std::size_t>(k)), n(static_cast<std::size_t>(k)),
      ext(static_cast<std::size_t>(k));
  BigInt card = 1;
  for (int j = 0; j < k; ++j) {
    ext[static_cast<std::size_t>(j)] = box.extent(j);
    n[static_cast<std::size_t>(j)] = pow_i64_checked(L, static_cast<unsigned>(j + 1));
    card *= n[static_cast<std::size_t>(j)];
    DSL_REQUIRE(card <= (std::int64_t{1} << 30), errc::resource_limit,
                "grid scan: grid cardinality too large");
  }

  // Integer threshold: count > required*card  <=>  count >= floor(...)+1.
  BigInt tmin_b = floor_rat(required * BigRat(card)) + 1;
  if (tmin_b > card) return std::nullopt;  // even a full grid cannot clear the bar
  std::int64_t tmin = to_i64(tmin_b);

  // Degenerate one-point grids need no array: the first point of B works.
  if (L == 1) {
    for (int dir : {+1, -1}) {
      bool fits = true;
      std::vector<std::int64_t> base(static_cast<std::size_t>(k));
      for (int j = 0; j < k && fits; ++j) {
        __int128 sj = 1;
        for (int e = 0; e <= j; ++e) sj *= q;
        if (sj >= (__int128{1} << 62)) {
          fits = false;
          break;
        }
        base[static_cast<std::size_t>(j)] =
            B.point(0)[static_cast<std::size_t>(j)] - dir * static_cast<std::int64_t>(sj);
      }
      if (!fits) continue;
      GridSpec g{k, base, q, 1, dir};
      if (tmin <= 1) return GridScanHit{std::move(g), 1};
    }
    return std::nullopt;
  }

  for (int j = 0; j < k; ++j) {
    // With n >= 2 points on the axis, a base exists only if the span fits.
    __int128 sj = 1;
    for (int e = 0; e <= j; ++e) sj *= q;
    if ((static_cast<__int128>(n[static_cast<std::size_t>(j)]) - 1) * sj >
        ext[static_cast<std::size_t>(j)] - 1)
      return std::nullopt;
    s[static_cast<std::size_t>(j)] = static_cast<std::int64_t>(sj);
  }

  for (int dir : {+1, -1}) {
    std::vector<std::int64_t> pext(static_cast<std::size_t>(k)), org(static_cast<std::size_t>(k));
    std::vector<std::int64_t> vlo(static_cast<std::size_t>(k)), vhi(static_cast<std::size_t>(k));
    bool fits = true;
    for (int j = 0; j < k; ++j) {
      std::int64_t e = ext[static_cast<std::size_t>(j)];
      std::int64_t sj = s[static_cast<std::size_t>(j)];
      std::int64_t nj = n[static_cast<std::size_t>(j)];
      pext[static_cast<std::size_t>(j)] = e + sj;
      if (dir > 0) {
        org[static_cast<std::size_t>(j)] = 1 - sj;
        vlo[static_cast<std::size_t>(j)] = 1 - sj;
        vhi[static_cast<std::size_t>(j)] = e - nj * sj;
      } else {
        org[static_cast<std::size_t>(j)] = 1;
        vlo[static_cast<std::size_t>(j)] = 1 + nj * sj;
        vhi[static_cast<std::size_t>(j)] = e + sj;
      }
      if (vlo[static_cast<std::size_t>(j)] > vhi[static_cast<std::size_t>(j)]) fits = false;
    }
    if (!fits) continue;

    DenseDomain dom = make_domain(k, pext, org, std::int64_t{1} << 25);
    std::vector<std::int64_t> F(static_cast<std::size_t>(dom.total), 0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(B.size()); ++i) {
      const std::int64_t* p = B.point(i);
      std::int64_t flat = 0;
      for (int j = 0; j < k; ++j)
        flat += (p[j] - dom.org[static_cast<std::size_t>(j)]) *
                dom.stride[static_cast<std::size_t>(j)];
      F[static_cast<std::size_t>(flat)] = 1;
    }
    for (int j = 0; j < k; ++j)
      window_axis(F, dom, j, s[static_cast<std::size_t>(j)], n[static_cast<std::size_t>(j)], dir);

    // Walk valid bases in lexicographic order.
    std::vector<std::int64_t> c(static_cast<std::size_t>(k));
    std::int64_t flat = 0;
    for (int j = 0; j < k; ++j) {
      c[static_cast<std::size_t>(j)] =
          vlo[static_cast<std::size_t>(j)] - dom.org[static_cast<std::size_t>(j)];
      flat += c[static_cast<std::size_t>(j)] * dom.stride[static_cast<std::size_t>(j)];
    }
    for (;;) {
      if (F[static_cast<std::size_t>(flat)] >= tmin) {
        std::vector<std::int64_t> base(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j)
          base[static_cast<std::size_t>(j)] =
              dom.org[static_cast<std::size_t>(j)] + c[static_cast<std::size_t>(j)];
        GridSpec g{k, std::move(base), q, L, dir};
        return GridScanHit{std::move(g), F[static_cast<std::size_t>(flat)]};
      }
      int j = k - 1;
      for (; j >= 0; --j) {
        std::size_t js = static_cast<std::size_t>(j);
        std::int64_t chi = vhi[js] - dom.org[js];
        if (c[js] < chi) {
          ++c[js];
          flat += dom.stride[js];
          break;
        }
        std::int64_t clo = vlo[js] - dom.org[js];
        flat -= (c[js] - clo) * dom.stride[js];
        c[js] = clo;
      }
      if (j < 0) break;
    }
  }
  return std::nullopt;
}

void require_aniso(const PointSet& B, const char* who) {
  DSL_REQUIRE(B.box().mode() == BoxMode::box, errc::precondition, who);
  DSL_REQUIRE(!B.empty(), errc::precondition, who);
}

}  // namespace

// ---------------------------------------------------------------------------
// Increment grid search

std::optional<IncrementGrid> find_increment_grid(const PointSet& B, const BigRat& sigma,
                                                 const LabConstants& consts) {
  require_aniso(B, "find_increment_grid: needs a nonempty box set");
  consts.validate(true);
  int k = B.box().k();
  DSL_REQUIRE(k == consts.k, errc::invalid_argument, "find_increment_grid: dimension mismatch");
  DSL_REQUIRE(sigma > 0, errc::invalid_argument, "find_increment_grid: sigma must be positive");
  DSL_REQUIRE(B.box().volume() <= (std::int64_t{1} << 24), errc::resource_limit,
              "find_increment_grid: box too large for the dense scan");
  std::int64_t M = B.box().scale();
  BigRat delta = B.density();
  BigRat eta = consts.eta(delta);
  BigRat inv_eta_k = BigRat(1) / pow_rat(eta, static_cast<unsigned>(k));
  std::int64_t q_max = to_i64(floor_rat(inv_eta_k));
  DSL_REQUIRE(q_max >= 1, errc::precondition, "find_increment_grid: degenerate resolution");
  DSL_REQUIRE(q_max <= 4096, errc::resource_limit,
              "find_increment_grid: modulus scan too wide; pin eta closer to 1");

  BigInt target = ceil_rat(pow_rat(eta, 2) * sigma * M);
  DSL_REQUIRE(target >= 1, errc::precondition, "find_increment_grid: grid side collapsed");
  BigRat required = delta * (BigRat(1) + sigma);

  for (std::int64_t q = 1; q <= q_max; ++q) {
    std::int64_t L = to_i64((target + q - 1) / q);
    DSL_REQUIRE(L >= 1, errc::precondition, "find_increment_grid: grid side collapsed");
    auto hit = scan_grids(B, q, L, required);
    if (!hit) continue;
    IncrementGrid out;
    out.grid = std::move(hit->grid);
    out.count = hit->count;
    out.density = BigRat(BigInt(hit->count), out.grid.cardinality());
    out.required = required;
    out.meets_length_target = BigRat(L) >= consts.c * pow_rat(delta, static_cast<unsigned>(k + 2)) *
                                               sigma * M;
    return out;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Spectral mass on the modulus-q boxes

namespace {

// True when one numerator per axis can be picked from the lists so that the
// joint gcd with q is 1. Distinct partial gcds are deduplicated per level.
bool coprime_selectable(const std::vector<const std::vector<std::int64_t>*>& lists, std::size_t j,
                        std::int64_t g) {
  if (g == 1) return true;
  if (j == lists.size()) return false;
  std::vector<std::int64_t> seen;
  for (std::int64_t a : *lists[j]) {
    std::int64_t g2 = std::gcd(g, a);
    if (std::find(seen.begin(), seen.end(), g2) != seen.end()) continue;
    seen.push_back(g2);
    if (coprime_selectable(lists, j + 1, g2)) return true;
  }
  return false;
}

}  // namespace

MajorMassReport l2_mass_on_major_boxes(const PointSet& B, std::int64_t q_max,
                                       const LabConstants& consts) {
  require_aniso(B, "l2_mass_on_major_boxes: needs a nonempty box set");
  consts.validate(true);
  int k = B.box().k();
  DSL_REQUIRE(k == consts.k, errc::invalid_argument, "l2_mass_on_major_boxes: dimension mismatch");
  DSL_REQUIRE(q_max >= 1, errc::invalid_argument, "l2_mass_on_major_boxes: need q_max >= 1");
  std::int64_t M = B.box().scale();
  BigRat delta = B.density();
  BigRat eta = consts.eta(delta);
  BigRat inv_eta_k = BigRat(1) / pow_rat(eta, static_cast<unsigned>(k));
  std::int64_t q_cap = std::min(q_max, to_i64(floor_rat(inv_eta_k)));
  DSL_REQUIRE(q_cap >= 1, errc::precondition, "l2_mass_on_major_boxes: degenerate resolution");

  fourier::EmbeddingGroup g = fourier::EmbeddingGroup::for_box(k, M, eta);
  fourier::BalanceFunction bf = fourier::balance_function(B, g);
  fourier::Spectrum spec = fourier::dft(bf.fn);
  double measure = spec.lattice_measure();
  double norm_scale = measure / (rat_to_double(delta) * static_cast<double>(B.size()));

  MajorMassReport out;
  {
    // All-frequency mass; by Parseval this is (1 - delta) / delta.
    double acc = 0.0, comp = 0.0;
    for (const fourier::cplx& z : spec.v) {
      double term = std::norm(z);
      double t = acc + term;
      comp += (std::abs(acc) >= std::abs(term)) ? (acc - t) + term : (term - t) + acc;
      acc = t;
    }
    out.total = (acc + comp) * norm_scale;
  }

  for (std::int64_t q = 1; q <= q_cap; ++q) {
    // Per axis: normalized lattice frequency -> sorted numerators whose box
    // contains it. Ranges come from exact rational rounding.
    std::vector<std::vector<std::pair<std::int64_t, std::vector<std::int64_t>>>> cand(
        static_cast<std::size_t>(k));
    BigInt mj = 1;
    BigInt combos = 1;
    for (int j = 0; j < k; ++j) {
      mj *= M;
      BigRat hw = inv_eta_k / BigRat(mj);
      std::int64_t T = g.T[static_cast<std::size_t>(j)];
      std::map<std::int64_t, std::vector<std::int64_t>> axis;
      for (std::int64_t a = 1; a <= q; ++a) {
        BigRat center{BigInt(a), BigInt(q)};
        BigInt lo = ceil_rat((center - hw) * T);
        BigInt hi = floor_rat((center + hw) * T);
        if (hi - lo + 1 >= T) {
          lo = 0;
          hi = T - 1;
        }
        for (BigInt xi = lo; xi <= hi; ++xi) {
          std::int64_t xin = to_i64(((xi % T) + T) % T);
          auto& lst = axis[xin];
          if (lst.empty() || lst.back() != a) lst.push_back(a);
        }
      }
      auto& flat_axis = cand[static_cast<std::size_t>(j)];
      flat_axis.assign(axis.begin(), axis.end());
      DSL_REQUIRE(!flat_axis.empty(), errc::precondition,
                  "l2_mass_on_major_boxes: boxes hold no lattice points");
      combos *= static_cast<std::int64_t>(flat_axis.size());
      DSL_REQUIRE(combos <= (std::int64_t{1} << 22), errc::resource_limit,
                  "l2_mass_on_major_boxes: box lattice enumeration too large");
    }

    MajorMassRow row;
    row.q = q;
    double acc = 0.0, comp = 0.0;
    std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
    std::vector<std::int64_t> xi(static_cast<std::size_t>(k));
    std::vector<const std::vector<std::int64_t>*> lists(static_cast<std::size_t>(k));
    for (;;) {
      for (int j = 0; j < k; ++j) {
        const auto& e = cand[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]];
        xi[static_cast<std::size_t>(j)] = e.first;
        lists[static_cast<std::size_t>(j)] = &e.second;
      }
      if (coprime_selectable(lists, 0, q)) {
        ++row.lattice_points;
        double term = std::norm(spec.v[static_cast<std::size_t>(g.flat_index(xi.data()))]);
        double t = acc + term;
        comp += (std::abs(acc) >= std::abs(term)) ? (acc - t) + term : (term - t) + acc;
        acc = t;
      }
      int j = k - 1;
      for (; j >= 0; --j) {
        std::size_t js = static_cast<std::size_t>(j);
        if (++idx[js] < cand[js].size()) break;
        idx[js] = 0;
      }
      if (j < 0) break;
    }
    row.mass = (acc + comp) * norm_scale;
    if (row.mass > out.best_mass) {
      out.best_mass = row.mass;
      out.best_q = q;
    }
    out.rows.push_back(std::move(row));
  }
  if (out.best_q == 0 && !out.rows.empty()) out.best_q = out.rows.front().q;
  return out;
}

// ---------------------------------------------------------------------------
// Convolution checks

ConvolutionReport grid_convolution_bound(const PointSet& B, const GridSpec& grid,
                                         const BigRat& sigma, const LabConstants& consts) {
  require_aniso(B, "grid_convolution_bound: needs a nonempty box set");
  consts.validate(true);
  grid.validate();
  const Box& box = B.box();
  int k = box.k();
  DSL_REQUIRE(grid.k == k && consts.k == k, errc::invalid_argument,
              "grid_convolution_bound: dimension mismatch");
  DSL_REQUIRE(sigma > 0, errc::invalid_argument, "grid_convolution_bound: sigma must be positive");
  DSL_REQUIRE(grid.within(box), errc::precondition,
              "grid_convolution_bound: grid leaves the box");
  BigInt vol = box.volume();
  DSL_REQUIRE(vol <= (std::int64_t{1} << 22), errc::resource_limit,
              "grid_convolution_bound: box too large for the dense convolution");
  BigInt card = grid.cardinality();
  DSL_REQUIRE(vol * card <= (std::int64_t{1} << 50), errc::resource_limit,
              "grid_convolution_bound: scaled values would overflow");

  BigRat delta = B.density();
  BigRat eta = consts.eta(delta);
  std::int64_t on_val = to_i64(vol - B.size());   // f_B * |Q| on points of B
  std::int64_t off_val = -to_i64(BigInt(B.size()));  // and off B inside Q

  std::vector<std::int64_t> s(static_cast<std::size_t>(k)), n(static_cast<std::size_t>(k)),
      ext(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    ext[static_cast<std::size_t>(j)] = box.extent(j);
    s[static_cast<std::size_t>(j)] = pow_i64_checked(grid.q, static_cast<unsigned>(j + 1));
    n[static_cast<std::size_t>(j)] = pow_i64_checked(grid.L, static_cast<unsigned>(j + 1));
  }

  // Array covers the box and the convolution support on each axis.
  std::vector<std::int64_t> pext(static_cast<std::size_t>(k)), org(static_cast<std::size_t>(k));
  std::vector<std::int64_t> slo(static_cast<std::size_t>(k)), shi(static_cast<std::size_t>(k));
  std::vector<std::int64_t> ilo(static_cast<std::size_t>(k)), ihi(static_cast<std::size_t>(k));
  BigInt support_cells = 1, interior_cells = 1;
  for (int j = 0; j < k; ++j) {
    std::size_t js = static_cast<std::size_t>(j);
    std::int64_t e = ext[js], sj = s[js], nj = n[js];
    pext[js] = e + nj * sj;
    if (grid.sign > 0) {
      org[js] = 1;
      slo[js] = 1 + sj;
      shi[js] = e + nj * sj;
      ilo[js] = 1 + nj * sj;
      ihi[js] = e + sj;
    } else {
      org[js] = 1 - nj * sj;
      slo[js] = 1 - nj * sj;
      shi[js] = e - sj;
      ilo[js] = 1 - sj;
      ihi[js] = e - nj * sj;
    }
    support_cells *= shi[js] - slo[js] + 1;
    interior_cells *= std::max<std::int64_t>(0, ihi[js] - ilo[js] + 1);
  }

  DenseDomain dom = make_domain(k, pext, org, std::int64_t{1} << 24);
  std::vector<std::int64_t> F(static_cast<std::size_t>(dom.total), 0);
  {
    // Fill f_B * |Q| over the box: off_val everywhere, on_val on B.
    std::vector<std::int64_t> c(static_cast<std::size_t>(k));
    std::int64_t flat = 0;
    for (int j = 0; j < k; ++j) {
      c[static_cast<std::size_t>(j)] = 1 - dom.org[static_cast<std::size_t>(j)];
      flat += c[static_cast<std::size_t>(j)] * dom.stride[static_cast<std::size_t>(j)];
    }
    for (;;) {
      F[static_cast<std::size_t>(flat)] = off_val;
      int j = k - 1;
      for (; j >= 0; --j) {
        std::size_t js = static_cast<std::size_t>(j);
        std::int64_t chi = ext[js] - dom.org[js];
        if (c[js] < chi) {
          ++c[js];
          flat += dom.stride[js];
          break;
        }
        std::int64_t clo = 1 - dom.org[js];
        flat -= (c[js] - clo) * dom.stride[js];
        c[js] = clo;
      }
      if (j < 0) break;
    }
    for (std::size_t i = 0; i < static_cast<std::size_t>(B.size()); ++i) {
      const std::int64_t* p = B.point(i);
      std::int64_t pf = 0;
      for (int j = 0; j < k; ++j)
        pf += (p[j] - dom.org[static_cast<std::size_t>(j)]) *
              dom.stride[static_cast<std::size_t>(j)];
      F[static_cast<std::size_t>(pf)] = on_val;
    }
  }

  // conv(m) = sum_l F(m - sign*(l_1 q, ..., l_k q^k)): window with sign -sign.
  for (int j = 0; j < k; ++j)
    window_axis(F, dom, j, s[static_cast<std::size_t>(j)], n[static_cast<std::size_t>(j)],
                -grid.sign);

  __int128 total_sum = 0;
  for (std::int64_t i = 0; i < dom.total; ++i) total_sum += F[static_cast<std::size_t>(i)];
  DSL_REQUIRE(total_sum == 0, errc::precondition,
              "grid_convolution_bound: convolution lost mass; window sums are broken");

  ConvolutionReport out;
  out.interior_cells = interior_cells;
  out.edge_cells = support_cells - interior_cells;
  out.edge_bound = BigRat(8 * k) * pow_rat(eta, 2) * sigma * BigRat(vol);
  out.edge_ok = BigRat(out.edge_cells) <= out.edge_bound;

  __int128 ssq = 0;
  std::int64_t rail_low = -to_i64(BigInt(B.size()) * card);
  std::int64_t rail_high = to_i64(floor_rat(sigma * BigRat(BigInt(B.size()) * card)));
  if (interior_cells > 0) {
    std::vector<std::int64_t> c(static_cast<std::size_t>(k));
    std::int64_t flat = 0;
    for (int j = 0; j < k; ++j) {
      c[static_cast<std::size_t>(j)] = ilo[static_cast<std::size_t>(j)] -
                                       dom.org[static_cast<std::size_t>(j)];
      flat += c[static_cast<std::size_t>(j)] * dom.stride[static_cast<std::size_t>(j)];
    }
    for (;;) {
      std::int64_t v = F[static_cast<std::size_t>(flat)];
      DSL_REQUIRE(v >= rail_low, errc::precondition,
                  "grid_convolution_bound: interior value below the exact floor");
      if (v > rail_high) ++out.rail_violations;
      ssq += static_cast<__int128>(v) * v;
      int j = k - 1;
      for (; j >= 0; --j) {
        std::size_t js = static_cast<std::size_t>(j);
        std::int64_t chi = ihi[js] - dom.org[js];
        if (c[js] < chi) {
          ++c[js];
          flat += dom.stride[js];
          break;
        }
        std::int64_t clo = ilo[js] - dom.org[js];
        flat -= (c[js] - clo) * dom.stride[js];
        c[js] = clo;
      }
      if (j < 0) break;
    }
  }
  out.sum_sq = BigRat(big_from_i128(ssq), vol * vol);
  out.sum_sq_bound = BigRat(3) * sigma * delta * BigRat(BigInt(B.size())) * BigRat(card * card);
  out.sum_sq_ok = out.sum_sq <= out.sum_sq_bound;
  return out;
}

// ---------------------------------------------------------------------------
// Transform lower bound on the modulus-q boxes

GridTransformReport grid_transform_lower_bound(const GridSpec& grid, const BigRat& eta,
                                               const BigRat& sigma, std::int64_t M,
                                               std::int64_t max_samples) {
  grid.validate();
  int k = grid.k;
  DSL_REQUIRE(k >= 2 && k <= 16, errc::invalid_argument,
              "grid_transform_lower_bound: k out of range");
  DSL_REQUIRE(M >= 1, errc::invalid_argument, "grid_transform_lower_bound: bad window scale");
  DSL_REQUIRE(eta > 0 && eta <= 1, errc::invalid_argument,
              "grid_transform_lower_bound: eta must lie in (0, 1]");
  DSL_REQUIRE(sigma > 0, errc::invalid_argument,
              "grid_transform_lower_bound: sigma must be positive");
  DSL_REQUIRE(max_samples >= 1, errc::invalid_argument,
              "grid_transform_lower_bound: bad sample cap");

  // Preconditions, checked exactly with 355/113 as an upper stand-in for pi.
  BigInt target = ceil_rat(pow_rat(eta, 2) * sigma * M);
  DSL_REQUIRE(BigInt(grid.q) * grid.L <= 2 * target, errc::precondition,
              "grid_transform_lower_bound: grid side out of tune with eta^2*sigma*M");
  DSL_REQUIRE(sigma * 2840 <= pow_rat(eta, static_cast<unsigned>(k - 2)) * 113,
              errc::precondition, "grid_transform_lower_bound: sigma too large for the bound");

  BigRat inv_eta_k = BigRat(1) / pow_rat(eta, static_cast<unsigned>(k));
  GridTransformReport out;
  {
    BigRat drift = 0;
    BigInt lqj = 1, mj = 1;
    for (int j = 1; j <= k; ++j) {
      lqj *= BigInt(grid.L) * grid.q;
      mj *= M;
      drift += BigRat(lqj) * inv_eta_k / BigRat(mj);
    }
    out.drift_sum = drift;
    DSL_REQUIRE(drift * 1420 <= 113, errc::precondition,
                "grid_transform_lower_bound: phase drift too large for the bound");
  }
  DSL_REQUIRE(BigRat(grid.q) <= inv_eta_k, errc::precondition,
              "grid_transform_lower_bound: modulus exceeds floor(eta^-k)");

  // Only the axis lengths T_j are used here; no cell array is ever built, so
  // the allocation budget does not apply.
  fourier::EmbeddingGroup g =
      fourier::EmbeddingGroup::for_box(k, M, eta, std::int64_t{1} << 62);
  std::int64_t q = grid.q;

  // Per-axis lattice frequencies in the box around each numerator.
  std::vector<std::vector<std::vector<std::int64_t>>> per_axis(static_cast<std::size_t>(k));
  BigInt mj = 1;
  for (int j = 0; j < k; ++j) {
    mj *= M;
    BigRat hw = inv_eta_k / BigRat(mj);
    std::int64_t T = g.T[static_cast<std::size_t>(j)];
    auto& lists = per_axis[static_cast<std::size_t>(j)];
    lists.resize(static_cast<std::size_t>(q));
    for (std::int64_t a = 1; a <= q; ++a) {
      BigRat center{BigInt(a), BigInt(q)};
      BigInt lo = ceil_rat((center - hw) * T);
      BigInt hi = floor_rat((center + hw) * T);
      if (hi - lo + 1 >= T) {
        lo = 0;
        hi = T - 1;
      }
      auto& lst = lists[static_cast<std::size_t>(a - 1)];
      for (BigInt xi = lo; xi <= hi; ++xi) lst.push_back(to_i64(((xi % T) + T) % T));
    }
  }

  BigInt combos = 0;
  {
    std::vector<std::int64_t> a(static_cast<std::size_t>(k), 1);
    for (;;) {
      std::int64_t gg = q;
      for (std::int64_t aj : a) gg = std::gcd(gg, aj % q);
      if (gg == 1) {
        BigInt c = 1;
        for (int j = 0; j < k; ++j)
          c *= static_cast<std::int64_t>(
              per_axis[static_cast<std::size_t>(j)]
                      [static_cast<std::size_t>(a[static_cast<std::size_t>(j)] - 1)]
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
  DSL_REQUIRE(combos > 0, errc::precondition,
              "grid_transform_lower_bound: boxes hold no lattice points");
  std::int64_t stride =
      combos > max_samples ? to_i64((combos + max_samples - 1) / max_samples) : 1;

  out.min_ratio = 1.0;
  std::vector<std::int64_t> a(static_cast<std::size_t>(k), 1);
  std::int64_t visited = 0;
  for (;;) {
    std::int64_t gg = q;
    for (std::int64_t aj : a) gg = std::gcd(gg, aj % q);
    if (gg == 1) {
      std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
      std::vector<const std::vector<std::int64_t>*> lists(static_cast<std::size_t>(k));
      for (int j = 0; j < k; ++j)
        lists[static_cast<std::size_t>(j)] =
            &per_axis[static_cast<std::size_t>(j)]
                     [static_cast<std::size_t>(a[static_cast<std::size_t>(j)] - 1)];
      for (;;) {
        if (visited % stride == 0) {
          // |grid_hat(alpha)| splits over axes; each factor is an exact
          // geometric phase sum of n_j terms.
          double ratio = 1.0;
          for (int j = 0; j < k; ++j) {
            std::size_t js = static_cast<std::size_t>(j);
            std::int64_t T = g.T[js];
            std::int64_t xi = (*lists[js])[idx[js]];
            std::int64_t nj = pow_i64_checked(grid.L, static_cast<unsigned>(j + 1));
            DSL_REQUIRE(nj <= (std::int64_t{1} << 20), errc::resource_limit,
                        "grid_transform_lower_bound: grid axis too long");
            __int128 sj = 1;
            for (int e = 0; e <= j; ++e) sj = (sj * (grid.q % T)) % T;
            std::int64_t step = static_cast<std::int64_t>(
                (static_cast<__int128>(xi) * static_cast<std::int64_t>(sj)) % T);
            double re = 0.0, im = 0.0;
            std::int64_t acc = 0;
            for (std::int64_t l = 1; l <= nj; ++l) {
              acc += step;
              if (acc >= T) acc -= T;
              double ang = -2.0 * M_PI * static_cast<double>(acc) / static_cast<double>(T);
              re += std::cos(ang);
              im += std::sin(ang);
            }
            ratio *= std::hypot(re, im) / static_cast<double>(nj);
          }
          out.min_ratio = std::min(out.min_ratio, ratio);
          ++out.samples;
          DSL_REQUIRE(ratio >= 0.5 * (1.0 - 1e-9), errc::precondition,
                      "grid_transform_lower_bound: transform dipped below half mass");
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

// ---------------------------------------------------------------------------
// Rescaling and partitioning

Subproblem rescale_to_subproblem(const PointSet& B, const GridSpec& grid) {
  require_aniso(B, "rescale_to_subproblem: needs a nonempty box set");
  grid.validate();
  const Box& box = B.box();
  int k = box.k();
  DSL_REQUIRE(grid.k == k, errc::invalid_argument, "rescale_to_subproblem: dimension mismatch");
  DSL_REQUIRE(grid.within(box), errc::precondition, "rescale_to_subproblem: grid leaves the box");

  Box nb = Box::aniso(k, grid.L);
  DSL_REQUIRE(nb.volume() <= (std::int64_t{1} << 26), errc::resource_limit,
              "rescale_to_subproblem: subproblem too large");
  std::vector<std::int64_t> s(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j)
    s[static_cast<std::size_t>(j)] = pow_i64_checked(grid.q, static_cast<unsigned>(j + 1));

  std::vector<std::int64_t> flat;
  std::vector<std::int64_t> l(static_cast<std::size_t>(k), 1);
  std::vector<std::int64_t> p(static_cast<std::size_t>(k));
  for (;;) {
    for (int j = 0; j < k; ++j)
      p[static_cast<std::size_t>(j)] =
          grid.base[static_cast<std::size_t>(j)] +
          grid.sign * l[static_cast<std::size_t>(j)] * s[static_cast<std::size_t>(j)];
    if (B.contains(p.data())) flat.insert(flat.end(), l.begin(), l.end());
    int j = k - 1;
    for (; j >= 0; --j) {
      std::size_t js = static_cast<std::size_t>(j);
      if (l[js] < nb.hi(j)) {
        ++l[js];
        break;
      }
      l[js] = 1;
    }
    if (j < 0) break;
  }
  DSL_REQUIRE(!flat.empty(), errc::precondition,
              "rescale_to_subproblem: reduction degenerate, the grid misses the set");
  Subproblem out{PointSet(nb, std::move(flat)), grid.L};
  return out;
}

PartitionResult partition_reduce(const PointSet& B, std::int64_t N) {
  DSL_REQUIRE(!B.empty(), errc::precondition, "partition_reduce: empty set");
  const Box& box = B.box();
  int k = box.k();
  DSL_REQUIRE(N >= 2, errc::invalid_argument, "partition_reduce: need N >= 2");
  DSL_REQUIRE(k <= 62 && N >= (std::int64_t{1} << k), errc::precondition,
              "partition_reduce: N below 2^k, no room for a tile");
  for (int j = 0; j < k; ++j)
    DSL_REQUIRE(box.extent(j) <= N, errc::invalid_argument,
                "partition_reduce: box extent exceeds N");

  // Integer k-th root of N.
  std::int64_t M = static_cast<std::int64_t>(std::llround(std::pow(static_cast<double>(N),
                                                                   1.0 / k)));
  while (M > 1 && pow_big(BigInt(M), static_cast<unsigned>(k)) > N) --M;
  while (pow_big(BigInt(M + 1), static_cast<unsigned>(k)) <= N) ++M;
  DSL_REQUIRE(M >= 2, errc::precondition, "partition_reduce: tile scale collapsed");

  Box tile_box = Box::aniso(k, M);
  DSL_REQUIRE(tile_box.volume() <= (std::int64_t{1} << 26), errc::resource_limit,
              "partition_reduce: tile too large");

  // Count points per tile; tiles are indexed from the box's low corner.
  std::vector<std::int64_t> tlen(static_cast<std::size_t>(k)), tcnt(static_cast<std::size_t>(k));
  BigInt tiles = 1;
  for (int j = 0; j < k; ++j) {
    tlen[static_cast<std::size_t>(j)] = pow_i64_checked(M, static_cast<unsigned>(j + 1));
    tcnt[static_cast<std::size_t>(j)] =
        (box.extent(j) + tlen[static_cast<std::size_t>(j)] - 1) /
        tlen[static_cast<std::size_t>(j)];
    tiles *= tcnt[static_cast<std::size_t>(j)];
  }

  std::map<std::vector<std::int64_t>, std::int64_t> counts;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < static_cast<std::size_t>(B.size()); ++i) {
    const std::int64_t* p = B.point(i);
    for (int j = 0; j < k; ++j)
      idx[static_cast<std::size_t>(j)] =
          (p[j] - box.lo(j)) / tlen[static_cast<std::size_t>(j)];
    ++counts[idx];
  }
  auto best = counts.begin();
  for (auto it = std::next(counts.begin()); it != counts.end(); ++it)
    if (it->second > best->second) best = it;  // map order breaks ties toward the least index

  // Recenter the chosen tile to the anisotropic box.
  std::vector<std::int64_t> flat;
  flat.reserve(static_cast<std::size_t>(best->second) * static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < static_cast<std::size_t>(B.size()); ++i) {
    const std::int64_t* p = B.point(i);
    bool in = true;
    for (int j = 0; j < k && in; ++j)
      in = (p[j] - box.lo(j)) / tlen[static_cast<std::size_t>(j)] ==
           best->first[static_cast<std::size_t>(j)];
    if (!in) continue;
    for (int j = 0; j < k; ++j)
      flat.push_back(p[j] - box.lo(j) -
                     best->first[static_cast<std::size_t>(j)] * tlen[static_cast<std::size_t>(j)] +
                     1);
  }

  PartitionResult out{PointSet(tile_box, std::move(flat)), M, best->first,
                      BigRat(BigInt(B.size()), tile_box.volume() * tiles)};
  DSL_REQUIRE(out.reduced.density() >= out.guaranteed_density, errc::precondition,
              "partition_reduce: pigeonhole accounting is broken");
  return out;
}

// ---------------------------------------------------------------------------
// Dichotomy and iteration

DichotomyResult dichotomy(const PointSet& B, const LabConstants& consts) {
  require_aniso(B, "dichotomy: needs a nonempty box set");
  consts.validate(true);
  int k = B.box().k();
  DSL_REQUIRE(k == consts.k, errc::invalid_argument, "dichotomy: dimension mismatch");

  DichotomyResult out;
  diffset::RandomnessDefect rd = diffset::randomness_defect(B, consts);
  if (rd.is_random) {
    out.kind = DichotomyKind::random_like;
    out.count = rd.count;
    out.threshold = rd.threshold;
    return out;
  }

  BigRat delta = B.density();
  std::int64_t M = B.box().scale();
  BigRat sigma = consts.sigma(delta);

  // Long spacing-1 grids first: a hit at margin 1/4 is a structural
  // irregularity that short-circuits the modulus scan.
  std::int64_t L_reg = to_i64(floor_rat(consts.eps * M));
  if (L_reg >= 1) {
    bool scannable = true;
    BigInt card = 1;
    for (int j = 0; j < k && scannable; ++j) {
      card *= pow_big(BigInt(L_reg), static_cast<unsigned>(j + 1));
      if (card > (std::int64_t{1} << 30)) scannable = false;
    }
    if (scannable) {
      BigRat required = delta * BigRat(5, 4);
      if (auto hit = scan_grids(B, 1, L_reg, required)) {
        IncrementGrid inc;
        inc.grid = std::move(hit->grid);
        inc.count = hit->count;
        inc.density = BigRat(BigInt(hit->count), inc.grid.cardinality());
        inc.required = required;
        inc.meets_length_target =
            BigRat(L_reg) >= consts.c * pow_rat(delta, static_cast<unsigned>(k + 2)) * sigma * M;
        out.kind = DichotomyKind::structured;
        out.increment = std::move(inc);
        return out;
      }
    }
  }

  if (auto inc = find_increment_grid(B, sigma, consts)) {
    out.kind = DichotomyKind::structured;
    out.increment = std::move(inc);
    return out;
  }

  out.kind = DichotomyKind::undecided;
  try {
    out.diagnostics = l2_mass_on_major_boxes(B, 64, consts);
  } catch (const Error&) {
    out.diagnostics = std::nullopt;  // diagnostics are best-effort
  }
  return out;
}

IterationResult iterate(const PointSet& B, const LabConstants& consts, int max_steps) {
  require_aniso(B, "iterate: needs a nonempty box set");
  consts.validate(true);
  DSL_REQUIRE(max_steps >= 1 && max_steps <= 4096, errc::invalid_argument,
              "iterate: step limit out of range");
  int k = B.box().k();
  DSL_REQUIRE(k == consts.k, errc::invalid_argument, "iterate: dimension mismatch");

  PointSet cur = B;
  IterationResult res;
  for (int stepi = 0;; ++stepi) {
    std::int64_t M = cur.box().scale();
    BigRat delta = cur.density();
    res.final_M = M;
    res.final_delta = delta;

    // Size floor: M <= delta^-C, exactly when C is an integer.
    bool floor_hit;
    BigInt c_num = boost::multiprecision::numerator(consts.C);
    BigInt c_den = boost::multiprecision::denominator(consts.C);
    if (c_den == 1 && c_num >= 0 && c_num <= 64) {
      floor_hit = BigRat(M) <= pow_rat(BigRat(1) / delta,
                                       static_cast<unsigned>(to_i64(c_num)));
    } else {
      floor_hit = std::log(static_cast<double>(M)) <=
                  rat_to_double(consts.C) * std::log(1.0 / rat_to_double(delta));
    }
    if (floor_hit) {
      res.reason = StopReason::size_floor;
      break;
    }
    if (stepi == max_steps) {
      res.reason = StopReason::step_limit;
      break;
    }

    DichotomyResult dic = dichotomy(cur, consts);
    IterationStep st;
    st.step = stepi;
    st.M = M;
    st.size = cur.size();
    st.delta = delta;
    st.outcome = dic.kind;
    if (dic.kind == DichotomyKind::random_like) {
      st.count = dic.count;
      st.threshold = dic.threshold;
      st.witness_d = diffset::has_monomial_difference(cur);
      res.steps.push_back(std::move(st));
      res.reason = StopReason::witness_found;
      break;
    }
    if (dic.kind == DichotomyKind::undecided) {
      res.steps.push_back(std::move(st));
      res.reason = StopReason::undecided;
      break;
    }
    const IncrementGrid& inc = *dic.increment;
    st.grid = inc.grid;
    st.density_next = inc.density;
    st.m_ratio_ok =
        BigRat(inc.grid.L) >= consts.c * pow_rat(delta, static_cast<unsigned>(2 * k + 1)) * M;
    st.delta_ratio_ok = inc.density >= delta + consts.c * pow_rat(delta, static_cast<unsigned>(k));
    res.steps.push_back(std::move(st));
    Subproblem sub = rescale_to_subproblem(cur, inc.grid);
    cur = std::move(sub.next);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Density bound solver

BoundReport bound_calculator(std::int64_t M, int k, double C) {
  DSL_REQUIRE(M >= 16, errc::invalid_argument, "bound_calculator: need M >= 16");
  DSL_REQUIRE(k >= 2 && k <= 16, errc::invalid_argument, "bound_calculator: k out of range");
  DSL_REQUIRE(C > 0 && std::isfinite(C), errc::invalid_argument,
              "bound_calculator: constant must be positive");
  double lm = std::log(static_cast<double>(M));
  auto lhs = [&](double d) {
    return C * std::pow(d, -static_cast<double>(k - 1)) * std::log(1.0 / d);
  };
  // lhs is strictly decreasing on (0, 1), so bisection is safe.
  double lo = 1e-18, hi = 1.0 - 1e-18;
  while (hi - lo > 1e-12) {
    double mid = 0.5 * (lo + hi);
    if (lhs(mid) >= lm)
      lo = mid;
    else
      hi = mid;
  }
  BoundReport out;
  out.delta_star = lo;
  out.closed_form = std::pow(std::log(lm) / lm, 1.0 / (k - 1));
  out.ratio = out.delta_star / out.closed_form;
  return out;
}

}  // namespace dsl::increment
