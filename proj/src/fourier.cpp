#include "diffsetlab/fourier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "diffsetlab/kernels.hpp"

namespace dsl::fourier {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

/* Neumaier update, same discipline as the kernels. */
inline void acc(double& s, double& c, double y) {
  double t = s + y;
  if (std::fabs(s) >= std::fabs(y))
    c += (s - t) + y;
  else
    c += (y - t) + s;
  s = t;
}

}  // namespace

// ---------------------------------------------------------------------------
// EmbeddingGroup

EmbeddingGroup EmbeddingGroup::for_box(int k, std::int64_t M,
                                       const std::optional<BigRat>& eta,
                                       std::int64_t max_cells) {
  DSL_REQUIRE(k >= 1 && k <= 16, errc::invalid_argument, "embedding group: k out of range");
  DSL_REQUIRE(M >= 1, errc::invalid_argument, "embedding group: M must be >= 1");
  if (eta) DSL_REQUIRE(*eta > 0 && *eta <= 1, errc::invalid_argument, "embedding group: eta must be in (0,1]");
  EmbeddingGroup g;
  g.k = k;
  g.M = M;
  g.eta = eta;
  BigInt cells = 1;
  for (int j = 1; j <= k; ++j) {
    std::int64_t Mj = pow_i64_checked(M, static_cast<unsigned>(j));
    DSL_REQUIRE(Mj <= (std::numeric_limits<std::int64_t>::max() - 1) / 2, errc::resource_limit,
                "embedding group: axis length overflows");
    std::int64_t need = 2 * Mj + 1;
    if (eta) {
      BigInt res = ceil_rat(BigRat(Mj) / pow_rat(*eta, static_cast<unsigned>(k)));
      if (res > need) need = to_i64(res);
    }
    std::int64_t Tj = next_pow2(need);
    g.T.push_back(Tj);
    cells *= Tj;
    DSL_REQUIRE(cells <= max_cells, errc::resource_limit,
                "embedding group exceeds the cell budget (" + std::to_string(max_cells) +
                    " cells); reduce M or raise the budget");
  }
  return g;
}

std::int64_t EmbeddingGroup::cells() const {
  std::int64_t c = 1;
  for (std::int64_t t : T) c *= t;  // bounded by the construction budget
  return c;
}

std::int64_t EmbeddingGroup::flat_index(const std::int64_t* m) const {
  std::int64_t idx = 0;
  for (int j = 0; j < k; ++j) {
    // T_j is a power of two, so masking gives the nonnegative residue.
    std::int64_t r = m[j] & (T[static_cast<std::size_t>(j)] - 1);
    idx = idx * T[static_cast<std::size_t>(j)] + r;
  }
  return idx;
}

void EmbeddingGroup::unflatten(std::int64_t flat, std::int64_t* out) const {
  for (int j = k - 1; j >= 0; --j) {
    std::int64_t t = T[static_cast<std::size_t>(j)];
    out[j] = flat & (t - 1);
    flat >>= std::countr_zero(static_cast<std::uint64_t>(t));
  }
}

LatticeFn::LatticeFn(EmbeddingGroup g) : group(std::move(g)) {
  v.assign(static_cast<std::size_t>(group.cells()), 0.0);
}

double Spectrum::lattice_measure() const { return 1.0 / static_cast<double>(group.cells()); }

// ---------------------------------------------------------------------------
// Lattice function construction

namespace {

void require_no_wrap(const Box& box, const EmbeddingGroup& g, const char* what) {
  DSL_REQUIRE(box.k() == g.k, errc::precondition,
              std::string(what) + ": dimension mismatch with embedding group");
  for (int j = 0; j < g.k; ++j) {
    std::int64_t half = (g.T[static_cast<std::size_t>(j)] - 1) / 2;
    DSL_REQUIRE(box.hi(j) <= half && box.lo(j) >= -half, errc::precondition,
                std::string(what) + ": support would wrap around the embedding torus on axis " +
                    std::to_string(j + 1));
  }
}

}  // namespace

LatticeFn lattice_indicator(const PointSet& B, const EmbeddingGroup& g) {
  require_no_wrap(B.box(), g, "lattice_indicator");
  LatticeFn f(g);
  for (std::int64_t i = 0; i < B.size(); ++i)
    f.v[static_cast<std::size_t>(g.flat_index(B.point(i)))] = 1.0;
  return f;
}

LatticeFn lattice_curve(const MonomialCurveWindow& S, const EmbeddingGroup& g) {
  DSL_REQUIRE(S.k == g.k, errc::precondition, "lattice_curve: dimension mismatch");
  LatticeFn f(g);
  std::int64_t D = S.length();
  for (std::int64_t d = 1; d <= D; ++d) {
    std::vector<std::int64_t> p = S.point(d);
    for (int j = 0; j < g.k; ++j)
      DSL_REQUIRE(p[static_cast<std::size_t>(j)] <= (g.T[static_cast<std::size_t>(j)] - 1) / 2,
                  errc::precondition, "lattice_curve: curve point would wrap on axis " +
                                          std::to_string(j + 1));
    f.v[static_cast<std::size_t>(g.flat_index(p.data()))] = 1.0;
  }
  return f;
}

BalanceFunction balance_function(const PointSet& B, const EmbeddingGroup& g) {
  DSL_REQUIRE(B.box().mode() == BoxMode::box, errc::precondition,
              "balance_function: expects an anisotropic box set");
  require_no_wrap(B.box(), g, "balance_function");
  const Box& box = B.box();
  BigInt vol = box.volume();
  DSL_REQUIRE(vol <= (std::int64_t{1} << 26), errc::resource_limit,
              "balance_function: box too large to walk");
  BalanceFunction out{LatticeFn(g), B.density(), vol, BigInt(B.size()), 0, 0};
  double on_val = rat_to_double(BigRat(vol - B.size(), vol));
  double off_val = -rat_to_double(out.delta);
  // Walk the box cells in lexicographic order; membership from the sorted set.
  std::vector<std::int64_t> m(static_cast<std::size_t>(box.k()));
  for (int j = 0; j < box.k(); ++j) m[static_cast<std::size_t>(j)] = box.lo(j);
  bool done = false;
  while (!done) {
    if (B.contains(m.data())) {
      out.fn.at(m.data()) = on_val;
      ++out.cells_on;
    } else {
      out.fn.at(m.data()) = off_val;
      ++out.cells_off;
    }
    int axis = box.k() - 1;
    while (axis >= 0) {
      if (++m[static_cast<std::size_t>(axis)] <= box.hi(axis)) break;
      m[static_cast<std::size_t>(axis)] = box.lo(axis);
      --axis;
    }
    done = axis < 0;
  }
  return out;
}

BigInt BalanceFunction::sum_scaled() const {
  // cells_on carries weight |Q|-|B|, cells_off carries -|B|.
  return cells_on * (box_volume - set_size) - cells_off * set_size;
}

BigRat BalanceFunction::sum_exact() const { return BigRat(sum_scaled(), box_volume); }

BigRat BalanceFunction::l2_norm_exact() const {
  BigInt on = box_volume - set_size;
  return BigRat(cells_on * on * on + cells_off * set_size * set_size, box_volume * box_volume);
}

// ---------------------------------------------------------------------------
// FFT core: iterative radix-2 with per-stage twiddle tables, one plan per
// axis, shared by every row of that axis. Strictly sequential.

namespace {

struct FftPlan {
  std::size_t n;
  std::vector<std::uint32_t> rev;
  std::vector<cplx> tw;  // stage tables for len = 2, 4, ..., n, concatenated

  FftPlan(std::size_t n_, bool inverse) : n(n_) {
    rev.resize(n);
    for (std::size_t i = 1, j = 0; i < n; ++i) {
      std::size_t bit = n >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j |= bit;
      rev[i] = static_cast<std::uint32_t>(j);
    }
    tw.reserve(n > 1 ? n - 1 : 0);
    for (std::size_t len = 2; len <= n; len <<= 1) {
      double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
      for (std::size_t j = 0; j < len / 2; ++j)
        tw.push_back(std::polar(1.0, ang * static_cast<double>(j)));
    }
  }

  void run(cplx* a) const {
    for (std::size_t i = 1; i < n; ++i) {
      std::size_t j = rev[i];
      if (i < j) std::swap(a[i], a[j]);
    }
    std::size_t toff = 0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
      std::size_t half = len / 2;
      for (std::size_t i = 0; i < n; i += len) {
        for (std::size_t j = 0; j < half; ++j) {
          cplx u = a[i + j];
          cplx w = tw[toff + j] * a[i + j + half];
          a[i + j] = u + w;
          a[i + j + half] = u - w;
        }
      }
      toff += half;
    }
  }
};

void transform_axes(std::vector<cplx>& data, const EmbeddingGroup& g, bool inverse) {
  std::size_t cells = data.size();
  std::vector<cplx> scratch;
  std::size_t stride = 1;
  for (int axis = g.k - 1; axis >= 0; --axis) {
    std::size_t n = static_cast<std::size_t>(g.T[static_cast<std::size_t>(axis)]);
    FftPlan plan(n, inverse);
    if (stride == 1) {
      for (std::size_t r = 0; r < cells; r += n) plan.run(data.data() + r);
    } else {
      scratch.resize(n);
      std::size_t block = stride * n;
      for (std::size_t outer = 0; outer < cells; outer += block) {
        for (std::size_t inner = 0; inner < stride; ++inner) {
          cplx* base = data.data() + outer + inner;
          for (std::size_t t = 0; t < n; ++t) scratch[t] = base[t * stride];
          plan.run(scratch.data());
          for (std::size_t t = 0; t < n; ++t) base[t * stride] = scratch[t];
        }
      }
    }
    stride *= n;
  }
}

}  // namespace

Spectrum dft(const LatticeFn& f) {
  std::vector<cplx> buf(f.v.begin(), f.v.end());
  transform_axes(buf, f.group, false);
  return Spectrum{f.group, std::move(buf)};
}

LatticeFn idft(const Spectrum& s) {
  std::vector<cplx> buf = s.v;
  transform_axes(buf, s.group, true);
  double norm = s.lattice_measure();
  LatticeFn f(s.group);
  for (std::size_t i = 0; i < buf.size(); ++i) f.v[i] = buf[i].real() * norm;
  return f;
}

// ---------------------------------------------------------------------------
// Weyl sums

namespace {

std::int64_t window_length(std::int64_t M, const BigRat& eps) {
  DSL_REQUIRE(eps > 0, errc::invalid_argument, "weyl_sum: eps must be positive");
  std::int64_t D = to_i64(floor_rat(BigRat(eps) * M));
  DSL_REQUIRE(D >= 1, errc::precondition, "weyl_sum: empty window (floor(eps*M) = 0)");
  DSL_REQUIRE(D <= (std::int64_t{1} << 28), errc::resource_limit, "weyl_sum: window too long");
  return D;
}

cplx phase_sum_of_turns(const std::vector<double>& turns) {
  double re = 0, im = 0;
  kern::active_backend().phase_sum(turns.data(), turns.size(), &re, &im);
  return {re, im};
}

}  // namespace

cplx weyl_sum(const std::vector<double>& alpha, std::int64_t M, const BigRat& eps) {
  int k = static_cast<int>(alpha.size());
  DSL_REQUIRE(k >= 1 && k <= 16, errc::invalid_argument, "weyl_sum: k out of range");
  std::int64_t D = window_length(M, eps);
  std::vector<double> turns(static_cast<std::size_t>(D));
  for (std::int64_t d = 1; d <= D; ++d) {
    unsigned __int128 p = 1;
    double t = 0.0;
    for (int j = 0; j < k; ++j) {
      unsigned __int128 prev = p;
      p *= static_cast<unsigned __int128>(d);
      DSL_REQUIRE(p / static_cast<unsigned __int128>(d) == prev, errc::resource_limit,
                  "weyl_sum: d^j overflows");
      t += phase::mulmod1(alpha[static_cast<std::size_t>(j)], p);
    }
    // Forward transform convention: the phase enters with a minus sign.
    turns[static_cast<std::size_t>(d - 1)] = phase::reduce(-t);
  }
  return phase_sum_of_turns(turns);
}

cplx weyl_sum(const std::vector<BigRat>& alpha, std::int64_t M, const BigRat& eps) {
  int k = static_cast<int>(alpha.size());
  DSL_REQUIRE(k >= 1 && k <= 16, errc::invalid_argument, "weyl_sum: k out of range");
  std::int64_t D = window_length(M, eps);
  // Residue form: alpha_j = a_j / b_j, phase of d^j is a_j * (d^j mod b_j) mod b_j.
  std::vector<std::int64_t> num(static_cast<std::size_t>(k)), den(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const BigRat& a = alpha[static_cast<std::size_t>(j)];
    BigInt b = boost::multiprecision::denominator(a);
    DSL_REQUIRE(b <= (std::int64_t{1} << 62), errc::resource_limit,
                "weyl_sum: rational frequency denominator too large");
    den[static_cast<std::size_t>(j)] = to_i64(b);
    BigInt r = boost::multiprecision::numerator(a) % b;
    if (r < 0) r += b;
    num[static_cast<std::size_t>(j)] = to_i64(r);
  }
  std::vector<double> turns(static_cast<std::size_t>(D));
  for (std::int64_t d = 1; d <= D; ++d) {
    double t = 0.0;
    for (int j = 0; j < k; ++j) {
      std::int64_t b = den[static_cast<std::size_t>(j)];
      if (b == 1) continue;
      std::int64_t p = d % b;
      __int128 acc128 = p;
      for (int e = 1; e < j + 1; ++e) acc128 = (acc128 * (d % b)) % b;
      // acc128 now holds d^{j+1} mod b; fold in the numerator.
      __int128 r = (acc128 * num[static_cast<std::size_t>(j)]) % b;
      t += phase::turn_from_residue(static_cast<std::int64_t>(r), b);
    }
    // Forward transform convention: the phase enters with a minus sign.
    turns[static_cast<std::size_t>(d - 1)] = phase::reduce(-t);
  }
  return phase_sum_of_turns(turns);
}

// ---------------------------------------------------------------------------
// Weighted pair count, direct and expanded

CountIdentity weighted_count_identity(const PointSet& B, const BigRat& eps) {
  const Box& box = B.box();
  DSL_REQUIRE(box.mode() == BoxMode::box, errc::precondition,
              "weighted_count_identity: expects an anisotropic box set");
  DSL_REQUIRE(eps > 0 && eps <= 1, errc::invalid_argument,
              "weighted_count_identity: eps must be in (0,1]");
  const int k = box.k();
  const std::int64_t M = box.scale();
  const std::int64_t D = to_i64(floor_rat(BigRat(eps) * M));
  BigInt vol = box.volume();
  DSL_REQUIRE(vol <= (std::int64_t{1} << 26), errc::resource_limit,
              "weighted_count_identity: box too large to walk");

  // Dense membership over box cells, flat lexicographic index.
  std::vector<std::int64_t> ext(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) ext[static_cast<std::size_t>(j)] = box.extent(j);
  auto box_flat = [&](const std::int64_t* m) {
    std::int64_t idx = 0;
    for (int j = 0; j < k; ++j) idx = idx * ext[static_cast<std::size_t>(j)] + (m[j] - box.lo(j));
    return idx;
  };
  std::vector<std::uint8_t> in_b(static_cast<std::size_t>(to_i64(vol)), 0);
  for (std::int64_t i = 0; i < B.size(); ++i)
    in_b[static_cast<std::size_t>(box_flat(B.point(i)))] = 1;

  const std::int64_t bsz = B.size();
  const std::int64_t on_scaled = to_i64(vol) - bsz;   // |Q| f_B on B
  const std::int64_t off_scaled = -bsz;               // |Q| f_B off B

  CountIdentity out{};
  out.pairs_bb = 0;
  out.pairs_bq = 0;
  out.pairs_qb = 0;
  out.pairs_qq = 0;
  __int128 direct_scaled = 0;

  std::vector<std::int64_t> s(static_cast<std::size_t>(k));
  std::vector<std::int64_t> m(static_cast<std::size_t>(k));
  std::vector<std::int64_t> n(static_cast<std::size_t>(k));
  for (std::int64_t d = 1; d <= D; ++d) {
    for (int j = 0; j < k; ++j)
      s[static_cast<std::size_t>(j)] = pow_i64_checked(d, static_cast<unsigned>(j + 1));
    // Pair counts against the curve shift s.
    BigInt qq = 1;
    bool empty = false;
    for (int j = 0; j < k; ++j) {
      std::int64_t span = ext[static_cast<std::size_t>(j)] - s[static_cast<std::size_t>(j)];
      if (span <= 0) {
        empty = true;
        break;
      }
      qq *= span;
    }
    if (!empty) out.pairs_qq += qq;
    for (std::int64_t i = 0; i < bsz; ++i) {
      const std::int64_t* b = B.point(i);
      bool minus_in_box = true, plus_in_box = true;
      for (int j = 0; j < k; ++j) {
        std::int64_t mj = b[j] - s[static_cast<std::size_t>(j)];
        std::int64_t pj = b[j] + s[static_cast<std::size_t>(j)];
        if (mj < box.lo(j)) minus_in_box = false;
        if (pj > box.hi(j)) plus_in_box = false;
        m[static_cast<std::size_t>(j)] = mj;
      }
      if (minus_in_box) {
        ++out.pairs_bq;
        if (in_b[static_cast<std::size_t>(box_flat(m.data()))]) ++out.pairs_bb;
      }
      if (plus_in_box) ++out.pairs_qb;
    }
    if (empty) continue;
    // Direct sum over the overlap region, scaled by |Q|^2.
    for (int j = 0; j < k; ++j)
      m[static_cast<std::size_t>(j)] = box.lo(j) + s[static_cast<std::size_t>(j)];
    bool done = false;
    while (!done) {
      for (int j = 0; j < k; ++j)
        n[static_cast<std::size_t>(j)] = m[static_cast<std::size_t>(j)] - s[static_cast<std::size_t>(j)];
      std::int64_t fm = in_b[static_cast<std::size_t>(box_flat(m.data()))] ? on_scaled : off_scaled;
      std::int64_t fn = in_b[static_cast<std::size_t>(box_flat(n.data()))] ? on_scaled : off_scaled;
      direct_scaled += static_cast<__int128>(fm) * fn;
      int axis = k - 1;
      while (axis >= 0) {
        if (++m[static_cast<std::size_t>(axis)] <= box.hi(axis)) break;
        m[static_cast<std::size_t>(axis)] = box.lo(axis) + s[static_cast<std::size_t>(axis)];
        --axis;
      }
      done = axis < 0;
    }
  }

  BigInt ds = 0;
  {
    // __int128 -> BigInt via two 64-bit halves.
    unsigned __int128 mag = direct_scaled < 0 ? static_cast<unsigned __int128>(-direct_scaled)
                                              : static_cast<unsigned __int128>(direct_scaled);
    ds = BigInt(static_cast<std::uint64_t>(mag >> 64));
    ds <<= 64;
    ds += static_cast<std::uint64_t>(mag);
    if (direct_scaled < 0) ds = -ds;
  }
  out.direct = BigRat(ds, vol * vol);
  BigRat delta(BigInt(bsz), vol);
  out.four_term = BigRat(out.pairs_bb) - delta * BigRat(out.pairs_bq + out.pairs_qb) +
                  delta * delta * BigRat(out.pairs_qq);
  return out;
}

// ---------------------------------------------------------------------------
// Spectral pair count

SpectralCount spectral_correlation(const Spectrum& fhat, const Spectrum& shat) {
  DSL_REQUIRE(fhat.group.T == shat.group.T, errc::precondition,
              "spectral_correlation: spectra live on different groups");
  double sv = 0, cv = 0, sa = 0, ca = 0;
  for (std::size_t i = 0; i < fhat.v.size(); ++i) {
    double w = std::norm(fhat.v[i]);
    acc(sv, cv, w * shat.v[i].real());
    acc(sa, ca, w * std::abs(shat.v[i]));
  }
  double measure = fhat.lattice_measure();
  return {(sv + cv) * measure, (sa + ca) * measure};
}

SpectralCount spectral_count(const PointSet& B, const BigRat& eps, std::int64_t max_cells) {
  const Box& box = B.box();
  DSL_REQUIRE(box.mode() == BoxMode::box, errc::precondition,
              "spectral_count: expects an anisotropic box set");
  EmbeddingGroup g = EmbeddingGroup::for_box(box.k(), box.scale(), std::nullopt, max_cells);
  BalanceFunction f = balance_function(B, g);
  MonomialCurveWindow S{box.k(), box.scale(), eps};
  Spectrum fhat = dft(f.fn);
  Spectrum shat = dft(lattice_curve(S, g));
  return spectral_correlation(fhat, shat);
}

// ---------------------------------------------------------------------------
// Export

std::pair<std::string, std::string> write_spectrum(const Spectrum& s, const std::string& base_path) {
  static_assert(std::endian::native == std::endian::little,
                "spectrum export assumes a little-endian host");
  std::string bin = base_path + ".bin";
  std::string side = base_path + ".json";
  {
    std::ofstream out(bin, std::ios::binary);
    DSL_REQUIRE(out.good(), errc::invalid_argument, "cannot write spectrum: " + bin);
    out.write(reinterpret_cast<const char*>(s.v.data()),
              static_cast<std::streamsize>(s.v.size() * sizeof(cplx)));
    DSL_REQUIRE(out.good(), errc::resource_limit, "spectrum write failed: " + bin);
  }
  {
    nlohmann::json j;
    j["T"] = s.group.T;
    j["k"] = s.group.k;
    j["M"] = s.group.M;
    if (s.group.eta)
      j["eta"] = s.group.eta->str();
    else
      j["eta"] = nullptr;
    std::ofstream out(side);
    DSL_REQUIRE(out.good(), errc::invalid_argument, "cannot write spectrum sidecar: " + side);
    out << j.dump(2) << '\n';
  }
  return {bin, side};
}

std::vector<std::pair<double, std::int64_t>> magnitude_histogram(const Spectrum& s, int bins) {
  DSL_REQUIRE(bins >= 1, errc::invalid_argument, "magnitude_histogram: bins must be >= 1");
  double maxmag = 0;
  for (const cplx& z : s.v) maxmag = std::max(maxmag, std::abs(z));
  std::vector<std::pair<double, std::int64_t>> hist(static_cast<std::size_t>(bins));
  double width = maxmag > 0 ? maxmag / bins : 1.0;
  for (int i = 0; i < bins; ++i) hist[static_cast<std::size_t>(i)] = {width * (i + 1), 0};
  for (const cplx& z : s.v) {
    auto idx = static_cast<std::size_t>(
        std::min<double>(bins - 1, std::floor(std::abs(z) / width)));
    ++hist[idx].second;
  }
  return hist;
}

}  // namespace dsl::fourier
