#include "thouless/floquet.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>

#include "thouless/errors.hpp"
#include "thouless/rng.hpp"
#include "thouless/transfer.hpp"

namespace thouless {

FloquetPhase FloquetPhase::from_units(double units) {
  if (!std::isfinite(units)) throw ValidationError("Floquet phase must be finite");
  double r = std::fmod(units, 2.0);
  if (r < 0.0) r += 2.0;
  if (r >= 2.0) r = 0.0;
  return FloquetPhase(r);
}

FloquetPhase FloquetPhase::from_kappa(double kappa, int q) {
  return from_units(kappa * static_cast<double>(q) / std::numbers::pi);
}

double FloquetPhase::kappa(int q) const { return units_ * std::numbers::pi / q; }

BigReal FloquetPhase::kappa(int q, int bits) const {
  BigReal k = BigReal::pi(bits);
  k *= units_;
  k /= static_cast<double>(q);
  return k;
}

BigReal FloquetPhase::target(int bits) const {
  // cos(pi u) is even about u = 1, so fold to [0, 1] first; kappa and -kappa
  // then give bit-identical targets.
  const double u = units_ <= 1.0 ? units_ : 2.0 - units_;
  if (u == 0.0) return BigReal(2.0, bits);
  if (u == 1.0) return BigReal(-2.0, bits);
  if (u == 0.5) return BigReal(0.0, bits);
  BigReal t = BigReal::pi(bits);
  t *= u;
  return cos(t) * 2.0;
}

double Band::log_width_rate(int q) const {
  const BigReal w = width();
  if (w.sign() <= 0) return std::numeric_limits<double>::infinity();
  return -w.log_abs() / q;
}

BigReal discriminant(const PotentialSeq& V, const BigReal& E) {
  DiscriminantKernel k(V, E.bits());
  return k.delta(E);
}

BigReal char_poly_value(const PotentialSeq& V, const BigReal& E, FloquetPhase kappa) {
  DiscriminantKernel k(V, E.bits());
  BigReal out(E.bits());
  k.eval(E, kappa.target(E.bits()), out);
  if (V.period() % 2 == 1) out = -out;
  return out;
}

namespace {

int sturm_count(std::span<const double> v, int first, int last, double x) {
  constexpr double pivmin = DBL_MIN;
  int count = 0;
  double d = 1.0;
  for (int k = first; k <= last; ++k) {
    d = (v[static_cast<std::size_t>(k)] - x) - (k == first ? 0.0 : 1.0 / d);
    if (std::fabs(d) < pivmin) d = -pivmin;
    if (d < 0.0) ++count;
  }
  return count;
}

/// Sign of the discriminant in the gap to the right of band j (j = 0 is left of band 1).
int gap_sign(int q, int j) { return (q - j) % 2 == 0 ? 1 : -1; }

void negate_if(BigReal& x, int s) {
  if (s < 0) mpfr_neg(x.raw(), x.raw(), MPFR_RNDN);
}

bool below_noise(const BigReal& f, double log2_err) {
  return f.is_zero() || f.log_abs() / std::numbers::ln2 <= log2_err;
}

/// Safeguarded Newton iteration for an oriented function with f(lo) <= 0 <= f(hi).
/// eval(x, f, df) returns log2 of the error bound on f. A Newton step is taken
/// when it stays inside the bracket and, unless it follows a bisection, at
/// least halves the previous step; otherwise the bracket is bisected. Stops
/// when |f| is below `stop_below` or the noise level, or when the step drops
/// below xtol or below the resolution noise / |f'|.
template <class Eval>
BigReal newton_root(Eval&& eval, BigReal lo, BigReal hi, const BigReal& start, const BigReal& xtol,
                    double stop_below, double* log2_err) {
  const int bits = lo.bits();
  BigReal x = start, f(bits), df(bits), cand(bits), dx(bits), dxprev = hi - lo, res(bits);
  double err = eval(x, f, df);
  bool after_bisect = true;
  const auto resolution = [&] {
    // The root is only determined to within noise / |f'|.
    res = ldexp(BigReal(1.0, bits), static_cast<long>(std::ceil(err)) + 2) / abs(df);
    return res > xtol ? res : xtol;
  };
  for (int it = 0; it < 4 * bits; ++it) {
    if (below_noise(f, err) || (stop_below > 0.0 && abs(f) < stop_below)) break;
    if (f.sign() < 0)
      lo = x;
    else
      hi = x;
    bool bisect = df.is_zero();
    if (!bisect) {
      cand = x - f / df;
      dx = abs(x - cand);
      if (dx <= resolution()) {
        if (cand > lo && cand < hi) x = cand;
        err = eval(x, f, df);
        break;
      }
      bisect = !(cand > lo && cand < hi) || (!after_bisect && dx > dxprev / 2.0);
    }
    if (bisect) {
      cand = (lo + hi) / 2.0;
      dx = abs(x - cand);
      if (dx <= xtol) break;
    }
    after_bisect = bisect;
    x = cand;
    dxprev = dx;
    err = eval(x, f, df);
  }
  if (log2_err) *log2_err = err;
  return x;
}

struct Located {
  double x;
  double lo, hi;
  bool lo_moved = false, hi_moved = false;
};

/// Double-precision pass of the same safeguarded Newton iteration on
/// f = s (Delta - t), run until the sign of f is no longer resolved. The
/// returned bracket ends are moved only to points whose sign was resolved.
Located locate_double(const PotentialSeq& V, int s, double t, double lo, double hi, double stop_below) {
  Located r{0.5 * (lo + hi), lo, hi};
  double dxprev = hi - lo;
  bool after_bisect = true;
  for (int it = 0; it < 400; ++it) {
    const auto d = discriminant_scaled(V, r.x, t);
    if (!d.resolved()) break;
    if (stop_below > 0.0 && d.log2_abs() < std::log2(stop_below)) break;
    const double fm = s * d.value, dfm = s * d.derivative;
    if (fm < 0.0) {
      r.lo = r.x;
      r.lo_moved = true;
    } else {
      r.hi = r.x;
      r.hi_moved = true;
    }
    double cand = dfm != 0.0 ? r.x - fm / dfm : r.lo;
    const bool bisect = !(cand > r.lo && cand < r.hi) || (!after_bisect && std::fabs(r.x - cand) > dxprev / 2.0);
    if (bisect) cand = 0.5 * (r.lo + r.hi);
    if (!(cand > r.lo && cand < r.hi)) break;
    after_bisect = bisect;
    dxprev = std::fabs(r.x - cand);
    r.x = cand;
  }
  return r;
}

BigReal rel_tol(const BigReal& a, const BigReal& b, int bits, int guard) {
  BigReal m = abs(a);
  BigReal mb = abs(b);
  if (mb > m) m = mb;
  if (m < 1.0) m = 1.0;
  return ldexp(m, -(bits - guard));
}

struct Separator {
  BigReal mu;
  bool closed = false;
};

/// The j-th Dirichlet eigenvalue of sites 1..q-1 in multiprecision. Sturm
/// counts isolate it and Newton on the Dirichlet determinant polishes it.
BigReal refine_separator(DiscriminantKernel& k, int j, double guess, double hull) {
  const int bits = k.bits();
  const int q = k.potential().period();
  const auto count = [&](const BigReal& x) { return k.dirichlet_count(x, 1, q - 1); };
  const double pad = 1e-9 * (1.0 + std::fabs(guess));
  BigReal lo(guess - pad, bits), hi(guess + pad, bits);
  int clo = count(lo), chi = count(hi);
  if (clo >= j) lo = -hull, clo = 0;
  if (chi < j) hi = hull, chi = q - 1;
  const BigReal tol = rel_tol(lo, hi, bits, 4);
  const auto bisect_to = [&](const auto& done) {
    while (!done() && hi - lo > tol) {
      BigReal mid = (lo + hi) / 2.0;
      const int c = count(mid);
      if (c >= j)
        hi = std::move(mid), chi = c;
      else
        lo = std::move(mid), clo = c;
    }
  };
  bisect_to([&] { return clo == j - 1 && chi == j; });

  BigReal f(bits), df(bits);
  k.dirichlet_det(lo, 1, q - 1, f, df);
  const int slo = f.sign();
  k.dirichlet_det(hi, 1, q - 1, f, df);
  const int shi = f.sign();
  if (slo * shi >= 0) {
    bisect_to([] { return false; });
    return (lo + hi) / 2.0;
  }
  const auto det = [&k, q, shi](const BigReal& E, BigReal& out, BigReal& dout) {
    const double err = k.dirichlet_det(E, 1, q - 1, out, dout);
    negate_if(out, shi);
    negate_if(dout, shi);
    return err;
  };
  BigReal start(guess, bits);
  if (!(start > lo && start < hi)) start = (lo + hi) / 2.0;
  return newton_root(det, lo, hi, start, tol, 0.0, nullptr);
}

/// mu sits on a root of s Delta = 2. A simple root is the edge of an open gap
/// and the separator is moved into the gap interior, where s Delta > 2 is
/// resolved; otherwise the gap is closed at mu.
Separator step_into_gap(DiscriminantKernel& k, BigReal mu, int s, double hull) {
  const int bits = k.bits();
  const BigReal target(2.0 * s, bits);
  BigReal f(bits), df(bits);
  const double err = k.eval(mu, target, f, df).log2_err;
  negate_if(df, s);
  if (df.is_zero()) return {std::move(mu), true};
  BigReal h = ldexp(BigReal(1.0, bits), static_cast<long>(std::ceil(err)) + 4) / abs(df);
  const int dir = df.sign();
  BigReal x(bits);
  for (int i = 0; i < 4 * bits && h < hull; ++i, h *= 2.0) {
    x = dir > 0 ? mu + h : mu - h;
    const double e = k.eval(x, target, f).log2_err;
    negate_if(f, s);
    if (below_noise(f, e)) continue;
    if (f.sign() > 0) return {std::move(x), false};
    break;
  }
  return {std::move(mu), true};
}

Spectrum spectrum_at(const PotentialSeq& V, const std::vector<double>& mu, int bits, Exec exec) {
  const int q = V.period();
  const double hull = 2.0 + V.max_abs() + 1.0;

  // Gap separators, validated in multiprecision.
  auto seps = parallel_map<Separator>(exec, static_cast<std::size_t>(std::max(q - 1, 0)), [&](std::size_t i) {
    const int j = static_cast<int>(i) + 1;
    const int s = gap_sign(q, j);
    DiscriminantKernel k(V, bits);
    BigReal x(mu[i], bits), f(bits);
    auto v = k.eval(x, 2.0 * s, f);
    negate_if(f, s);
    const auto noise = [&] { return below_noise(f, v.log2_err); };
    if (f.sign() > 0 && !noise()) return Separator{std::move(x), false};
    if (noise()) return step_into_gap(k, std::move(x), s, hull);
    x = refine_separator(k, j, mu[i], hull);
    v = k.eval(x, 2.0 * s, f);
    negate_if(f, s);
    if (f.sign() > 0 && !noise()) return Separator{std::move(x), false};
    const double tol = std::max(v.log2_err, -bits / 2.0);
    if (f.is_zero() || f.log_abs() / std::numbers::ln2 <= tol) return step_into_gap(k, std::move(x), s, hull);
    // A Dirichlet eigenvalue never lies inside a band, so a resolved wrong sign
    // means the separator itself was not computed accurately enough.
    throw PrecisionExhausted("gap between bands " + std::to_string(j) + " and " + std::to_string(j + 1) +
                                 " could not be certified at " + std::to_string(bits) + " bits: |Delta| - 2 = " +
                                 f.to_string(6) + " at the Dirichlet eigenvalue " + x.to_string(20),
                             bits, bits + bits / 2);
  });

  struct BandResult {
    Band band;
    double log2_err;
  };
  auto results = parallel_map<BandResult>(exec, static_cast<std::size_t>(q), [&](std::size_t i) {
    const int j = static_cast<int>(i) + 1;
    const int s = gap_sign(q, j);
    DiscriminantKernel k(V, bits);
    const BigReal lo = j == 1 ? BigReal(-hull, bits) : seps[i - 1].mu;
    const BigReal hi = j == q ? BigReal(hull, bits) : seps[i].mu;
    const bool closed_lo = j > 1 && seps[i - 1].closed;
    const bool closed_hi = j < q && seps[i].closed;

    // f_t(E) = s (Delta(E) - t) increases through the band.
    const auto make = [&](double t) {
      return [&k, s, t = BigReal(t, bits)](const BigReal& E, BigReal& out, BigReal& dout) {
        const auto v = k.eval(E, t, out, dout);
        negate_if(out, s);
        negate_if(dout, s);
        return v.log2_err;
      };
    };
    BigReal f(bits), df(bits);
    const BigReal xtol = rel_tol(lo, hi, bits, 8);

    // An interior point with |Delta| < 1 splits the bracket.
    auto f0 = make(0.0);
    const Located loc = locate_double(V, s, 0.0, lo.to_double(), hi.to_double(), 1.0);
    const BigReal mlo = loc.lo_moved ? BigReal(loc.lo, bits) : lo;
    const BigReal mhi = loc.hi_moved ? BigReal(loc.hi, bits) : hi;
    BigReal mid = newton_root(f0, mlo, mhi, BigReal(loc.x, bits), xtol, 1.0, nullptr);

    Band b;
    b.index = j;
    double worst = -1e9;
    if (closed_lo) {
      b.left = lo;
      b.closed_left = true;
      worst = std::max(worst, f0(lo, f, df));
    } else {
      auto fl = make(-2.0 * s);
      double err = 0.0;
      b.left = newton_root(fl, lo, mid, mid, xtol, 0.0, &err);
      worst = std::max(worst, err);
    }
    if (closed_hi) {
      b.right = hi;
      b.closed_right = true;
      worst = std::max(worst, f0(hi, f, df));
    } else {
      auto fr = make(2.0 * s);
      double err = 0.0;
      b.right = newton_root(fr, mid, hi, mid, xtol, 0.0, &err);
      worst = std::max(worst, err);
    }
    return BandResult{std::move(b), worst};
  });

  Spectrum sp{V, bits, {}, {}, -1e9};
  for (auto& r : results) {
    sp.log2_err = std::max(sp.log2_err, r.log2_err);
    sp.bands.push_back(std::move(r.band));
  }
  for (auto& s : seps) sp.separators.push_back(std::move(s.mu));
  if (sp.log2_err > -20.0)
    throw PrecisionExhausted("discriminant error 2^" + std::to_string(static_cast<int>(sp.log2_err)) +
                                 " at the band edges exceeds 2^-20 at " + std::to_string(bits) + " bits",
                             bits, bits + static_cast<int>(std::ceil(sp.log2_err)) + 40);
  return sp;
}

}  // namespace

std::vector<double> dirichlet_eigenvalues(const PotentialSeq& V, int first, int last, Exec exec) {
  const int n = last - first + 1;
  if (n <= 0) return {};
  if (first < 0 || last >= V.period()) throw ValidationError("Dirichlet range outside the period");
  const auto v = V.values();
  const double hull = 2.0 + V.max_abs() + 1.0;
  return parallel_map<double>(exec, static_cast<std::size_t>(n), [&](std::size_t i) {
    // i-th eigenvalue: the smallest x with count(x) > i.
    double lo = -hull, hi = hull;
    const int target = static_cast<int>(i) + 1;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (sturm_count(v, first, last, mid) >= target)
        hi = mid;
      else
        lo = mid;
    }
    return 0.5 * (lo + hi);
  });
}

Spectrum compute_spectrum(const PotentialSeq& V, SpectrumOptions opt) {
  const int q = V.period();
  const auto mu = dirichlet_eigenvalues(V, 1, q - 1, opt.exec);
  const bool automatic = opt.bits == 0;
  int bits = opt.bits;
  if (automatic) {
    std::vector<double> probes = mu;
    if (probes.empty()) probes.push_back(V[0]);
    bits = required_bits(pilot_gamma_max(V, probes), q);
  }
  if (bits < BigReal::kMinBits) throw ValidationError("precision must be at least 64 bits");
  for (;;) {
    try {
      return spectrum_at(V, mu, bits, opt.exec);
    } catch (const PrecisionExhausted&) {
      if (!automatic || bits >= opt.max_bits) throw;
      bits = std::min(opt.max_bits, bits + bits / 2);
    }
  }
}

std::vector<Band> bands(const PotentialSeq& V, int bits, Exec exec) {
  return compute_spectrum(V, {bits, exec}).bands;
}

BigReal band_eigenvalue(const Spectrum& s, int band, FloquetPhase kappa) {
  const int q = s.q();
  if (band < 1 || band > q) throw ValidationError("band index " + std::to_string(band) + " outside 1.." + std::to_string(q));
  const int bits = s.bits;
  const BigReal t = kappa.target(bits);
  const double td = t.to_double();
  const Band& b = s.bands[static_cast<std::size_t>(band - 1)];
  const int sg = gap_sign(q, b.index);
  if (std::fabs(td) == 2.0) return td == -2.0 * sg ? b.left : b.right;
  if (b.left == b.right) return b.left;
  DiscriminantKernel k(s.potential, bits);
  auto f = [&](const BigReal& E, BigReal& o, BigReal& d) {
    const auto v = k.eval(E, t, o, d);
    negate_if(o, sg);
    negate_if(d, sg);
    return v.log2_err;
  };
  BigReal flo(bits), fhi(bits), d(bits);
  const double elo = f(b.left, flo, d);
  const double ehi = f(b.right, fhi, d);
  if (flo.sign() >= 0 || below_noise(flo, elo)) return b.left;
  if (fhi.sign() <= 0 || below_noise(fhi, ehi)) return b.right;
  const BigReal xtol = rel_tol(b.left, b.right, bits, 8);
  return newton_root(f, b.left, b.right, b.center(), xtol, 0.0, nullptr);
}

std::vector<BigReal> eigenvalues(const Spectrum& s, FloquetPhase kappa, Exec exec) {
  // Each eigenvalue lies in its own band and the bands are sorted, so band
  // order is already ascending.
  return parallel_map<BigReal>(exec, static_cast<std::size_t>(s.q()),
                               [&](std::size_t i) { return band_eigenvalue(s, static_cast<int>(i) + 1, kappa); });
}

std::vector<BigReal> thouless_sensitivity(const Spectrum& s, Exec exec) {
  const int q = s.q();
  std::vector<BigReal> out;
  out.reserve(static_cast<std::size_t>(q));
  const auto e0 = eigenvalues(s, FloquetPhase::periodic(), exec);
  const auto e1 = eigenvalues(s, FloquetPhase::antiperiodic(), exec);
  for (int j = 0; j < q; ++j) out.push_back(abs(e0[static_cast<std::size_t>(j)] - e1[static_cast<std::size_t>(j)]));
  return out;
}

// ---------------------------------------------------------------------------
// Eigenvectors

namespace {

/// A(kappa) - E on sites r, r+1, ..., r+q-1 (mod q), factored as a tridiagonal
/// part with partial pivoting plus the two corner entries handled by a rank-2
/// Woodbury correction.
class CyclicSolver {
 public:
  CyclicSolver(const PotentialSeq& V, const BigComplex& w, const BigReal& E, int r)
      : n_(V.period()), bits_(E.bits()), w_(w), cw_(w.conj()) {
    const auto n = static_cast<std::size_t>(n_);
    d_.reserve(n);
    for (int i = 0; i < n_; ++i) {
      BigReal re(bits_);
      sub(re, E, V.at(r + i));
      mpfr_neg(re.raw(), re.raw(), MPFR_RNDN);
      d_.emplace_back(std::move(re), BigReal(bits_));
    }
    if (n_ == 1) {
      // A = V + 2 cos(kappa)
      d_[0] += w_;
      d_[0] += cw_;
      perturb(d_[0]);
      return;
    }
    dl_.assign(n - 1, w_);
    du_.assign(n - 1, cw_);
    du2_.assign(n >= 2 ? n - 2 : 0, BigComplex(bits_));
    ipiv_.assign(n, 0);
    factor();
    z0_ = unit(0);
    solve_tridiagonal(z0_);
    z1_ = unit(n_ - 1);
    solve_tridiagonal(z1_);
    // S = I + W^T Z with W = [w e_{n-1}, conj(w) e_0]
    s00_ = w_ * z0_[n - 1];
    s00_.re += 1.0;
    s01_ = w_ * z1_[n - 1];
    s10_ = cw_ * z0_[0];
    s11_ = cw_ * z1_[0];
    s11_.re += 1.0;
    det_ = s00_ * s11_ - s01_ * s10_;
    perturb(det_);
  }

  std::vector<BigComplex> solve(std::vector<BigComplex> b) const {
    if (n_ == 1) {
      b[0] /= d_[0];
      return b;
    }
    solve_tridiagonal(b);
    const auto n = static_cast<std::size_t>(n_);
    const BigComplex r0 = w_ * b[n - 1];
    const BigComplex r1 = cw_ * b[0];
    const BigComplex c0 = (s11_ * r0 - s01_ * r1) / det_;
    const BigComplex c1 = (s00_ * r1 - s10_ * r0) / det_;
    for (std::size_t i = 0; i < n; ++i) b[i] -= z0_[i] * c0 + z1_[i] * c1;
    return b;
  }

 private:
  void perturb(BigComplex& x) const {
    if (x.is_zero()) x.re = ldexp(BigReal(1.0, bits_), -bits_);
  }

  std::vector<BigComplex> unit(int k) const {
    std::vector<BigComplex> e(static_cast<std::size_t>(n_), BigComplex(bits_));
    e[static_cast<std::size_t>(k)].re = 1.0;
    return e;
  }

  void factor() {
    const auto n = static_cast<std::size_t>(n_);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (d_[i].abs1() >= dl_[i].abs1()) {
        perturb(d_[i]);
        BigComplex fact = dl_[i] / d_[i];
        d_[i + 1] -= fact * du_[i];
        dl_[i] = std::move(fact);
        ipiv_[i] = i;
      } else {
        BigComplex fact = d_[i] / dl_[i];
        d_[i] = dl_[i];
        dl_[i] = fact;
        BigComplex temp = du_[i];
        du_[i] = d_[i + 1];
        d_[i + 1] = temp - fact * d_[i + 1];
        if (i + 2 < n) {
          du2_[i] = du_[i + 1];
          du_[i + 1] = -(fact * du_[i + 1]);
        }
        ipiv_[i] = i + 1;
      }
    }
    perturb(d_[n - 1]);
  }

  void solve_tridiagonal(std::vector<BigComplex>& b) const {
    const auto n = static_cast<std::size_t>(n_);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (ipiv_[i] == i) {
        b[i + 1] -= dl_[i] * b[i];
      } else {
        BigComplex temp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = temp - dl_[i] * b[i];
      }
    }
    b[n - 1] /= d_[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du_[n - 2] * b[n - 1]) / d_[n - 2];
    for (std::size_t i = n - 2; i-- > 0;) b[i] = (b[i] - du_[i] * b[i + 1] - du2_[i] * b[i + 2]) / d_[i];
  }

  int n_;
  int bits_;
  BigComplex w_, cw_;
  std::vector<BigComplex> d_, dl_, du_, du2_;
  std::vector<std::size_t> ipiv_;
  std::vector<BigComplex> z0_, z1_;
  BigComplex s00_{64}, s01_{64}, s10_{64}, s11_{64}, det_{64};
};

BigReal norm2(const std::vector<BigComplex>& v, int bits) {
  BigReal s(bits);
  for (const auto& x : v) s += x.norm();
  return sqrt(s);
}

std::vector<BigComplex> apply(const PotentialSeq& V, const BigComplex& w, const BigReal& E,
                              const std::vector<BigComplex>& psi) {
  const int q = V.period();
  const int bits = E.bits();
  const BigComplex cw = w.conj();
  std::vector<BigComplex> out;
  out.reserve(psi.size());
  for (int x = 0; x < q; ++x) {
    const auto ux = static_cast<std::size_t>(x);
    BigReal diag(bits);
    sub(diag, E, V[x]);
    mpfr_neg(diag.raw(), diag.raw(), MPFR_RNDN);
    BigComplex y = psi[ux] * diag;
    if (q == 1) {
      y += psi[0] * (w + cw);
    } else {
      y += w * psi[static_cast<std::size_t>((x - 1 + q) % q)];
      y += cw * psi[static_cast<std::size_t>((x + 1) % q)];
    }
    out.push_back(std::move(y));
  }
  return out;
}

int argmax_modulus(const std::vector<BigComplex>& psi, int bits) {
  std::vector<BigReal> m;
  m.reserve(psi.size());
  for (const auto& x : psi) m.push_back(x.norm());
  BigReal best = m[0];
  for (const auto& x : m)
    if (x > best) best = x;
  // Moduli within relative 2^{-bits/2} of the maximum count as ties.
  const BigReal cut = best - ldexp(best, -bits / 2);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i] >= cut) return static_cast<int>(i);
  return 0;
}

}  // namespace

BigReal residual_norm(const PotentialSeq& V, FloquetPhase kappa, const BigReal& E,
                      const std::vector<BigComplex>& psi) {
  const BigComplex w = polar_unit(kappa.kappa(V.period(), E.bits()));
  return norm2(apply(V, w, E, psi), E.bits());
}

std::vector<std::complex<double>> EigenPair::psi_double() const {
  std::vector<std::complex<double>> out;
  out.reserve(psi.size());
  for (const auto& x : psi) out.emplace_back(x.re.to_double(), x.im.to_double());
  return out;
}

int EigenPair::center() const { return argmax_modulus(psi, E.bits()); }

EigenPair eigenvector(const PotentialSeq& V, FloquetPhase kappa, const BigReal& E, int band,
                      EigenvectorOptions opt) {
  const int q = V.period();
  const int bits = E.bits();
  const BigComplex w = polar_unit(kappa.kappa(q, bits));
  const double tol = opt.residual_tolerance > 0.0 ? opt.residual_tolerance : std::exp2(-(bits / 4.0 + 4.0));
  const double goal = std::exp2(-(bits / 2.0));

  std::vector<BigComplex> psi;
  psi.reserve(static_cast<std::size_t>(q));
  Rng rng(derive_seed(0x5eed5eedULL, {static_cast<std::uint64_t>(q)}));
  for (int x = 0; x < q; ++x) psi.emplace_back(rng.uniform(0.5, 1.5), rng.uniform(-0.5, 0.5), bits);

  int cut = 0;
  auto solver = std::make_unique<CyclicSolver>(V, w, E, cut);
  double res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < std::max(opt.max_iterations, 1); ++it) {
    // The solver works on the rotated frame starting at `cut`.
    std::vector<BigComplex> rhs;
    rhs.reserve(psi.size());
    for (int i = 0; i < q; ++i) rhs.push_back(psi[static_cast<std::size_t>((cut + i) % q)]);
    auto x = solver->solve(std::move(rhs));
    const BigReal nx = norm2(x, bits);
    if (nx.is_zero() || !nx.is_finite()) break;
    for (int i = 0; i < q; ++i) {
      BigComplex v = x[static_cast<std::size_t>(i)];
      v.re /= nx;
      v.im /= nx;
      psi[static_cast<std::size_t>((cut + i) % q)] = std::move(v);
    }
    res = norm2(apply(V, w, E, psi), bits).to_double();
    if (res <= goal) break;
    if (it == 0 && q > 2) {
      // Cut the circle at the current maximum so the open chain is far from singular.
      const int c = argmax_modulus(psi, bits);
      if (c != cut) {
        cut = c;
        solver = std::make_unique<CyclicSolver>(V, w, E, cut);
      }
    }
  }
  if (!(res <= tol))
    throw ConvergenceError("inverse iteration did not converge at E = " + E.to_string(20) + " (residual " +
                               std::to_string(res) + ")",
                           res);

  const int nu = argmax_modulus(psi, bits);
  const BigComplex p = psi[static_cast<std::size_t>(nu)];
  const BigReal mod = p.abs();
  BigComplex phase = p.conj();
  phase.re /= mod;
  phase.im /= mod;
  for (auto& x : psi) x *= phase;
  psi[static_cast<std::size_t>(nu)].im = 0.0;

  EigenPair ep;
  ep.kappa = kappa;
  ep.band = band;
  ep.E = E;
  ep.psi = std::move(psi);
  ep.residual = norm2(apply(V, w, E, ep.psi), bits).to_double();
  return ep;
}

void write_bands_csv(std::ostream& os, const Spectrum& s) {
  const int digits = BigReal(s.bits).decimal_digits();
  os << "j,left,right,center,width,log_width_rate\n";
  for (const auto& b : s.bands) {
    char rate[64];
    std::snprintf(rate, sizeof rate, "%.17g", b.log_width_rate(s.q()));
    os << b.index << ',' << b.left.to_string(digits) << ',' << b.right.to_string(digits) << ','
       << b.center().to_string(digits) << ',' << b.width().to_string(digits) << ',' << rate << '\n';
  }
  if (!os) throw IoError("failed writing band CSV");
}

}  // namespace thouless
