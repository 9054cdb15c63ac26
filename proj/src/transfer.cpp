#include "thouless/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "thouless/errors.hpp"

namespace thouless {

double Matrix2::max_abs() const { return std::max({std::fabs(a), std::fabs(b), std::fabs(c), std::fabs(d)}); }

Matrix2 operator*(const Matrix2& x, const Matrix2& y) {
  return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}

BigMatrix2::BigMatrix2(int bits) : a(1.0, bits), b(bits), c(bits), d(1.0, bits) {}

double ScaledMatrix2::log_scale() const { return static_cast<double>(e_) * std::numbers::ln2; }

double ScaledMatrix2::stored_det() const { return std::ldexp(1.0, static_cast<int>(std::clamp(-2 * e_, -4000L, 4000L))); }

Matrix2 ScaledMatrix2::unscaled() const {
  const int e = static_cast<int>(std::clamp(e_, -4000L, 4000L));
  return {std::ldexp(m_.a, e), std::ldexp(m_.b, e), std::ldexp(m_.c, e), std::ldexp(m_.d, e)};
}

double ScaledMatrix2::log_norm() const {
  // sigma_max^2 solves s^2 - |M|_F^2 s + det^2 = 0; det is known from unimodularity,
  // which avoids the cancellation in a*d - b*c.
  const double f = m_.a * m_.a + m_.b * m_.b + m_.c * m_.c + m_.d * m_.d;
  const double det = stored_det();
  const double disc = std::max(f * f - 4.0 * det * det, 0.0);
  const double s2 = 0.5 * (f + std::sqrt(disc));
  return std::max(0.5 * std::log(s2) + log_scale(), 0.0);
}

void ScaledMatrix2::step(double v, double E) {
  const double t = E - v;
  const double a = t * m_.a - m_.c;
  const double b = t * m_.b - m_.d;
  m_.c = m_.a;
  m_.d = m_.b;
  m_.a = a;
  m_.b = b;
  if (std::fabs(a) > 0x1.0p+256 || std::fabs(b) > 0x1.0p+256) normalize();
}

void ScaledMatrix2::normalize() {
  const double m = m_.max_abs();
  if (m == 0.0 || !std::isfinite(m)) return;
  int k = 0;
  std::frexp(m, &k);
  m_.a = std::ldexp(m_.a, -k);
  m_.b = std::ldexp(m_.b, -k);
  m_.c = std::ldexp(m_.c, -k);
  m_.d = std::ldexp(m_.d, -k);
  e_ += k;
}

Matrix2 transfer_step(double v, double E) { return {E - v, -1.0, 1.0, 0.0}; }

BigMatrix2 transfer_step(double v, const BigReal& E) {
  BigMatrix2 m(E.bits());
  sub(m.a, E, v);
  m.b = -1.0;
  m.c = 1.0;
  m.d = 0.0;
  return m;
}

ScaledMatrix2 transfer_product(const PotentialSeq& V, double E) {
  ScaledMatrix2 m;
  for (double v : V.values()) m.step(v, E);
  m.normalize();
  return m;
}

BigMatrix2 transfer_product(const PotentialSeq& V, const BigReal& E, int bits) {
  BigMatrix2 m(bits);
  long max_exp = 1;
  BigReal t(bits), a(bits), b(bits);
  for (double v : V.values()) {
    sub(t, E, v);
    fms(a, t, m.a, m.c);
    fms(b, t, m.b, m.d);
    swap(m.c, m.a);
    swap(m.d, m.b);
    swap(m.a, a);
    swap(m.b, b);
    max_exp = std::max({max_exp, m.a.exponent(), m.b.exponent()});
  }
  if (max_exp + 32 > bits)
    throw PrecisionExhausted("transfer product entries reach 2^" + std::to_string(max_exp) + " at " +
                                 std::to_string(bits) + " bits",
                             bits, static_cast<int>(max_exp + 64));
  return m;
}

namespace {

void check_arc(const PotentialSeq& V, long a, long b) {
  if (b - a + 1 > V.period())
    throw ValidationError("arc [" + std::to_string(a) + "," + std::to_string(b) + "] is longer than q = " +
                          std::to_string(V.period()));
}

}  // namespace

BigReal det_poly(const PotentialSeq& V, long a, long b, const BigReal& E) {
  check_arc(V, a, b);
  const int bits = E.bits();
  BigReal p1(1.0, bits), p0(bits), t(bits), next(bits);
  for (long k = a; k <= b; ++k) {
    sub(t, E, V.at(k));
    mpfr_neg(t.raw(), t.raw(), MPFR_RNDN);
    fms(next, t, p1, p0);
    swap(p0, p1);
    swap(p1, next);
  }
  return p1;
}

double det_poly(const PotentialSeq& V, long a, long b, double E) {
  check_arc(V, a, b);
  double p1 = 1.0, p0 = 0.0;
  for (long k = a; k <= b; ++k) {
    const double next = (V.at(k) - E) * p1 - p0;
    p0 = p1;
    p1 = next;
  }
  return p1;
}

double log_norm(const PotentialSeq& V, double E) { return transfer_product(V, E).log_norm(); }

double log_norm(std::span<const double> v, double E) {
  ScaledMatrix2 m;
  for (double x : v) m.step(x, E);
  m.normalize();
  return m.log_norm();
}

double log_norm(const PotentialSeq& V, const BigReal& E, int bits) {
  BigMatrix2 m(bits);
  BigReal t(bits), a(bits), b(bits);
  for (double v : V.values()) {
    sub(t, E, v);
    fms(a, t, m.a, m.c);
    fms(b, t, m.b, m.d);
    swap(m.c, m.a);
    swap(m.d, m.b);
    swap(m.a, a);
    swap(m.b, b);
  }
  BigReal f = m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d;
  BigReal disc = f * f - 4.0;
  if (disc.sign() < 0) disc = 0.0;
  BigReal s2 = (f + sqrt(disc)) / 2.0;
  return std::max(0.5 * s2.log_abs(), 0.0);
}

double pilot_gamma_max(const PotentialSeq& V, std::span<const double> energies) {
  double g = 0.0;
  for (double E : energies) g = std::max(g, log_norm(V, E));
  return g / V.period();
}

double pilot_gamma_max(const PotentialSeq& V, int points) {
  const auto [lo, hi] = std::minmax_element(V.values().begin(), V.values().end());
  const EnergyWindow w{*lo - 2.0, *hi + 2.0};
  const auto grid = w.grid(std::max(points, 2));
  return pilot_gamma_max(V, grid);
}

int required_bits(double gamma_max, int q) {
  const double bits = std::ceil(1.5 * std::max(gamma_max, 0.0) * q / std::numbers::ln2) + 64.0;
  return std::max(128, static_cast<int>(bits));
}

int required_bits(const PotentialSeq& V) { return required_bits(pilot_gamma_max(V), V.period()); }

double log2_condition(const PotentialSeq& V, double E) {
  // Frobenius norms of the prefix products Phi_k and suffix products
  // T(q-1)...T(k), each kept as unit entries times 2^scale.
  const auto v = V.values();
  const std::size_t q = v.size();
  std::vector<double> prefix(q + 1);
  const auto log2_frob = [](double a, double b, double c, double d, long e) {
    return 0.5 * std::log2(a * a + b * b + c * c + d * d) + static_cast<double>(e);
  };
  const auto rescale = [](double& a, double& b, double& c, double& d, long& e) {
    int ex = 0;
    std::frexp(std::max({std::fabs(a), std::fabs(b), std::fabs(c), std::fabs(d)}), &ex);
    a = std::ldexp(a, -ex);
    b = std::ldexp(b, -ex);
    c = std::ldexp(c, -ex);
    d = std::ldexp(d, -ex);
    e += ex;
  };
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0, tnorm = 1.0;
  long e = 0;
  prefix[0] = 0.5;
  for (std::size_t k = 0; k < q; ++k) {
    const double t = E - v[k];
    tnorm = std::max(tnorm, std::fabs(t) + 2.0);
    const double na = t * a - c, nb = t * b - d;
    c = a;
    d = b;
    a = na;
    b = nb;
    rescale(a, b, c, d, e);
    prefix[k + 1] = log2_frob(a, b, c, d, e);
  }
  double worst = prefix[q];
  a = 1.0, b = 0.0, c = 0.0, d = 1.0, e = 0;
  for (std::size_t k = q; k-- > 0;) {
    // Right-multiply the suffix by T(k).
    const double t = E - v[k];
    const double na = a * t + b, nc = c * t + d;
    b = -a;
    d = -c;
    a = na;
    c = nc;
    rescale(a, b, c, d, e);
    worst = std::max(worst, prefix[k] + log2_frob(a, b, c, d, e));
  }
  return worst + std::log2(tnorm);
}

ScaledDiscriminant discriminant_scaled(const PotentialSeq& V, double E, double target) {
  double x1 = 1.0, x0 = 0.0, y1 = 0.0, y0 = 1.0;
  double dx1 = 0.0, dx0 = 0.0, dy1 = 0.0, dy0 = 0.0;
  long e = 0;
  const auto v = V.values();
  const std::size_t q = v.size();
  for (std::size_t k = 0; k < q; ++k) {
    const double t = E - v[k];
    const double nx = t * x1 - x0;
    const double ndx = x1 + t * dx1 - dx0;
    x0 = x1;
    x1 = nx;
    dx0 = dx1;
    dx1 = ndx;
    if (k + 1 < q) {
      const double ny = t * y1 - y0;
      const double ndy = y1 + t * dy1 - dy0;
      y0 = y1;
      y1 = ny;
      dy0 = dy1;
      dy1 = ndy;
    }
    const double m = std::max({std::fabs(x1), std::fabs(y1), std::fabs(dx1), std::fabs(dy1)});
    if (m > 0x1.0p+200) {
      x1 = std::ldexp(x1, -200);
      x0 = std::ldexp(x0, -200);
      y1 = std::ldexp(y1, -200);
      y0 = std::ldexp(y0, -200);
      dx1 = std::ldexp(dx1, -200);
      dx0 = std::ldexp(dx0, -200);
      dy1 = std::ldexp(dy1, -200);
      dy0 = std::ldexp(dy0, -200);
      e += 200;
    }
  }
  ScaledDiscriminant r;
  r.log2_scale = e;
  r.value = (x1 + y1) - std::ldexp(target, static_cast<int>(-std::min(e, 2000L)));
  r.derivative = dx1 + dy1;
  r.log2_noise = log2_condition(V, E) + std::log2(8.0 * static_cast<double>(q)) - 52.0;
  return r;
}

DiscriminantKernel::DiscriminantKernel(const PotentialSeq& V, int bits)
    : V_(V),
      bits_(bits),
      e_(bits),
      x0_(bits),
      x1_(bits),
      y0_(bits),
      y1_(bits),
      t_(bits),
      dx0_(bits),
      dx1_(bits),
      dy0_(bits),
      dy1_(bits) {}

DiscriminantKernel::Value DiscriminantKernel::eval(const BigReal& E, double target, BigReal& out) {
  // First column (x) and second column (y) of the running product, each as a
  // pair of consecutive solutions of the three-term recurrence.
  mpfr_set(e_.raw(), E.raw(), MPFR_RNDN);
  x1_ = 1.0;
  x0_ = 0.0;
  y1_ = 0.0;
  y0_ = 1.0;
  const auto values = V_.values();
  const std::size_t q = values.size();
  for (std::size_t k = 0; k < q; ++k) {
    sub(t_, e_, values[k]);
    fms(x0_, t_, x1_, x0_);
    swap(x0_, x1_);
    if (k + 1 < q) {
      fms(y0_, t_, y1_, y0_);
      swap(y0_, y1_);
    }
  }
  // trace = x_{q-1} + y_{q-2}; y1_ holds y_{q-2} because the last y step is skipped.
  if (out.bits() != bits_) out.set_bits(bits_);
  mpfr_add(out.raw(), x1_.raw(), y1_.raw(), MPFR_RNDN);
  if (target != 0.0) mpfr_sub_d(out.raw(), out.raw(), target, MPFR_RNDN);
  Value v;
  v.sign = out.sign();
  v.log2_err = log2_condition(V_, E.to_double()) + std::log2(4.0 * static_cast<double>(q)) - bits_;
  return v;
}

DiscriminantKernel::Value DiscriminantKernel::eval(const BigReal& E, const BigReal& target, BigReal& out) {
  Value v = eval(E, 0.0, out);
  mpfr_sub(out.raw(), out.raw(), target.raw(), MPFR_RNDN);
  v.sign = out.sign();
  return v;
}

DiscriminantKernel::Value DiscriminantKernel::eval(const BigReal& E, const BigReal& target, BigReal& out,
                                                   BigReal& dout) {
  // Differentiating x_k = t_k x_{k-1} - x_{k-2} gives x'_k = x_{k-1} + t_k x'_{k-1} - x'_{k-2}.
  mpfr_set(e_.raw(), E.raw(), MPFR_RNDN);
  x1_ = 1.0;
  x0_ = 0.0;
  y1_ = 0.0;
  y0_ = 1.0;
  dx1_ = 0.0;
  dx0_ = 0.0;
  dy1_ = 0.0;
  dy0_ = 0.0;
  const auto values = V_.values();
  const std::size_t q = values.size();
  for (std::size_t k = 0; k < q; ++k) {
    sub(t_, e_, values[k]);
    fms(dx0_, t_, dx1_, dx0_);
    dx0_ += x1_;
    swap(dx0_, dx1_);
    fms(x0_, t_, x1_, x0_);
    swap(x0_, x1_);
    if (k + 1 < q) {
      fms(dy0_, t_, dy1_, dy0_);
      dy0_ += y1_;
      swap(dy0_, dy1_);
      fms(y0_, t_, y1_, y0_);
      swap(y0_, y1_);
    }
  }
  if (out.bits() != bits_) out.set_bits(bits_);
  if (dout.bits() != bits_) dout.set_bits(bits_);
  mpfr_add(out.raw(), x1_.raw(), y1_.raw(), MPFR_RNDN);
  mpfr_sub(out.raw(), out.raw(), target.raw(), MPFR_RNDN);
  mpfr_add(dout.raw(), dx1_.raw(), dy1_.raw(), MPFR_RNDN);
  Value v;
  v.sign = out.sign();
  v.log2_err = log2_condition(V_, E.to_double()) + std::log2(4.0 * static_cast<double>(q)) - bits_;
  return v;
}

BigReal DiscriminantKernel::delta(const BigReal& E) {
  BigReal out(bits_);
  eval(E, 0.0, out);
  return out;
}

double DiscriminantKernel::dirichlet_det(const BigReal& E, int first, int last, BigReal& out, BigReal& dout) {
  // p_k = (V_k - E) p_{k-1} - p_{k-2} and p'_k = -p_{k-1} + (V_k - E) p'_{k-1} - p'_{k-2}.
  mpfr_set(e_.raw(), E.raw(), MPFR_RNDN);
  x1_ = 1.0;
  x0_ = 0.0;
  dx1_ = 0.0;
  dx0_ = 0.0;
  for (int k = first; k <= last; ++k) {
    sub(t_, e_, V_[k]);
    mpfr_neg(t_.raw(), t_.raw(), MPFR_RNDN);
    fms(dx0_, t_, dx1_, dx0_);
    dx0_ -= x1_;
    swap(dx0_, dx1_);
    fms(x0_, t_, x1_, x0_);
    swap(x0_, x1_);
  }
  if (out.bits() != bits_) out.set_bits(bits_);
  if (dout.bits() != bits_) dout.set_bits(bits_);
  mpfr_set(out.raw(), x1_.raw(), MPFR_RNDN);
  mpfr_set(dout.raw(), dx1_.raw(), MPFR_RNDN);
  return log2_condition(V_, E.to_double()) + std::log2(4.0 * static_cast<double>(last - first + 2)) - bits_;
}

int DiscriminantKernel::dirichlet_count(const BigReal& E, int first, int last) {
  // LDL^T pivots of H - E on the restriction; negative pivots count eigenvalues below E.
  int count = 0;
  mpfr_set(e_.raw(), E.raw(), MPFR_RNDN);
  bool have_prev = false;
  for (int k = first; k <= last; ++k) {
    // t = V_k - E
    sub(t_, e_, V_[k]);
    mpfr_neg(t_.raw(), t_.raw(), MPFR_RNDN);
    if (have_prev) {
      mpfr_ui_div(x0_.raw(), 1, x1_.raw(), MPFR_RNDN);
      mpfr_sub(x1_.raw(), t_.raw(), x0_.raw(), MPFR_RNDN);
    } else {
      mpfr_set(x1_.raw(), t_.raw(), MPFR_RNDN);
      have_prev = true;
    }
    if (x1_.is_zero()) mpfr_set_si_2exp(x1_.raw(), 1, -bits_, MPFR_RNDN);
    if (x1_.sign() < 0) ++count;
  }
  return count;
}

}  // namespace thouless
