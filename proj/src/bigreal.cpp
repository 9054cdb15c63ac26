#include "thouless/bigreal.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "thouless/errors.hpp"

namespace thouless {
namespace {

constexpr mpfr_rnd_t kRnd = MPFR_RNDN;

mpfr_prec_t checked_bits(int bits) {
  if (bits < BigReal::kMinBits)
    throw ValidationError("precision must be at least 64 bits, got " + std::to_string(bits));
  return static_cast<mpfr_prec_t>(bits);
}

// A moved-from value has a null limb pointer and owns nothing.
bool is_live(mpfr_srcptr v) { return v->_mpfr_d != nullptr; }

}  // namespace

BigReal::BigReal(int bits) {
  mpfr_init2(v_, checked_bits(bits));
  mpfr_set_zero(v_, 1);
}

BigReal::BigReal(double value, int bits) {
  mpfr_init2(v_, checked_bits(bits));
  mpfr_set_d(v_, value, kRnd);
}

BigReal::BigReal(const BigReal& other) {
  mpfr_init2(v_, mpfr_get_prec(other.v_));
  mpfr_set(v_, other.v_, kRnd);
}

BigReal::BigReal(BigReal&& other) noexcept {
  v_[0] = other.v_[0];
  other.v_[0]._mpfr_d = nullptr;
}

BigReal& BigReal::operator=(const BigReal& other) {
  if (this == &other) return *this;
  if (!is_live(v_)) {
    mpfr_init2(v_, mpfr_get_prec(other.v_));
  } else if (mpfr_get_prec(v_) != mpfr_get_prec(other.v_)) {
    mpfr_set_prec(v_, mpfr_get_prec(other.v_));
  }
  mpfr_set(v_, other.v_, kRnd);
  return *this;
}

BigReal& BigReal::operator=(BigReal&& other) noexcept {
  if (this == &other) return *this;
  if (is_live(v_)) mpfr_clear(v_);
  v_[0] = other.v_[0];
  other.v_[0]._mpfr_d = nullptr;
  return *this;
}

BigReal& BigReal::operator=(double value) {
  mpfr_set_d(v_, value, kRnd);
  return *this;
}

BigReal::~BigReal() {
  if (is_live(v_)) mpfr_clear(v_);
}

BigReal BigReal::from_string(std::string_view text, int bits) {
  BigReal r(bits);
  std::string s(text);
  if (mpfr_set_str(r.v_, s.c_str(), 10, kRnd) != 0)
    throw ValidationError("cannot parse '" + s + "' as a real number");
  return r;
}

BigReal BigReal::pi(int bits) {
  BigReal r(bits);
  mpfr_const_pi(r.v_, kRnd);
  return r;
}

void BigReal::set_bits(int bits) { mpfr_prec_round(v_, checked_bits(bits), kRnd); }

long BigReal::exponent() const {
  if (mpfr_zero_p(v_)) return LONG_MIN / 2;
  return static_cast<long>(mpfr_get_exp(v_));
}

double BigReal::log_abs() const {
  if (mpfr_zero_p(v_)) return -std::numeric_limits<double>::infinity();
  long e = 0;
  double mant = mpfr_get_d_2exp(&e, v_, kRnd);
  return std::log(std::fabs(mant)) + static_cast<double>(e) * std::numbers::ln2;
}

std::string BigReal::to_string(int digits) const {
  digits = std::max(digits, 1);
  char* buf = nullptr;
  mpfr_asprintf(&buf, "%.*Re", digits - 1, v_);
  std::string out(buf);
  mpfr_free_str(buf);
  return out;
}

int BigReal::decimal_digits() const {
  return static_cast<int>(std::ceil(static_cast<double>(bits()) * std::log10(2.0))) + 1;
}

BigReal& BigReal::operator+=(const BigReal& o) { mpfr_add(v_, v_, o.v_, kRnd); return *this; }
BigReal& BigReal::operator-=(const BigReal& o) { mpfr_sub(v_, v_, o.v_, kRnd); return *this; }
BigReal& BigReal::operator*=(const BigReal& o) { mpfr_mul(v_, v_, o.v_, kRnd); return *this; }
BigReal& BigReal::operator/=(const BigReal& o) { mpfr_div(v_, v_, o.v_, kRnd); return *this; }
BigReal& BigReal::operator+=(double o) { mpfr_add_d(v_, v_, o, kRnd); return *this; }
BigReal& BigReal::operator-=(double o) { mpfr_sub_d(v_, v_, o, kRnd); return *this; }
BigReal& BigReal::operator*=(double o) { mpfr_mul_d(v_, v_, o, kRnd); return *this; }
BigReal& BigReal::operator/=(double o) { mpfr_div_d(v_, v_, o, kRnd); return *this; }

BigReal BigReal::operator-() const {
  BigReal r(bits());
  mpfr_neg(r.v_, v_, kRnd);
  return r;
}

namespace {
template <class Op>
BigReal binary(const BigReal& a, const BigReal& b, Op op) {
  BigReal r(std::max(a.bits(), b.bits()));
  op(r.raw(), a.raw(), b.raw(), kRnd);
  return r;
}
}  // namespace

BigReal operator+(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_add); }
BigReal operator-(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_sub); }
BigReal operator*(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_mul); }
BigReal operator/(const BigReal& a, const BigReal& b) { return binary(a, b, mpfr_div); }

std::partial_ordering operator<=>(const BigReal& a, const BigReal& b) {
  if (mpfr_unordered_p(a.v_, b.v_)) return std::partial_ordering::unordered;
  const int c = mpfr_cmp(a.v_, b.v_);
  return c < 0 ? std::partial_ordering::less
               : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
}

std::partial_ordering operator<=>(const BigReal& a, double b) {
  if (mpfr_nan_p(a.v_) || std::isnan(b)) return std::partial_ordering::unordered;
  const int c = mpfr_cmp_d(a.v_, b);
  return c < 0 ? std::partial_ordering::less
               : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
}

BigReal abs(const BigReal& x) {
  BigReal r(x.bits());
  mpfr_abs(r.raw(), x.raw(), kRnd);
  return r;
}

BigReal sqrt(const BigReal& x) {
  BigReal r(x.bits());
  mpfr_sqrt(r.raw(), x.raw(), kRnd);
  return r;
}

BigReal exp(const BigReal& x) {
  BigReal r(x.bits());
  mpfr_exp(r.raw(), x.raw(), kRnd);
  return r;
}

BigReal log(const BigReal& x) {
  BigReal r(x.bits());
  mpfr_log(r.raw(), x.raw(), kRnd);
  return r;
}

BigReal cos(const BigReal& x) {
  BigReal r(x.bits());
  mpfr_cos(r.raw(), x.raw(), kRnd);
  return r;
}

BigReal sin(const BigReal& x) {
  BigReal r(x.bits());
  mpfr_sin(r.raw(), x.raw(), kRnd);
  return r;
}

BigReal ldexp(const BigReal& x, long e) {
  BigReal r(x.bits());
  mpfr_mul_2si(r.raw(), x.raw(), e, kRnd);
  return r;
}

BigComplex& BigComplex::operator*=(const BigComplex& o) {
  BigReal r = re * o.re - im * o.im;
  BigReal i = re * o.im + im * o.re;
  re = std::move(r);
  im = std::move(i);
  return *this;
}

BigComplex& BigComplex::operator/=(const BigComplex& o) {
  const BigReal d = o.norm();
  BigReal r = (re * o.re + im * o.im) / d;
  BigReal i = (im * o.re - re * o.im) / d;
  re = std::move(r);
  im = std::move(i);
  return *this;
}

BigComplex polar_unit(const BigReal& theta) {
  BigReal s(theta.bits()), c(theta.bits());
  mpfr_sin_cos(s.raw(), c.raw(), theta.raw(), kRnd);
  return {std::move(c), std::move(s)};
}

}  // namespace thouless
