#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <utility>

#include <mpfr.h>

namespace thouless {

/// Arbitrary-precision real backed by MPFR, rounding to nearest.
///
/// Every value carries its own mantissa width. Compound assignment keeps the
/// width of the left operand; binary operators produce the wider of the two.
/// Hot loops should use the in-place helpers (fms, sub) on preallocated
/// values to avoid allocations.
class BigReal {
 public:
  static constexpr int kMinBits = 64;

  explicit BigReal(int bits = 256);
  BigReal(double value, int bits);
  BigReal(const BigReal& other);
  BigReal(BigReal&& other) noexcept;
  BigReal& operator=(const BigReal& other);
  BigReal& operator=(BigReal&& other) noexcept;
  BigReal& operator=(double value);
  ~BigReal();

  static BigReal from_string(std::string_view text, int bits);
  static BigReal pi(int bits);

  int bits() const { return static_cast<int>(mpfr_get_prec(v_)); }
  void set_bits(int bits);  // keeps the value, rounded

  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  long double to_long_double() const { return mpfr_get_ld(v_, MPFR_RNDN); }
  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  bool is_finite() const { return mpfr_number_p(v_) != 0; }
  int sign() const { return mpfr_sgn(v_); }
  /// Base-2 exponent e with 0.5 <= |x| / 2^e < 1; a very negative sentinel for zero.
  long exponent() const;
  /// Natural log of |x| as a double; -inf for zero. Safe far outside double range.
  double log_abs() const;
  /// Scientific notation with the given number of significant digits.
  std::string to_string(int digits) const;
  /// Digits needed to round-trip this precision in decimal.
  int decimal_digits() const;

  mpfr_ptr raw() { return v_; }
  mpfr_srcptr raw() const { return v_; }

  BigReal& operator+=(const BigReal& o);
  BigReal& operator-=(const BigReal& o);
  BigReal& operator*=(const BigReal& o);
  BigReal& operator/=(const BigReal& o);
  BigReal& operator+=(double o);
  BigReal& operator-=(double o);
  BigReal& operator*=(double o);
  BigReal& operator/=(double o);
  BigReal operator-() const;

  friend BigReal operator+(const BigReal& a, const BigReal& b);
  friend BigReal operator-(const BigReal& a, const BigReal& b);
  friend BigReal operator*(const BigReal& a, const BigReal& b);
  friend BigReal operator/(const BigReal& a, const BigReal& b);
  friend BigReal operator+(const BigReal& a, double b) { BigReal r(a); r += b; return r; }
  friend BigReal operator-(const BigReal& a, double b) { BigReal r(a); r -= b; return r; }
  friend BigReal operator*(const BigReal& a, double b) { BigReal r(a); r *= b; return r; }
  friend BigReal operator/(const BigReal& a, double b) { BigReal r(a); r /= b; return r; }
  friend BigReal operator+(double a, const BigReal& b) { return b + a; }
  friend BigReal operator*(double a, const BigReal& b) { return b * a; }
  friend BigReal operator-(double a, const BigReal& b) { BigReal r(-b); r += a; return r; }

  friend bool operator==(const BigReal& a, const BigReal& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
  friend std::partial_ordering operator<=>(const BigReal& a, const BigReal& b);
  friend bool operator==(const BigReal& a, double b) { return mpfr_cmp_d(a.v_, b) == 0; }
  friend std::partial_ordering operator<=>(const BigReal& a, double b);

 private:
  mpfr_t v_;
};

BigReal abs(const BigReal& x);
BigReal sqrt(const BigReal& x);
BigReal exp(const BigReal& x);
BigReal log(const BigReal& x);
BigReal cos(const BigReal& x);
BigReal sin(const BigReal& x);
/// x * 2^e, exact.
BigReal ldexp(const BigReal& x, long e);

/// out = a * b - c, one rounding.
inline void fms(BigReal& out, const BigReal& a, const BigReal& b, const BigReal& c) {
  mpfr_fms(out.raw(), a.raw(), b.raw(), c.raw(), MPFR_RNDN);
}
/// out = a - d.
inline void sub(BigReal& out, const BigReal& a, double d) { mpfr_sub_d(out.raw(), a.raw(), d, MPFR_RNDN); }
inline void swap(BigReal& a, BigReal& b) noexcept { mpfr_swap(a.raw(), b.raw()); }

/// Complex number over BigReal; only what the eigenvector solver needs.
struct BigComplex {
  BigReal re;
  BigReal im;

  explicit BigComplex(int bits = 256) : re(bits), im(bits) {}
  BigComplex(BigReal r, BigReal i) : re(std::move(r)), im(std::move(i)) {}
  BigComplex(double r, double i, int bits) : re(r, bits), im(i, bits) {}

  int bits() const { return re.bits(); }
  /// |z|^2
  BigReal norm() const { return re * re + im * im; }
  BigReal abs() const { return sqrt(norm()); }
  /// |re| + |im|, the cheap modulus used for pivoting.
  BigReal abs1() const { return thouless::abs(re) + thouless::abs(im); }
  BigComplex conj() const { return {re, -im}; }
  bool is_zero() const { return re.is_zero() && im.is_zero(); }

  BigComplex& operator+=(const BigComplex& o) { re += o.re; im += o.im; return *this; }
  BigComplex& operator-=(const BigComplex& o) { re -= o.re; im -= o.im; return *this; }
  BigComplex& operator*=(const BigComplex& o);
  BigComplex& operator/=(const BigComplex& o);
  BigComplex& operator*=(const BigReal& s) { re *= s; im *= s; return *this; }

  friend BigComplex operator+(BigComplex a, const BigComplex& b) { return a += b; }
  friend BigComplex operator-(BigComplex a, const BigComplex& b) { return a -= b; }
  friend BigComplex operator*(BigComplex a, const BigComplex& b) { return a *= b; }
  friend BigComplex operator/(BigComplex a, const BigComplex& b) { return a /= b; }
  friend BigComplex operator*(BigComplex a, const BigReal& s) { return a *= s; }
  BigComplex operator-() const { return {-re, -im}; }
};

/// e^{i theta}
BigComplex polar_unit(const BigReal& theta);

}  // namespace thouless
