#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "thouless/bigreal.hpp"
#include "thouless/potential.hpp"

namespace thouless {

/// [[a, b], [c, d]]
struct Matrix2 {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  double det() const { return a * d - b * c; }
  double trace() const { return a + d; }
  double max_abs() const;
  friend Matrix2 operator*(const Matrix2& x, const Matrix2& y);
  friend bool operator==(const Matrix2&, const Matrix2&) = default;
};

struct BigMatrix2 {
  BigReal a, b, c, d;

  explicit BigMatrix2(int bits);
  BigReal det() const { return a * d - b * c; }
  BigReal trace() const { return a + d; }
  Matrix2 to_double() const { return {a.to_double(), b.to_double(), c.to_double(), d.to_double()}; }
};

/// Unit-scaled double entries times 2^log2_scale. After every product the
/// largest entry lies in [1/2, 2).
class ScaledMatrix2 {
 public:
  ScaledMatrix2() = default;
  ScaledMatrix2(Matrix2 unit, long log2_scale) : m_(unit), e_(log2_scale) {}

  const Matrix2& entries() const { return m_; }
  long log2_scale() const { return e_; }
  /// Natural-log scale factor.
  double log_scale() const;
  /// Determinant of the stored entries implied by unimodularity, 2^{-2 log2_scale}.
  double stored_det() const;
  /// Rescaled to plain doubles; overflows to inf when the scale is huge.
  Matrix2 unscaled() const;
  /// log of the largest singular value of the unscaled product.
  double log_norm() const;

  /// Left-multiplies by the one-step matrix [[E - v, -1], [1, 0]].
  void step(double v, double E);
  void normalize();

 private:
  Matrix2 m_{};
  long e_ = 0;
};

Matrix2 transfer_step(double v, double E);
BigMatrix2 transfer_step(double v, const BigReal& E);

/// Phi(E) = T(V(q-1)) ... T(V(0)), fast path.
ScaledMatrix2 transfer_product(const PotentialSeq& V, double E);
/// Same product in full multiprecision. Throws PrecisionExhausted when the
/// entries grow beyond what `bits` can resolve against an O(1) trace.
BigMatrix2 transfer_product(const PotentialSeq& V, const BigReal& E, int bits);

/// det(H|[a,b] - E) by the three-term recurrence; arcs wrap modulo q and
/// a > b gives 1. Throws ValidationError when b - a + 1 > q.
BigReal det_poly(const PotentialSeq& V, long a, long b, const BigReal& E);
double det_poly(const PotentialSeq& V, long a, long b, double E);

/// log of the largest singular value of Phi(E) from the scaled product.
double log_norm(const PotentialSeq& V, double E);
double log_norm(const PotentialSeq& V, const BigReal& E, int bits);
/// The same quantity for the first n steps of an arbitrary sequence.
double log_norm(std::span<const double> v, double E);

/// max of q^{-1} log ||Phi(E)|| over the given energies.
double pilot_gamma_max(const PotentialSeq& V, std::span<const double> energies);
/// Same over an equispaced grid of [min V - 2, max V + 2].
double pilot_gamma_max(const PotentialSeq& V, int points = 64);
/// ceil(1.5 * gamma_max * q / ln 2) + 64, at least 128.
int required_bits(double gamma_max, int q);
int required_bits(const PotentialSeq& V);

/// log2 of max over k of ||T(q-1)...T(k)|| ||T(k-1)...T(0)|| ||T||, the
/// amplification of a unit rounding error anywhere in the product.
double log2_condition(const PotentialSeq& V, double E);

/// Delta(E) - target and dDelta/dE in double precision, as mantissas times
/// 2^log2_scale so that values beyond the double range stay finite. The sign
/// is trustworthy only when |value| * 2^log2_scale exceeds 2^log2_noise.
struct ScaledDiscriminant {
  double value = 0.0;
  double derivative = 0.0;
  long log2_scale = 0;
  double log2_noise = 0.0;

  /// log2 |Delta - target|
  double log2_abs() const { return std::log2(std::fabs(value)) + static_cast<double>(log2_scale); }
  bool resolved() const { return value != 0.0 && log2_abs() > log2_noise; }
};

ScaledDiscriminant discriminant_scaled(const PotentialSeq& V, double E, double target);

/// Discriminant evaluator with preallocated multiprecision scratch. Not
/// thread-safe; give each worker its own instance.
class DiscriminantKernel {
 public:
  struct Value {
    int sign = 0;
    /// log2 of an a-priori bound on the absolute rounding error of Delta.
    double log2_err = 0.0;
  };

  DiscriminantKernel(const PotentialSeq& V, int bits);

  int bits() const { return bits_; }
  const PotentialSeq& potential() const { return V_; }

  /// Delta(E) - target, written to out. The returned error bound covers the
  /// rounding of the whole recurrence.
  Value eval(const BigReal& E, double target, BigReal& out);
  Value eval(const BigReal& E, const BigReal& target, BigReal& out);
  /// Also writes dDelta/dE to dout.
  Value eval(const BigReal& E, const BigReal& target, BigReal& out, BigReal& dout);
  BigReal delta(const BigReal& E);
  /// det(H|[first, last] - E) and its E-derivative; returns log2 of the error bound.
  double dirichlet_det(const BigReal& E, int first, int last, BigReal& out, BigReal& dout);
  /// Number of Dirichlet eigenvalues of sites [first, last] below E (Sturm count).
  int dirichlet_count(const BigReal& E, int first, int last);

 private:
  const PotentialSeq& V_;
  int bits_;
  BigReal e_, x0_, x1_, y0_, y1_, t_;
  BigReal dx0_, dx1_, dy0_, dy1_;
};

}  // namespace thouless
