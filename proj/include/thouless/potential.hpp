#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "thouless/rng.hpp"

namespace thouless {

struct Interval {
  double lo;
  double hi;
};

/// Uniform law on a union of disjoint closed intervals, each weighted by its length.
struct UniformUnion {
  std::vector<Interval> intervals;
};

/// Two atoms: `high` with probability p_high, `low` otherwise.
struct Bernoulli {
  double low;
  double high;
  double p_high;
};

struct DiscreteAtoms {
  std::vector<double> values;
  std::vector<double> probabilities;
};

struct ConstantValue {
  double value;
};

/// Single-site law of an i.i.d. potential.
class DistributionSpec {
 public:
  using Variant = std::variant<UniformUnion, Bernoulli, DiscreteAtoms, ConstantValue>;

  /// Throws ValidationError when the law is malformed.
  explicit DistributionSpec(Variant v);

  static DistributionSpec uniform_union(std::vector<Interval> intervals);
  static DistributionSpec bernoulli(double low, double high, double p_high);
  static DistributionSpec atoms(std::vector<double> values, std::vector<double> probabilities);
  static DistributionSpec constant(double value);
  /// Uniform on [-3/2,-1] u [1,3/2], the i.i.d. model used throughout the experiments.
  static DistributionSpec default_iid();

  const Variant& variant() const { return v_; }
  /// max |v| over the support.
  double support_bound() const;
  double sample(Rng& rng) const;
  /// Fills out with consecutive draws; the same values as repeated sample().
  void fill(Rng& rng, std::span<double> out) const;
  /// Compact canonical text, e.g. "uniform_union[-1.5,-1]u[1,1.5]".
  std::string describe() const;

  nlohmann::json to_json() const;
  static DistributionSpec from_json(const nlohmann::json& j);

 private:
  Variant v_;
};

/// p/q in lowest terms, q >= 1.
struct Rational {
  std::int64_t p = 0;
  std::int64_t q = 1;

  static Rational make(std::int64_t p, std::int64_t q);
  /// Parses "p/q" or an integer.
  static Rational parse(const std::string& text);
  double value() const { return static_cast<double>(p) / static_cast<double>(q); }
  std::string to_string() const { return std::to_string(p) + "/" + std::to_string(q); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

enum class Origin { iid, quasiperiodic, constant, explicit_values };

std::string to_string(Origin o);

struct PotentialMeta {
  Origin origin = Origin::explicit_values;
  std::uint64_t seed = 0;
  std::string spec;
  /// Declared bound S1 on max|V|; defines the energy window.
  double bound = 0.0;
};

/// One period V(0..q-1) of a q-periodic potential.
class PotentialSeq {
 public:
  /// Throws ValidationError if empty, non-finite, or exceeding meta.bound.
  PotentialSeq(std::vector<double> values, PotentialMeta meta);

  int period() const { return static_cast<int>(values_.size()); }
  double operator[](int k) const { return values_[static_cast<std::size_t>(k)]; }
  /// V(k mod q) for any integer k.
  double at(long k) const;
  std::span<const double> values() const { return values_; }
  const PotentialMeta& meta() const { return meta_; }
  double max_abs() const;

  friend bool operator==(const PotentialSeq& a, const PotentialSeq& b) { return a.values_ == b.values_; }

 private:
  std::vector<double> values_;
  PotentialMeta meta_;
};

/// q independent draws from dist, taken in site order from the stream
/// derive_seed(seed, {}). The first q' < q values coincide with the q' run.
PotentialSeq sample_iid(const DistributionSpec& dist, int q, std::uint64_t seed);

/// V(k) = 2*amplitude*cos(2 pi (theta + k p/q)), k = 0..period-1. The phase k p/q
/// is reduced mod 1 in integers, so the sequence is exactly q-periodic.
/// period defaults to alpha.q; a different value requires allow_other_period.
PotentialSeq quasiperiodic_seq(double amplitude, double theta, Rational alpha, int period = 0,
                               bool allow_other_period = false);

PotentialSeq constant_seq(double value, int q);
PotentialSeq explicit_seq(std::vector<double> values);

/// (P + sqrt(D)) / Q with D > 0 not a perfect square and Q | (D - P^2).
struct QuadraticIrrational {
  std::int64_t P = 0;
  std::int64_t D = 2;
  std::int64_t Q = 1;

  /// Normalizes so that Q divides D - P^2.
  static QuadraticIrrational make(std::int64_t P, std::int64_t D, std::int64_t Q);
  /// "sqrt2", "sqrt3", "sqrtN", "golden" ((1+sqrt5)/2), "golden-1" ((sqrt5-1)/2).
  static QuadraticIrrational parse(const std::string& name);
  double value() const;
};

struct ContinuedFraction {
  std::vector<std::int64_t> partial_quotients;  // a_0, a_1, ...
  std::vector<Rational> convergents;             // p_n/q_n aligned with partial_quotients
};

/// Exact expansion of a quadratic irrational, `terms` partial quotients.
ContinuedFraction expand(const QuadraticIrrational& alpha, int terms);

/// First `count` convergents in lowest terms, strictly increasing in q. When two
/// consecutive convergents share a denominator (a_1 = 1) the earlier one is dropped.
std::vector<Rational> cf_convergents(const QuadraticIrrational& alpha, int count);

/// Floating-point expansion for a general real; throws ValidationError when the
/// remainder drops below `tolerance`, i.e. alpha is rational at working precision.
std::vector<Rational> cf_convergents(double alpha, int count, double tolerance = 1e-9);

/// K = [-(2 + bound) - margin, 2 + bound + margin].
struct EnergyWindow {
  double lo;
  double hi;
  double width() const { return hi - lo; }
  /// n equispaced points including both ends.
  std::vector<double> grid(int n) const;
};

EnergyWindow energy_window(double bound, double margin = 10.0);
/// Interval [-(2 + max|V|), 2 + max|V|] guaranteed to contain the spectrum.
EnergyWindow spectral_hull(const PotentialSeq& v);

/// One value per line, header "# period=q seed=s".
void write_potential_csv(std::ostream& os, const PotentialSeq& v);
PotentialSeq read_potential_csv(std::istream& is);

}  // namespace thouless
