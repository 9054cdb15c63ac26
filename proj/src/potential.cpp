#include "thouless/potential.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "thouless/errors.hpp"

namespace thouless {
namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

void validate(const UniformUnion& u) {
  if (u.intervals.empty()) throw ValidationError("uniform_union needs at least one interval");
  auto iv = u.intervals;
  std::sort(iv.begin(), iv.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (std::size_t i = 0; i < iv.size(); ++i) {
    if (!std::isfinite(iv[i].lo) || !std::isfinite(iv[i].hi) || !(iv[i].lo < iv[i].hi))
      throw ValidationError("interval [" + fmt(iv[i].lo) + "," + fmt(iv[i].hi) + "] is degenerate");
    if (i > 0 && !(iv[i - 1].hi < iv[i].lo))
      throw ValidationError("intervals [" + fmt(iv[i - 1].lo) + "," + fmt(iv[i - 1].hi) + "] and [" +
                            fmt(iv[i].lo) + "," + fmt(iv[i].hi) + "] overlap");
  }
}

void validate(const Bernoulli& b) {
  if (!std::isfinite(b.low) || !std::isfinite(b.high))
    throw ValidationError("bernoulli atoms must be finite");
  if (!(b.p_high >= 0.0 && b.p_high <= 1.0))
    throw ValidationError("bernoulli probability " + fmt(b.p_high) + " outside [0,1]");
}

void validate(const DiscreteAtoms& d) {
  if (d.values.empty() || d.values.size() != d.probabilities.size())
    throw ValidationError("atoms need matching, nonempty value and probability lists");
  double total = 0.0;
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    if (!std::isfinite(d.values[i])) throw ValidationError("atom values must be finite");
    if (!(d.probabilities[i] >= 0.0)) throw ValidationError("atom probabilities must be nonnegative");
    total += d.probabilities[i];
  }
  if (std::fabs(total - 1.0) > 1e-12)
    throw ValidationError("atom probabilities sum to " + fmt(total) + ", not 1");
}

void validate(const ConstantValue& c) {
  if (!std::isfinite(c.value)) throw ValidationError("constant value must be finite");
}

}  // namespace

DistributionSpec::DistributionSpec(Variant v) : v_(std::move(v)) {
  std::visit([](const auto& x) { validate(x); }, v_);
  if (auto* u = std::get_if<UniformUnion>(&v_))
    std::sort(u->intervals.begin(), u->intervals.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
}

DistributionSpec DistributionSpec::uniform_union(std::vector<Interval> intervals) {
  return DistributionSpec(UniformUnion{std::move(intervals)});
}
DistributionSpec DistributionSpec::bernoulli(double low, double high, double p_high) {
  return DistributionSpec(Bernoulli{low, high, p_high});
}
DistributionSpec DistributionSpec::atoms(std::vector<double> values, std::vector<double> probabilities) {
  return DistributionSpec(DiscreteAtoms{std::move(values), std::move(probabilities)});
}
DistributionSpec DistributionSpec::constant(double value) { return DistributionSpec(ConstantValue{value}); }
DistributionSpec DistributionSpec::default_iid() { return uniform_union({{-1.5, -1.0}, {1.0, 1.5}}); }

double DistributionSpec::support_bound() const {
  struct {
    double operator()(const UniformUnion& u) const {
      double m = 0.0;
      for (const auto& iv : u.intervals) m = std::max({m, std::fabs(iv.lo), std::fabs(iv.hi)});
      return m;
    }
    double operator()(const Bernoulli& b) const {
      double m = 0.0;
      if (b.p_high < 1.0) m = std::fabs(b.low);
      if (b.p_high > 0.0) m = std::max(m, std::fabs(b.high));
      return m;
    }
    double operator()(const DiscreteAtoms& d) const {
      double m = 0.0;
      for (std::size_t i = 0; i < d.values.size(); ++i)
        if (d.probabilities[i] > 0.0) m = std::max(m, std::fabs(d.values[i]));
      return m;
    }
    double operator()(const ConstantValue& c) const { return std::fabs(c.value); }
  } visitor;
  return std::visit(visitor, v_);
}

double DistributionSpec::sample(Rng& rng) const {
  struct {
    Rng& rng;
    double operator()(const UniformUnion& u) const {
      double total = 0.0;
      for (const auto& iv : u.intervals) total += iv.hi - iv.lo;
      double t = rng.uniform01() * total;
      for (const auto& iv : u.intervals) {
        const double len = iv.hi - iv.lo;
        if (t < len) return iv.lo + t;
        t -= len;
      }
      return u.intervals.back().hi;
    }
    double operator()(const Bernoulli& b) const { return rng.uniform01() < b.p_high ? b.high : b.low; }
    double operator()(const DiscreteAtoms& d) const {
      double t = rng.uniform01();
      for (std::size_t i = 0; i < d.values.size(); ++i) {
        if (t < d.probabilities[i]) return d.values[i];
        t -= d.probabilities[i];
      }
      for (std::size_t i = d.values.size(); i-- > 0;)
        if (d.probabilities[i] > 0.0) return d.values[i];
      return d.values.back();
    }
    double operator()(const ConstantValue& c) const { return c.value; }
  } visitor{rng};
  return std::visit(visitor, v_);
}

void DistributionSpec::fill(Rng& rng, std::span<double> out) const {
  if (const auto* u = std::get_if<UniformUnion>(&v_)) {
    double total = 0.0;
    for (const auto& iv : u->intervals) total += iv.hi - iv.lo;
    if (u->intervals.size() == 2) {
      const Interval a = u->intervals[0], b = u->intervals[1];
      const double la = a.hi - a.lo, lb = b.hi - b.lo;
      for (double& x : out) {
        const double t = rng.uniform01() * total;
        const double r = t - la;
        x = t < la ? a.lo + t : (r < lb ? b.lo + r : b.hi);
      }
      return;
    }
  }
  for (double& x : out) x = sample(rng);
}

std::string DistributionSpec::describe() const {
  struct {
    std::string operator()(const UniformUnion& u) const {
      std::string s = "uniform_union";
      for (std::size_t i = 0; i < u.intervals.size(); ++i)
        s += (i ? "u[" : "[") + fmt(u.intervals[i].lo) + "," + fmt(u.intervals[i].hi) + "]";
      return s;
    }
    std::string operator()(const Bernoulli& b) const {
      return "bernoulli{" + fmt(b.low) + "," + fmt(b.high) + ",p=" + fmt(b.p_high) + "}";
    }
    std::string operator()(const DiscreteAtoms& d) const {
      std::string s = "atoms{";
      for (std::size_t i = 0; i < d.values.size(); ++i)
        s += (i ? "," : "") + fmt(d.values[i]) + ":" + fmt(d.probabilities[i]);
      return s + "}";
    }
    std::string operator()(const ConstantValue& c) const { return "constant{" + fmt(c.value) + "}"; }
  } visitor;
  return std::visit(visitor, v_);
}

nlohmann::json DistributionSpec::to_json() const {
  struct {
    nlohmann::json operator()(const UniformUnion& u) const {
      nlohmann::json iv = nlohmann::json::array();
      for (const auto& i : u.intervals) iv.push_back({i.lo, i.hi});
      return {{"type", "uniform_union"}, {"intervals", iv}};
    }
    nlohmann::json operator()(const Bernoulli& b) const {
      return {{"type", "bernoulli"}, {"low", b.low}, {"high", b.high}, {"p_high", b.p_high}};
    }
    nlohmann::json operator()(const DiscreteAtoms& d) const {
      return {{"type", "atoms"}, {"values", d.values}, {"probabilities", d.probabilities}};
    }
    nlohmann::json operator()(const ConstantValue& c) const { return {{"type", "constant"}, {"value", c.value}}; }
  } visitor;
  return std::visit(visitor, v_);
}

DistributionSpec DistributionSpec::from_json(const nlohmann::json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "uniform_union") {
      std::vector<Interval> iv;
      for (const auto& e : j.at("intervals")) {
        if (!e.is_array() || e.size() != 2) throw ValidationError("interval must be [lo, hi]");
        iv.push_back({e[0].get<double>(), e[1].get<double>()});
      }
      return uniform_union(std::move(iv));
    }
    if (type == "bernoulli")
      return bernoulli(j.at("low").get<double>(), j.at("high").get<double>(), j.at("p_high").get<double>());
    if (type == "atoms")
      return atoms(j.at("values").get<std::vector<double>>(), j.at("probabilities").get<std::vector<double>>());
    if (type == "constant") return constant(j.at("value").get<double>());
    throw ValidationError("unknown distribution type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed distribution: ") + e.what());
  }
}

Rational Rational::make(std::int64_t p, std::int64_t q) {
  if (q == 0) throw ValidationError("rational with zero denominator");
  if (q < 0) {
    p = -p;
    q = -q;
  }
  const std::int64_t g = std::gcd(p < 0 ? -p : p, q);
  return {p / g, q / g};
}

Rational Rational::parse(const std::string& text) {
  const auto slash = text.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const auto p = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return make(p, 1);
    }
    const auto ps = text.substr(0, slash), qs = text.substr(slash + 1);
    const auto p = std::stoll(ps, &used);
    if (used != ps.size()) throw std::invalid_argument(text);
    const auto q = std::stoll(qs, &used);
    if (used != qs.size()) throw std::invalid_argument(text);
    return make(p, q);
  } catch (const std::logic_error&) {
    throw ValidationError("cannot parse rational '" + text + "'");
  }
}

std::string to_string(Origin o) {
  switch (o) {
    case Origin::iid: return "iid";
    case Origin::quasiperiodic: return "quasiperiodic";
    case Origin::constant: return "constant";
    case Origin::explicit_values: return "explicit";
  }
  return "unknown";
}

PotentialSeq::PotentialSeq(std::vector<double> values, PotentialMeta meta)
    : values_(std::move(values)), meta_(std::move(meta)) {
  if (values_.empty()) throw ValidationError("potential period must be at least 1");
  for (double v : values_)
    if (!std::isfinite(v)) throw ValidationError("potential values must be finite");
  const double m = max_abs();
  if (m > meta_.bound * (1.0 + 1e-12) + 1e-300)
    throw ValidationError("max|V| = " + fmt(m) + " exceeds declared bound " + fmt(meta_.bound));
}

double PotentialSeq::at(long k) const {
  const long q = static_cast<long>(values_.size());
  long r = k % q;
  if (r < 0) r += q;
  return values_[static_cast<std::size_t>(r)];
}

double PotentialSeq::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::fabs(v));
  return m;
}

PotentialSeq sample_iid(const DistributionSpec& dist, int q, std::uint64_t seed) {
  if (q < 1) throw ValidationError("period q must be >= 1");
  Rng rng(derive_seed(seed, {}));
  std::vector<double> v(static_cast<std::size_t>(q));
  for (auto& x : v) x = dist.sample(rng);
  return PotentialSeq(std::move(v), {Origin::iid, seed, dist.describe(), dist.support_bound()});
}

PotentialSeq quasiperiodic_seq(double amplitude, double theta, Rational alpha, int period,
                               bool allow_other_period) {
  if (amplitude < 0.0 || !std::isfinite(amplitude)) throw ValidationError("amplitude must be finite and >= 0");
  if (period == 0) period = static_cast<int>(alpha.q);
  if (period <= 0) throw ValidationError("period q must be >= 1");
  if (period != alpha.q && !allow_other_period)
    throw ValidationError("period " + std::to_string(period) + " differs from the denominator of " +
                          alpha.to_string());
  std::vector<double> v(static_cast<std::size_t>(period));
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  const long double th = static_cast<long double>(theta);
  for (int k = 0; k < period; ++k) {
    std::int64_t r = (static_cast<std::int64_t>(k) * alpha.p) % alpha.q;
    if (r < 0) r += alpha.q;
    const long double phase = th + static_cast<long double>(r) / static_cast<long double>(alpha.q);
    v[static_cast<std::size_t>(k)] = static_cast<double>(2.0L * amplitude * std::cos(two_pi * phase));
  }
  std::ostringstream spec;
  spec.precision(17);
  spec << "amo{lambda=" << amplitude << ",theta=" << theta << ",alpha=" << alpha.to_string() << "}";
  return PotentialSeq(std::move(v), {Origin::quasiperiodic, 0, spec.str(), 2.0 * amplitude});
}

PotentialSeq constant_seq(double value, int q) {
  if (q < 1) throw ValidationError("period q must be >= 1");
  return PotentialSeq(std::vector<double>(static_cast<std::size_t>(q), value),
                      {Origin::constant, 0, "constant{" + fmt(value) + "}", std::fabs(value)});
}

PotentialSeq explicit_seq(std::vector<double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::fabs(v));
  return PotentialSeq(std::move(values), {Origin::explicit_values, 0, "explicit", m});
}

namespace {

std::int64_t isqrt(std::int64_t n) {
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<long double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t d = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --d;
  return d;
}

std::int64_t checked_next(std::int64_t a, std::int64_t x1, std::int64_t x0) {
  std::int64_t prod = 0, sum = 0;
  if (__builtin_mul_overflow(a, x1, &prod) || __builtin_add_overflow(prod, x0, &sum))
    throw ValidationError("continued fraction convergent overflows 64-bit integers");
  return sum;
}

std::vector<Rational> strictly_increasing(const std::vector<Rational>& all, int count) {
  std::vector<Rational> out;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i + 1 < all.size() && all[i + 1].q == all[i].q) continue;
    out.push_back(all[i]);
    if (static_cast<int>(out.size()) == count) break;
  }
  return out;
}

}  // namespace

QuadraticIrrational QuadraticIrrational::make(std::int64_t P, std::int64_t D, std::int64_t Q) {
  if (D <= 0 || Q == 0) throw ValidationError("quadratic irrational needs D > 0 and Q != 0");
  const std::int64_t s = isqrt(D);
  if (s * s == D) throw ValidationError("sqrt(" + std::to_string(D) + ") is rational");
  if ((D - P * P) % Q != 0) {
    const std::int64_t aq = Q < 0 ? -Q : Q;
    P *= aq;
    D *= Q * Q;
    Q *= aq;
  }
  return {P, D, Q};
}

QuadraticIrrational QuadraticIrrational::parse(const std::string& name) {
  if (name == "golden") return make(1, 5, 2);
  if (name == "golden-1" || name == "golden_conjugate") return make(-1, 5, 2);
  if (name.rfind("sqrt", 0) == 0) {
    try {
      std::size_t used = 0;
      const auto d = std::stoll(name.substr(4), &used);
      if (used == name.size() - 4) return make(0, d, 1);
    } catch (const std::logic_error&) {
    }
  }
  throw ValidationError("unknown quadratic irrational '" + name + "' (use sqrtN, golden, golden-1)");
}

double QuadraticIrrational::value() const {
  return (static_cast<double>(P) + std::sqrt(static_cast<double>(D))) / static_cast<double>(Q);
}

ContinuedFraction expand(const QuadraticIrrational& alpha, int terms) {
  if (terms < 1) throw ValidationError("count must be >= 1");
  const std::int64_t s = isqrt(alpha.D);
  std::int64_t P = alpha.P, Q = alpha.Q;
  ContinuedFraction cf;
  std::int64_t p1 = 1, p0 = 0, q1 = 0, q0 = 1;  // p_{-1}, p_{-2}, q_{-1}, q_{-2}
  for (int n = 0; n < terms; ++n) {
    // floor((P + sqrt D)/Q); sqrt D is irrational so the floor of (P + s)/Q is exact
    // for Q > 0, and needs the +1 shift for Q < 0.
    const std::int64_t a = Q > 0 ? floor_div(P + s, Q) : floor_div(P + s + 1, Q);
    cf.partial_quotients.push_back(a);
    const std::int64_t p = checked_next(a, p1, p0), q = checked_next(a, q1, q0);
    cf.convergents.push_back(Rational{p, q});
    p0 = p1;
    p1 = p;
    q0 = q1;
    q1 = q;
    P = a * Q - P;
    Q = (alpha.D - P * P) / Q;
  }
  return cf;
}

std::vector<Rational> cf_convergents(const QuadraticIrrational& alpha, int count) {
  if (count < 1) throw ValidationError("count must be >= 1");
  return strictly_increasing(expand(alpha, count + 1).convergents, count);
}

std::vector<Rational> cf_convergents(double alpha, int count, double tolerance) {
  if (count < 1) throw ValidationError("count must be >= 1");
  if (!std::isfinite(alpha)) throw ValidationError("alpha must be finite");
  std::vector<Rational> all;
  long double x = alpha;
  std::int64_t p1 = 1, p0 = 0, q1 = 0, q0 = 1;
  for (int n = 0; n <= count; ++n) {
    const long double a_ld = std::floor(x);
    if (std::fabs(a_ld) > 1e15L) throw ValidationError("partial quotient too large");
    const auto a = static_cast<std::int64_t>(a_ld);
    const std::int64_t p = checked_next(a, p1, p0), q = checked_next(a, q1, q0);
    all.push_back(Rational{p, q});
    p0 = p1;
    p1 = p;
    q0 = q1;
    q1 = q;
    const long double frac = x - a_ld;
    if (n < count && frac < tolerance)
      throw ValidationError("continued fraction of " + fmt(alpha) + " terminates after " + std::to_string(n + 1) +
                            " terms at " + Rational{p, q}.to_string() + "; alpha is rational at tolerance " +
                            fmt(tolerance));
    if (frac <= 0) break;
    x = 1.0L / frac;
  }
  auto out = strictly_increasing(all, count);
  if (static_cast<int>(out.size()) < count)
    throw ValidationError("continued fraction of " + fmt(alpha) + " terminated before " + std::to_string(count) +
                          " convergents");
  return out;
}

std::vector<double> EnergyWindow::grid(int n) const {
  if (n < 2) throw ValidationError("energy grid needs at least 2 points");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  g.back() = hi;
  return g;
}

EnergyWindow energy_window(double bound, double margin) {
  const double r = 2.0 + std::fabs(bound) + margin;
  return {-r, r};
}

EnergyWindow spectral_hull(const PotentialSeq& v) {
  const double r = 2.0 + v.max_abs();
  return {-r, r};
}

void write_potential_csv(std::ostream& os, const PotentialSeq& v) {
  os << "# period=" << v.period() << " seed=" << v.meta().seed << "\n";
  os.precision(17);
  for (double x : v.values()) os << x << "\n";
  if (!os) throw IoError("failed writing potential CSV");
}

PotentialSeq read_potential_csv(std::istream& is) {
  std::string line;
  long period = -1;
  std::uint64_t seed = 0;
  std::vector<double> values;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string tok;
      while (hs >> tok) {
        if (tok.rfind("period=", 0) == 0) period = std::stol(tok.substr(7));
        if (tok.rfind("seed=", 0) == 0) seed = std::stoull(tok.substr(5));
      }
      continue;
    }
    try {
      values.push_back(std::stod(line));
    } catch (const std::logic_error&) {
      throw ValidationError("bad potential value '" + line + "'");
    }
  }
  if (period < 0) throw ValidationError("potential CSV lacks '# period=q' header");
  if (static_cast<long>(values.size()) != period)
    throw ValidationError("potential CSV declares period " + std::to_string(period) + " but has " +
                          std::to_string(values.size()) + " values");
  auto seq = explicit_seq(std::move(values));
  auto meta = seq.meta();
  meta.seed = seed;
  return PotentialSeq(std::vector<double>(seq.values().begin(), seq.values().end()), meta);
}

}  // namespace thouless
