#include "thouless/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "thouless/errors.hpp"

namespace thouless {

Arc::Arc(long center, int half_length, int q) : n_(half_length), q_(q) {
  if (q < 1) throw ValidationError("period must be positive");
  if (half_length < 0 || 2L * half_length + 1 > q)
    throw ValidationError("arc half-length " + std::to_string(half_length) + " needs 2n+1 <= q = " + std::to_string(q));
  center_ = static_cast<int>(((center % q) + q) % q);
}

int Arc::offset(long x) const {
  const long d = (((x - first()) % q_) + q_) % q_;
  return d < size() ? static_cast<int>(d) : -1;
}

int circle_distance(long x, long y, int q) {
  const long d = (((x - y) % q) + q) % q;
  return static_cast<int>(std::min(d, q - d));
}

int circle_diameter(const std::vector<int>& sites, int q) {
  int best = 0;
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t j = i + 1; j < sites.size(); ++j) best = std::max(best, circle_distance(sites[i], sites[j], q));
  return best;
}

namespace {

/// Preallocated three-term recurrence for P_[a, b](E) = det(H|[a,b] - E).
class DetRecurrence {
 public:
  DetRecurrence(const PotentialSeq& V, double E, int bits) : V_(V), E_(E), p0_(bits), p1_(bits), t_(bits) {}

  /// Starts a fresh product at site a (P_[a, a-1] = 1).
  void reset() {
    p1_ = 1.0;
    p0_ = 0.0;
  }
  /// Appends site k.
  void push(long k) {
    t_ = V_.at(k) - E_;
    fms(p0_, t_, p1_, p0_);
    swap(p0_, p1_);
  }
  const BigReal& value() const { return p1_; }

  /// P over [a, b] from scratch.
  const BigReal& run(long a, long b) {
    reset();
    for (long k = a; k <= b; ++k) push(k);
    return p1_;
  }

 private:
  const PotentialSeq& V_;
  double E_;
  BigReal p0_, p1_, t_;
};

double log_floor(int bits) { return -(bits / 4.0) * std::numbers::ln2; }

}  // namespace

BigReal green_entry(const PotentialSeq& V, const Arc& arc, double E, long x, long y, int bits) {
  int i = arc.offset(x), j = arc.offset(y);
  if (i < 0 || j < 0) throw ValidationError("green_entry: sites must lie in the arc");
  if (i > j) std::swap(i, j);
  const long a = arc.first();
  const long b = a + arc.size() - 1;
  DetRecurrence r(V, E, bits);
  BigReal whole = abs(r.run(a, b));
  if (whole.is_zero() || whole.log_abs() < log_floor(bits))
    throw NearSingular("arc determinant below the near-singular floor 2^-" + std::to_string(bits / 4) + " at E = " +
                           std::to_string(E),
                       whole.is_zero() ? -INFINITY : whole.log_abs() / std::numbers::ln2);
  BigReal left = abs(r.run(a, a + i - 1));
  BigReal right = abs(r.run(a + j + 1, b));
  return left * right / whole;
}

bool classify_site(const PotentialSeq& V, long x, double E, double epsilon, int n, double gamma_at_E, int bits) {
  if (n < 1) throw ValidationError("classify_site needs n >= 1");
  const Arc arc(x, n, V.period());
  const long a = arc.first();
  const long c = a + n;
  DetRecurrence r(V, E, bits);
  r.reset();
  for (long k = a; k < c; ++k) r.push(k);
  const double log_left = r.value().log_abs();
  for (long k = c; k <= c + n; ++k) r.push(k);
  const double log_whole = r.value().log_abs();
  if (r.value().is_zero() || log_whole < log_floor(bits)) return false;
  const double log_right = r.run(c + 1, c + n).log_abs();
  const double threshold = -(gamma_at_E - epsilon) * n;
  return log_left - log_whole < threshold && log_right - log_whole < threshold;
}

nlohmann::json ResonanceReport::to_json() const {
  return {{"E", E},
          {"epsilon", epsilon},
          {"n", n},
          {"resonant_sites", resonant_sites},
          {"diameter", diameter},
          {"qnr", qnr_at_E},
          {"diameter_definition", "max pairwise circle distance"}};
}

ResonanceReport resonant_set(const PotentialSeq& V, double E, double epsilon, int n, const LyapunovCurve& gamma,
                             int bits) {
  const int q = V.period();
  if (q <= 2 * n) throw ValidationError("resonant_set needs q > 2n");
  ResonanceReport r;
  r.E = E;
  r.epsilon = epsilon;
  r.n = n;
  const double g = gamma.at(E);
  for (int x = 0; x < q; ++x)
    if (!classify_site(V, x, E, epsilon, n, g, bits)) r.resonant_sites.push_back(x);
  r.diameter = circle_diameter(r.resonant_sites, q);
  r.qnr_at_E = r.diameter <= 2 * n;
  return r;
}

nlohmann::json QnrResult::to_json() const {
  return {{"qnr", passed},
          {"failing_energies", failing_energies},
          {"grid_points", grid_points},
          {"grid_spacing", grid_spacing},
          {"grid_note", "Q_NR is evaluated on a finite energy grid"}};
}

QnrResult qnr_check(const PotentialSeq& V, double epsilon, int n, const LyapunovCurve& gamma,
                    const std::vector<double>& energies, int bits, Exec exec) {
  const auto ok = parallel_map<char>(exec, energies.size(), [&](std::size_t i) {
    return static_cast<char>(resonant_set(V, energies[i], epsilon, n, gamma, bits).qnr_at_E);
  });
  QnrResult r;
  r.grid_points = energies.size();
  for (std::size_t i = 1; i < energies.size(); ++i)
    r.grid_spacing = std::max(r.grid_spacing, energies[i] - energies[i - 1]);
  for (std::size_t i = 0; i < energies.size(); ++i)
    if (!ok[i]) r.failing_energies.push_back(energies[i]);
  r.passed = r.failing_energies.empty();
  return r;
}

std::vector<EnergyInterval> resonance_energy_set(const PotentialSeq& V, long x, double epsilon, int n,
                                                 const LyapunovCurve& gamma, const std::vector<double>& energies,
                                                 int bits, Exec exec) {
  const auto resonant = [&](double E) { return !classify_site(V, x, E, epsilon, n, gamma.at(E), bits); };
  const auto flags =
      parallel_map<char>(exec, energies.size(), [&](std::size_t i) { return static_cast<char>(resonant(energies[i])); });
  double spacing = 0.0;
  for (std::size_t i = 1; i < energies.size(); ++i) spacing = std::max(spacing, energies[i] - energies[i - 1]);
  const double tol = spacing / 100.0;
  // Bisection between a resonant point `in` and a non-resonant point `out`;
  // returns the resonant end.
  const auto refine = [&](double in, double out) {
    while (std::fabs(out - in) > tol) {
      const double mid = 0.5 * (in + out);
      (resonant(mid) ? in : out) = mid;
    }
    return in;
  };
  std::vector<EnergyInterval> out;
  for (std::size_t i = 0; i < energies.size();) {
    if (!flags[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < energies.size() && flags[j + 1]) ++j;
    const double lo = i > 0 ? refine(energies[i], energies[i - 1]) : energies[i];
    const double hi = j + 1 < energies.size() ? refine(energies[j], energies[j + 1]) : energies[j];
    out.push_back({lo, hi});
    i = j + 1;
  }
  return out;
}

}  // namespace thouless
