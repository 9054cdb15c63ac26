#pragma once

#include <vector>

#include <json.hpp>

#include "thouless/bigreal.hpp"
#include "thouless/lyapunov.hpp"
#include "thouless/parallel.hpp"
#include "thouless/potential.hpp"

namespace thouless {

/// B_n(x) = {x - n, ..., x + n} on Z_q.
class Arc {
 public:
  /// Throws ValidationError unless 2n + 1 <= q, so that the sites are distinct.
  Arc(long center, int half_length, int q);

  int center() const { return center_; }
  int half_length() const { return n_; }
  int size() const { return 2 * n_ + 1; }
  /// First site as an unreduced integer; sites run first()..first() + size() - 1.
  long first() const { return static_cast<long>(center_) - n_; }
  /// Position of site x within the arc, or -1 when x is outside.
  int offset(long x) const;

 private:
  int center_;
  int n_;
  int q_;
};

/// Circle distance min over representatives of |x - y| on Z_q.
int circle_distance(long x, long y, int q);
/// Max pairwise circle distance; 0 for fewer than two sites.
int circle_diameter(const std::vector<int>& sites, int q);

/// |G(x, y)| for the Dirichlet restriction of H - E to the arc, by Cramer's
/// rule. Throws NearSingular when |det(H|arc - E)| < 2^{-bits/4}.
BigReal green_entry(const PotentialSeq& V, const Arc& arc, double E, long x, long y, int bits = 128);

/// True when x is (E, epsilon, n)-non-resonant: |G(x, x -+ n)| on B_n(x) both
/// below e^{-(gamma - epsilon) n}. A near-singular arc counts as resonant.
bool classify_site(const PotentialSeq& V, long x, double E, double epsilon, int n, double gamma_at_E, int bits = 128);

struct ResonanceReport {
  double E = 0.0;
  double epsilon = 0.0;
  int n = 0;
  std::vector<int> resonant_sites;
  int diameter = 0;
  bool qnr_at_E = true;

  nlohmann::json to_json() const;
};

ResonanceReport resonant_set(const PotentialSeq& V, double E, double epsilon, int n, const LyapunovCurve& gamma,
                             int bits = 128);

struct QnrResult {
  bool passed = true;
  std::vector<double> failing_energies;
  std::size_t grid_points = 0;
  double grid_spacing = 0.0;

  nlohmann::json to_json() const;
};

/// Q_NR on a finite energy grid; every grid energy must pass.
QnrResult qnr_check(const PotentialSeq& V, double epsilon, int n, const LyapunovCurve& gamma,
                    const std::vector<double>& energies, int bits = 128, Exec exec = Exec::parallel);

struct EnergyInterval {
  double lo;
  double hi;
};

/// Energies at which site x is resonant, as grid runs whose ends are refined
/// by bisection to spacing/100. Grid gaps of a single non-resonant point are
/// kept as separate intervals.
std::vector<EnergyInterval> resonance_energy_set(const PotentialSeq& V, long x, double epsilon, int n,
                                                 const LyapunovCurve& gamma, const std::vector<double>& energies,
                                                 int bits = 128, Exec exec = Exec::parallel);

}  // namespace thouless
