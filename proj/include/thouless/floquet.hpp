#pragma once

#include <complex>
#include <iosfwd>
#include <vector>

#include "thouless/bigreal.hpp"
#include "thouless/parallel.hpp"
#include "thouless/potential.hpp"

namespace thouless {

/// Floquet phase kappa in R / (2 pi / q) Z, stored in units of pi/q reduced
/// to [0, 2). Integer units are the periodic (even) and antiperiodic (odd)
/// boundary conditions and have exact discriminant targets.
class FloquetPhase {
 public:
  FloquetPhase() = default;
  static FloquetPhase from_units(double units);
  static FloquetPhase from_kappa(double kappa, int q);
  static FloquetPhase periodic() { return from_units(0.0); }
  static FloquetPhase antiperiodic() { return from_units(1.0); }

  double units() const { return units_; }
  double kappa(int q) const;
  /// kappa = units * pi / q at the given precision.
  BigReal kappa(int q, int bits) const;
  /// 2 cos(q kappa), the value Delta takes at the eigenvalues.
  BigReal target(int bits) const;

  friend bool operator==(const FloquetPhase&, const FloquetPhase&) = default;

 private:
  explicit FloquetPhase(double u) : units_(u) {}
  double units_ = 0.0;
};

struct Band {
  int index = 0;  // 1-based, left to right
  BigReal left;
  BigReal right;
  /// The adjacent gap is closed within tolerance and the edge is shared.
  bool closed_left = false;
  bool closed_right = false;

  BigReal center() const { return (left + right) / 2.0; }
  BigReal width() const { return right - left; }
  /// -q^{-1} ln(width); +inf for a degenerate band.
  double log_width_rate(int q) const;
};

struct SpectrumOptions {
  /// 0 selects the precision automatically and retries with more bits when
  /// the discriminant cannot be resolved.
  int bits = 0;
  Exec exec = Exec::parallel;
  int max_bits = 1 << 15;
};

/// Band catalog of one potential, certified at `bits`.
struct Spectrum {
  PotentialSeq potential;
  int bits = 0;
  std::vector<Band> bands;
  /// Dirichlet eigenvalues of sites 1..q-1, one in each gap.
  std::vector<BigReal> separators;
  /// log2 of the worst a-priori discriminant error seen at the final edges.
  double log2_err = 0.0;

  int q() const { return potential.period(); }
};

BigReal discriminant(const PotentialSeq& V, const BigReal& E);
/// det(A(kappa) - E) = (-1)^q (Delta(E) - 2 cos(q kappa)).
BigReal char_poly_value(const PotentialSeq& V, const BigReal& E, FloquetPhase kappa);

/// Eigenvalues of the Dirichlet restriction to sites [first, last], by Sturm bisection in double.
std::vector<double> dirichlet_eigenvalues(const PotentialSeq& V, int first, int last, Exec exec = Exec::parallel);

Spectrum compute_spectrum(const PotentialSeq& V, SpectrumOptions opt = {});
std::vector<Band> bands(const PotentialSeq& V, int bits = 0, Exec exec = Exec::parallel);

/// The eigenvalue of A(kappa) in band `band` (1-based).
BigReal band_eigenvalue(const Spectrum& s, int band, FloquetPhase kappa);
/// The q eigenvalues of A(kappa), one per band, sorted.
std::vector<BigReal> eigenvalues(const Spectrum& s, FloquetPhase kappa, Exec exec = Exec::parallel);

struct EigenPair {
  FloquetPhase kappa;
  int band = 0;
  BigReal E;
  std::vector<BigComplex> psi;
  double residual = 0.0;

  std::vector<std::complex<double>> psi_double() const;
  /// Site with the largest modulus, lowest index on ties.
  int center() const;
};

struct EigenvectorOptions {
  int max_iterations = 8;
  /// 0 means 2^{-(bits/4 + 4)}.
  double residual_tolerance = 0.0;
};

/// Inverse iteration for A(kappa) at eigenvalue E. The result has unit norm
/// and psi(nu) real positive at its modulus-maximizing site nu.
EigenPair eigenvector(const PotentialSeq& V, FloquetPhase kappa, const BigReal& E, int band = 0,
                      EigenvectorOptions opt = {});

/// ||(A(kappa) - E) psi||_2
BigReal residual_norm(const PotentialSeq& V, FloquetPhase kappa, const BigReal& E, const std::vector<BigComplex>& psi);

/// |E_j(0) - E_j(pi/q)| per band.
std::vector<BigReal> thouless_sensitivity(const Spectrum& s, Exec exec = Exec::parallel);

/// Columns j,left,right,center,width,log_width_rate with digits matching the precision.
void write_bands_csv(std::ostream& os, const Spectrum& s);

}  // namespace thouless
