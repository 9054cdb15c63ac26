#pragma once

#include <complex>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "thouless/bigreal.hpp"
#include "thouless/floquet.hpp"

namespace thouless {

struct DecayPoint {
  int site = 0;
  int distance = 0;
  double log_abs = 0.0;
  /// psi(site) is exactly zero; log_abs holds the precision floor instead.
  bool floored = false;
};

struct LocalizationProfile {
  int band = 0;
  FloquetPhase kappa;
  int center = 0;
  std::vector<DecayPoint> decay_points;
  /// Least-squares slope of log|psi| against distance over distances > C n.
  double fitted_rate = 0.0;
  /// Root-mean-square residual of that fit.
  double fit_residual = 0.0;
  int fit_points = 0;
  bool has_floored = false;

  nlohmann::json to_json() const;
};

/// Tabulates log|psi| against circle distance from the modulus-maximizing
/// site (lowest index on ties). Throws ValidationError for an all-zero vector.
LocalizationProfile localization_profile(std::span<const BigComplex> psi, double C, int n, int band = 0,
                                         FloquetPhase kappa = {});
LocalizationProfile localization_profile(const EigenPair& pair, double C, int n);

struct DecayCheck {
  bool holds = true;
  /// max over checked sites of log|psi(x)| + (gamma - 2 eps) d(x); -inf if no site is checked.
  double worst_excess = 0.0;
  int worst_site = -1;
};

/// log|psi(x)| <= -(gamma - 2 eps) d(x) for every x with d(x) > C n.
DecayCheck check_decay_bound(const LocalizationProfile& p, double gamma_at_E, double epsilon, double C, int n);

/// C = max(2, 2 max_K gamma / eps).
double default_radius_constant(double gamma_max, double epsilon);

/// Equispaced phases in [0, pi/q], endpoints included.
std::vector<FloquetPhase> kappa_grid(int points);

struct DriftReport {
  int band = 0;
  std::vector<int> centers;
  int drift = 0;
  /// Some eigenvector had max/min modulus ratio below 2; drift is then the floor(q/2) sentinel.
  bool flat = false;

  nlohmann::json to_json() const;
};

DriftReport center_drift(const Spectrum& s, int band, const std::vector<FloquetPhase>& kappas);
std::vector<DriftReport> center_drifts(const Spectrum& s, const std::vector<FloquetPhase>& kappas,
                                       Exec exec = Exec::parallel);

/// W(x) = psi'(x) psi(x+1) - psi(x) psi'(x+1), indices mod q.
std::vector<BigComplex> wronskian(std::span<const BigComplex> psi, std::span<const BigComplex> psi_prime);
std::vector<std::complex<double>> wronskian(std::span<const std::complex<double>> psi,
                                            std::span<const std::complex<double>> psi_prime);

struct SeparationReport {
  /// Smallest gap of the sorted kappa = 0 eigenvalues counted with multiplicity.
  BigReal min_gap;
  /// Smallest gap between distinct kappa = 0 eigenvalues.
  BigReal min_distinct_gap;
  double epsilon = 0.0;
  /// e^{-eps q}
  BigReal threshold;
  bool qsep = false;
  /// 1-based band indices of the pair attaining min_gap.
  int argmin_lo = 0;
  int argmin_hi = 0;

  nlohmann::json to_json() const;
};

SeparationReport separation_report(const Spectrum& s, double epsilon, Exec exec = Exec::parallel);
SeparationReport separation_report(const PotentialSeq& V, double epsilon, int bits = 0, Exec exec = Exec::parallel);

/// distance,log_abs,floored rows for one profile.
void write_decay_csv(std::ostream& os, const LocalizationProfile& p);

}  // namespace thouless
