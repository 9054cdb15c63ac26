#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "thouless/parallel.hpp"
#include "thouless/potential.hpp"

namespace thouless {

/// Estimates of gamma(E) on a strictly increasing energy grid.
struct LyapunovCurve {
  std::vector<double> energies;
  std::vector<double> gamma;
  /// Standard error per point; 0 for deterministic estimators.
  std::vector<double> stderr_;
  std::string method;
  /// Estimator parameters (n, samples, seed, model). Part of the cache key.
  nlohmann::json parameters = nlohmann::json::object();

  std::size_t size() const { return energies.size(); }
  /// Linear interpolation, clamped to the end values outside the grid.
  double at(double E) const;
  double stderr_at(double E) const;
  double max_gamma() const;
  double min_gamma() const;
  /// Hash of method, parameters and grid.
  std::string cache_key() const;
};

/// Mean over `samples` independent potentials of n^{-1} log ||Phi_n(E)||.
/// Sample k at energy index e draws from derive_seed(seed, {e, k}).
LyapunovCurve lyapunov_iid_mc(const DistributionSpec& dist, std::vector<double> energies, int n, int samples,
                              std::uint64_t seed, Exec exec = Exec::parallel);

/// n^{-1} log ||Phi_n(E)|| along the orbit theta, theta + alpha, ... of the
/// potential 2 lambda cos(2 pi x).
LyapunovCurve lyapunov_birkhoff(double lambda, double theta, long double alpha, std::vector<double> energies, int n,
                                Exec exec = Exec::parallel);

/// log lambda, the exponent of the almost Mathieu operator with coupling
/// 2 lambda on its spectrum. Throws ValidationError for lambda < 1.
double amo_oracle(double lambda, double E);
/// The same value tabulated on a grid, as a curve.
LyapunovCurve amo_oracle_curve(double lambda, std::vector<double> energies);

/// gamma = value at the two points lo < hi, hence everywhere by clamping.
LyapunovCurve constant_curve(double value, double lo, double hi);

/// "# key=value" header lines, then energy,gamma,stderr rows with 17 significant digits.
void write_lyapunov_csv(std::ostream& os, const LyapunovCurve& c);
LyapunovCurve read_lyapunov_csv(std::istream& is);

/// Returns the curve stored in `dir` under `key`, computing and storing it
/// otherwise. The key must identify method, parameters and grid. An empty
/// dir disables caching.
LyapunovCurve cached_curve(const std::filesystem::path& dir, const std::string& key,
                           const std::function<LyapunovCurve()>& compute);

}  // namespace thouless
