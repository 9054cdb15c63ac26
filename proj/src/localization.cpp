#include "thouless/localization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "thouless/errors.hpp"
#include "thouless/resonance.hpp"

namespace thouless {

namespace {

/// Lowest index whose |psi|^2 is within relative 2^{-bits/2} of the maximum.
int argmax_site(const std::vector<BigReal>& norms) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < norms.size(); ++i)
    if (norms[i] > norms[best]) best = i;
  const int bits = norms[best].bits();
  const BigReal cut = norms[best] - ldexp(norms[best], -bits / 2);
  for (std::size_t i = 0; i < best; ++i)
    if (norms[i] >= cut) return static_cast<int>(i);
  return static_cast<int>(best);
}

}  // namespace

LocalizationProfile localization_profile(std::span<const BigComplex> psi, double C, int n, int band,
                                         FloquetPhase kappa) {
  if (psi.empty()) throw ValidationError("localization_profile: empty vector");
  const int q = static_cast<int>(psi.size());
  const int bits = psi[0].bits();
  std::vector<BigReal> norms;
  norms.reserve(psi.size());
  bool any = false;
  for (const auto& z : psi) {
    norms.push_back(z.norm());
    any = any || !norms.back().is_zero();
  }
  if (!any) throw ValidationError("localization_profile: all-zero vector");

  LocalizationProfile p;
  p.band = band;
  p.kappa = kappa;
  p.center = argmax_site(norms);
  const double floor = -bits * std::numbers::ln2;
  const double radius = C * n;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int x = 0; x < q; ++x) {
    DecayPoint d;
    d.site = x;
    d.distance = circle_distance(x, p.center, q);
    const BigReal& m = norms[static_cast<std::size_t>(x)];
    d.floored = m.is_zero();
    d.log_abs = d.floored ? floor : 0.5 * m.log_abs();
    p.has_floored = p.has_floored || d.floored;
    if (d.distance > radius && !d.floored) {
      ++p.fit_points;
      sx += d.distance;
      sy += d.log_abs;
      sxx += static_cast<double>(d.distance) * d.distance;
      sxy += d.distance * d.log_abs;
    }
    p.decay_points.push_back(d);
  }
  const double k = p.fit_points;
  const double den = k * sxx - sx * sx;
  if (p.fit_points >= 2 && den > 0.0) {
    p.fitted_rate = (k * sxy - sx * sy) / den;
    const double intercept = (sy - p.fitted_rate * sx) / k;
    double ss = 0.0;
    for (const auto& d : p.decay_points) {
      if (d.distance <= radius || d.floored) continue;
      const double r = d.log_abs - (intercept + p.fitted_rate * d.distance);
      ss += r * r;
    }
    p.fit_residual = std::sqrt(ss / k);
  }
  return p;
}

LocalizationProfile localization_profile(const EigenPair& pair, double C, int n) {
  return localization_profile(pair.psi, C, n, pair.band, pair.kappa);
}

nlohmann::json LocalizationProfile::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& d : decay_points)
    pts.push_back({{"site", d.site}, {"distance", d.distance}, {"log_abs", d.log_abs}, {"floored", d.floored}});
  return {{"band", band},
          {"kappa_units", kappa.units()},
          {"center", center},
          {"fitted_rate", fitted_rate},
          {"fit_residual", fit_residual},
          {"fit_points", fit_points},
          {"has_floored", has_floored},
          {"decay_points", pts}};
}

DecayCheck check_decay_bound(const LocalizationProfile& p, double gamma_at_E, double epsilon, double C, int n) {
  DecayCheck c;
  c.worst_excess = -INFINITY;
  const double rate = gamma_at_E - 2.0 * epsilon;
  for (const auto& d : p.decay_points) {
    if (d.distance <= C * n) continue;
    const double excess = d.log_abs + rate * d.distance;
    if (excess > c.worst_excess) {
      c.worst_excess = excess;
      c.worst_site = d.site;
    }
  }
  c.holds = !(c.worst_excess > 0.0);
  return c;
}

double default_radius_constant(double gamma_max, double epsilon) {
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  return std::max(2.0, 2.0 * gamma_max / epsilon);
}

std::vector<FloquetPhase> kappa_grid(int points) {
  if (points < 2) throw ValidationError("kappa grid needs at least 2 points");
  std::vector<FloquetPhase> out;
  for (int i = 0; i < points; ++i) out.push_back(FloquetPhase::from_units(static_cast<double>(i) / (points - 1)));
  return out;
}

nlohmann::json DriftReport::to_json() const {
  return {{"band", band}, {"centers", centers}, {"drift", drift}, {"flat", flat}};
}

DriftReport center_drift(const Spectrum& s, int band, const std::vector<FloquetPhase>& kappas) {
  if (kappas.empty()) throw ValidationError("center_drift: empty kappa grid");
  const int q = s.q();
  DriftReport r;
  r.band = band;
  for (const auto& k : kappas) {
    const BigReal E = band_eigenvalue(s, band, k);
    const EigenPair pair = eigenvector(s.potential, k, E, band);
    r.centers.push_back(pair.center());
    BigReal lo = pair.psi[0].norm(), hi = lo;
    for (const auto& z : pair.psi) {
      BigReal m = z.norm();
      if (m < lo) lo = m;
      if (m > hi) hi = std::move(m);
    }
    // Ratio of moduli below 2 means ratio of squared moduli below 4.
    if (hi < lo * 4.0) r.flat = true;
  }
  if (r.flat) {
    r.drift = q / 2;
    return r;
  }
  for (int c : r.centers) r.drift = std::max(r.drift, circle_distance(c, r.centers.front(), q));
  return r;
}

std::vector<DriftReport> center_drifts(const Spectrum& s, const std::vector<FloquetPhase>& kappas, Exec exec) {
  return parallel_map<DriftReport>(exec, static_cast<std::size_t>(s.q()), [&](std::size_t i) {
    return center_drift(s, static_cast<int>(i) + 1, kappas);
  });
}

std::vector<BigComplex> wronskian(std::span<const BigComplex> psi, std::span<const BigComplex> psi_prime) {
  if (psi.size() != psi_prime.size()) throw ValidationError("wronskian: vectors differ in length");
  const std::size_t q = psi.size();
  std::vector<BigComplex> w;
  w.reserve(q);
  for (std::size_t x = 0; x < q; ++x) {
    const std::size_t y = (x + 1) % q;
    w.push_back(psi_prime[x] * psi[y] - psi[x] * psi_prime[y]);
  }
  return w;
}

std::vector<std::complex<double>> wronskian(std::span<const std::complex<double>> psi,
                                            std::span<const std::complex<double>> psi_prime) {
  if (psi.size() != psi_prime.size()) throw ValidationError("wronskian: vectors differ in length");
  const std::size_t q = psi.size();
  std::vector<std::complex<double>> w(q);
  for (std::size_t x = 0; x < q; ++x) {
    const std::size_t y = (x + 1) % q;
    w[x] = psi_prime[x] * psi[y] - psi[x] * psi_prime[y];
  }
  return w;
}

SeparationReport separation_report(const Spectrum& s, double epsilon, Exec exec) {
  const int q = s.q();
  const int bits = s.bits;
  const auto E = eigenvalues(s, FloquetPhase::periodic(), exec);
  SeparationReport r{BigReal(bits), BigReal(bits), epsilon, BigReal(bits), false, 0, 0};
  r.threshold = exp(BigReal(-epsilon * q, bits));
  if (q == 1) {
    r.min_gap = INFINITY;
    r.min_distinct_gap = INFINITY;
    r.qsep = true;
    return r;
  }
  bool have_distinct = false;
  for (int i = 0; i + 1 < q; ++i) {
    BigReal g = E[static_cast<std::size_t>(i + 1)] - E[static_cast<std::size_t>(i)];
    if (i == 0 || g < r.min_gap) {
      r.min_gap = g;
      r.argmin_lo = i + 1;
      r.argmin_hi = i + 2;
    }
    if (g.sign() > 0 && (!have_distinct || g < r.min_distinct_gap)) {
      r.min_distinct_gap = g;
      have_distinct = true;
    }
  }
  if (!have_distinct) r.min_distinct_gap = 0.0;
  r.qsep = r.min_gap >= r.threshold;
  return r;
}

SeparationReport separation_report(const PotentialSeq& V, double epsilon, int bits, Exec exec) {
  return separation_report(compute_spectrum(V, {bits, exec}), epsilon, exec);
}

nlohmann::json SeparationReport::to_json() const {
  return {{"min_gap", min_gap.to_double()},
          {"min_gap_decimal", min_gap.to_string(min_gap.decimal_digits())},
          {"min_distinct_gap", min_distinct_gap.to_double()},
          {"epsilon", epsilon},
          {"threshold", threshold.to_double()},
          {"qsep", qsep},
          {"gap_argmin", {argmin_lo, argmin_hi}}};
}

void write_decay_csv(std::ostream& os, const LocalizationProfile& p) {
  os << "site,distance,log_abs,floored\n";
  char buf[64];
  for (const auto& d : p.decay_points) {
    std::snprintf(buf, sizeof buf, "%.17g", d.log_abs);
    os << d.site << "," << d.distance << "," << buf << "," << (d.floored ? 1 : 0) << "\n";
  }
}

}  // namespace thouless
