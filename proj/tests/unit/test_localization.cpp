#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "thouless/errors.hpp"
#include "thouless/localization.hpp"
#include "thouless/resonance.hpp"

using namespace thouless;

namespace {

std::vector<BigComplex> synthetic(int q, int center, double rate, int bits = 256) {
  std::vector<BigComplex> psi;
  for (int x = 0; x < q; ++x) {
    const int d = circle_distance(x, center, q);
    psi.emplace_back(BigReal(std::exp(-rate * d), bits) * (x % 2 ? -1.0 : 1.0), BigReal(0.0, bits));
  }
  return psi;
}

}  // namespace

TEST_CASE("profiles of an exact exponential") {
  const auto psi = synthetic(41, 13, 0.5);
  const LocalizationProfile p = localization_profile(psi, 2.0, 3, 4, FloquetPhase::from_units(0.5));
  CHECK(p.center == 13);
  CHECK(p.band == 4);
  CHECK(p.decay_points.size() == 41);
  CHECK(p.fitted_rate == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(p.fit_residual < 1e-10);
  CHECK(p.fit_points == 2 * (20 - 6));
  CHECK_FALSE(p.has_floored);
  for (const auto& d : p.decay_points) CHECK(d.log_abs == doctest::Approx(-0.5 * d.distance).scale(1));

  const DecayCheck ok = check_decay_bound(p, 0.55, 0.05, 2.0, 3);
  CHECK(ok.holds);
  CHECK(ok.worst_excess == doctest::Approx(-0.05 * 7).epsilon(1e-9));
  const DecayCheck bad = check_decay_bound(p, 0.7, 0.05, 2.0, 3);
  CHECK_FALSE(bad.holds);
  CHECK(bad.worst_excess == doctest::Approx(0.1 * 20).epsilon(1e-9));
  const DecayCheck none = check_decay_bound(p, 0.7, 0.05, 20.0, 3);
  CHECK(none.holds);
  CHECK(std::isinf(none.worst_excess));
}

TEST_CASE("ties, zeros and invalid vectors") {
  std::vector<BigComplex> psi;
  for (double v : {0.5, 1.0, 0.0, -1.0, 0.25}) psi.emplace_back(v, 0.0, 128);
  const LocalizationProfile p = localization_profile(psi, 1.0, 1);
  CHECK(p.center == 1);
  CHECK(p.has_floored);
  CHECK(p.decay_points[2].floored);
  CHECK(p.decay_points[2].log_abs == doctest::Approx(-128 * std::numbers::ln2));
  std::vector<BigComplex> zero(4, BigComplex(128));
  CHECK_THROWS_AS(localization_profile(zero, 1.0, 1), ValidationError);
  std::ostringstream os;
  write_decay_csv(os, p);
  CHECK(os.str().find("distance,log_abs,floored") != std::string::npos);
  CHECK(p.to_json().at("center") == 1);
}

TEST_CASE("radius constant and kappa grid") {
  CHECK(default_radius_constant(0.01, 0.05) == 2.0);
  CHECK(default_radius_constant(1.0, 0.05) == doctest::Approx(40.0));
  const auto g = kappa_grid(17);
  REQUIRE(g.size() == 17);
  CHECK(g.front() == FloquetPhase::periodic());
  CHECK(g.back() == FloquetPhase::antiperiodic());
  CHECK(g[8].units() == doctest::Approx(0.5));
  CHECK_THROWS_AS(kappa_grid(1), ValidationError);
}

TEST_CASE("Wronskian telescopes between eigenpairs") {
  const PotentialSeq V = sample_iid(DistributionSpec::default_iid(), 24, 6);
  const Spectrum s = compute_spectrum(V);
  const auto ev = eigenvalues(s, FloquetPhase::periodic());
  for (int j : {1, 5, 12}) {
    const EigenPair a = eigenvector(V, FloquetPhase::periodic(), ev[j - 1], j);
    const EigenPair b = eigenvector(V, FloquetPhase::periodic(), ev[j], j + 1);
    const auto w = wronskian(a.psi, b.psi);
    const BigReal gap = a.E - b.E;
    for (int x = 0; x < 24; ++x) {
      const BigComplex lhs = w[x] - w[(x + 23) % 24];
      const BigComplex rhs = a.psi[x] * b.psi[x] * gap;
      CHECK((lhs - rhs).abs().to_double() < 1e-30);
    }
    const auto wd = wronskian(std::span<const std::complex<double>>(a.psi_double()),
                              std::span<const std::complex<double>>(b.psi_double()));
    for (int x = 0; x < 24; ++x) CHECK(std::abs(wd[x] - std::complex<double>(w[x].re.to_double(), w[x].im.to_double())) < 1e-14);
  }
}

TEST_CASE("free Laplacian eigenvectors are flat") {
  const Spectrum s = compute_spectrum(constant_seq(0.0, 12));
  const DriftReport r = center_drift(s, 3, kappa_grid(5));
  CHECK(r.flat);
  CHECK(r.drift == 6);
  CHECK(r.centers.size() == 5);
  CHECK(r.to_json().at("flat") == true);
}

TEST_CASE("localized centers stay put across kappa") {
  const Spectrum s = compute_spectrum(sample_iid(DistributionSpec::default_iid(), 60, 2));
  const auto serial = center_drifts(s, kappa_grid(5), Exec::serial);
  const auto parallel = center_drifts(s, kappa_grid(5), Exec::parallel);
  REQUIRE(serial.size() == 60);
  int small = 0;
  for (std::size_t j = 0; j < serial.size(); ++j) {
    CHECK(serial[j].centers == parallel[j].centers);
    CHECK(serial[j].band == static_cast<int>(j) + 1);
    small += serial[j].drift <= 2;
  }
  CHECK(small >= 50);
}

TEST_CASE("separation of the periodic eigenvalues") {
  // Free q = 5: 2, then 2 cos(2 pi / 5) and 2 cos(4 pi / 5) twice each.
  const SeparationReport f = separation_report(constant_seq(0.0, 5), 0.05);
  CHECK(f.min_gap.to_double() < 1e-30);
  CHECK(f.min_distinct_gap.to_double() == doctest::Approx(2.0 - 2.0 * std::cos(2 * std::numbers::pi / 5)));
  CHECK_FALSE(f.qsep);
  CHECK(f.threshold.to_double() == doctest::Approx(std::exp(-0.25)));

  const PotentialSeq V = sample_iid(DistributionSpec::default_iid(), 30, 4);
  const Spectrum s = compute_spectrum(V);
  const auto ev = eigenvalues(s, FloquetPhase::periodic());
  BigReal best = ev[1] - ev[0];
  for (std::size_t i = 1; i + 1 < ev.size(); ++i)
    if (ev[i + 1] - ev[i] < best) best = ev[i + 1] - ev[i];
  const SeparationReport r = separation_report(s, 0.05);
  CHECK(r.min_gap == best);
  CHECK(r.argmin_hi == r.argmin_lo + 1);
  CHECK(r.qsep == (r.min_gap >= r.threshold));
  const SeparationReport again = separation_report(V, 0.05, s.bits, Exec::serial);
  CHECK(again.min_gap == r.min_gap);
  CHECK(r.to_json().contains("min_gap"));
}
