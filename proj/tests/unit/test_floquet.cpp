#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "thouless/errors.hpp"
#include "thouless/floquet.hpp"
#include "thouless/transfer.hpp"

using namespace thouless;

namespace {

std::vector<double> values(const PotentialSeq& v) { return {v.values().begin(), v.values().end()}; }

PotentialSeq amo(int q_index) {
  const auto c = cf_convergents(QuadraticIrrational::parse("sqrt2"), q_index);
  return quasiperiodic_seq(std::exp(0.25), std::sqrt(3.0), c.back());
}

void check_band_structure(const Spectrum& s) {
  const int q = s.q();
  REQUIRE(static_cast<int>(s.bands.size()) == q);
  REQUIRE(static_cast<int>(s.separators.size()) == q - 1);
  const BigReal two(2.0, s.bits);
  for (int j = 0; j < q; ++j) {
    const Band& b = s.bands[static_cast<std::size_t>(j)];
    CHECK(b.index == j + 1);
    CHECK(b.left <= b.right);
    // Delta = +2 at the right edge of the top band, alternating downward.
    const double sign = ((q - (j + 1)) % 2 == 0) ? 1.0 : -1.0;
    const BigReal dl = discriminant(s.potential, b.left), dr = discriminant(s.potential, b.right);
    CHECK(std::fabs(dr.to_double() - 2.0 * sign) < 1e-20);
    CHECK(std::fabs(dl.to_double() + 2.0 * sign) < 1e-20);
    const BigReal mid = discriminant(s.potential, b.center());
    CHECK(abs(mid) <= two);
    if (j + 1 < q) {
      const Band& next = s.bands[static_cast<std::size_t>(j + 1)];
      CHECK(b.right <= s.separators[static_cast<std::size_t>(j)]);
      CHECK(s.separators[static_cast<std::size_t>(j)] <= next.left);
      CHECK(b.closed_right == next.closed_left);
    }
  }
}

}  // namespace

TEST_CASE("Floquet phases reduce to [0, 2) units of pi/q") {
  CHECK(FloquetPhase::from_units(2.5).units() == doctest::Approx(0.5));
  CHECK(FloquetPhase::from_units(-0.5).units() == doctest::Approx(1.5));
  CHECK(FloquetPhase::from_kappa(std::numbers::pi / 10.0, 10).units() == doctest::Approx(1.0));
  CHECK(FloquetPhase::periodic().target(128) == 2.0);
  CHECK(FloquetPhase::antiperiodic().target(128) == -2.0);
  CHECK(FloquetPhase::from_units(0.5).target(128).to_double() == doctest::Approx(0.0).scale(1));
  CHECK(FloquetPhase::from_units(0.25).kappa(4) == doctest::Approx(std::numbers::pi / 16));
}

TEST_CASE("characteristic polynomial matches dense determinants in both gauges") {
  Rng rng(17);
  for (int t = 0; t < 60; ++t) {
    const int q = 1 + t % 8;
    const PotentialSeq V = sample_iid(DistributionSpec::default_iid(), q, 100 + t);
    const double E = rng.uniform(-4.0, 4.0);
    const FloquetPhase k = FloquetPhase::from_units(rng.uniform(0.0, 2.0));
    const BigReal got = char_poly_value(V, BigReal(E, 256), k);
    for (const auto& a : {oracle::floquet_matrix(values(V), k.kappa(q)), oracle::corner_matrix(values(V), k.kappa(q))}) {
      auto m = a;
      for (int i = 0; i < q; ++i) m[i][i] -= E;
      const auto det = oracle::determinant(m);
      CHECK(std::fabs(double(det.imag())) < 1e-12 * std::max(1.0, std::fabs(double(det.real()))));
      CHECK(got.to_double() == doctest::Approx(double(det.real())).epsilon(1e-12).scale(1));
    }
  }
}

TEST_CASE("band catalog invariants") {
  for (int q : {1, 2, 3, 5, 17, 64}) {
    check_band_structure(compute_spectrum(sample_iid(DistributionSpec::default_iid(), q, 3)));
    check_band_structure(compute_spectrum(constant_seq(0.0, q)));
  }
  check_band_structure(compute_spectrum(amo(5)));
  check_band_structure(compute_spectrum(sample_iid(DistributionSpec::bernoulli(-1.0, 1.0, 0.5), 40, 2)));
}

TEST_CASE("widths obey the 2 pi / q bound") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
    for (int q : {4, 9, 25}) {
      const Spectrum s = compute_spectrum(sample_iid(DistributionSpec::default_iid(), q, seed));
      for (const Band& b : s.bands) CHECK(b.width().to_double() <= 2 * std::numbers::pi / q + 1e-12);
    }
}

TEST_CASE("free Laplacian edges are 2 cos(k pi / q)") {
  for (int q : {2, 3, 8, 21}) {
    const Spectrum s = compute_spectrum(constant_seq(0.0, q));
    for (int j = 0; j < q; ++j) {
      const Band& b = s.bands[static_cast<std::size_t>(j)];
      CHECK(b.left.to_double() == doctest::Approx(2 * std::cos((q - j) * std::numbers::pi / q)).epsilon(1e-12).scale(1));
      CHECK(b.right.to_double() == doctest::Approx(2 * std::cos((q - j - 1) * std::numbers::pi / q)).epsilon(1e-12).scale(1));
      if (j + 1 < q) CHECK(b.closed_right);
    }
  }
}

TEST_CASE("eigenvalues and eigenvectors match the Jacobi oracle") {
  Rng rng(5);
  for (int t = 0; t < 24; ++t) {
    const int q = 2 + t % 7;
    const PotentialSeq V = sample_iid(DistributionSpec::default_iid(), q, 900 + t);
    const Spectrum s = compute_spectrum(V);
    const FloquetPhase k = FloquetPhase::from_units(rng.uniform(0.0, 2.0));
    const auto ev = eigenvalues(s, k);
    const auto ref = oracle::hermitian_eigen(oracle::floquet_matrix(values(V), k.kappa(q)));
    REQUIRE(ev.size() == ref.values.size());
    for (int j = 0; j < q; ++j) {
      CHECK(ev[j].to_double() == doctest::Approx(double(ref.values[j])).epsilon(1e-12).scale(1));
      CHECK(s.bands[j].left <= ev[j]);
      CHECK(ev[j] <= s.bands[j].right);
      const EigenPair p = eigenvector(V, k, ev[j], j + 1);
      CHECK(p.residual < 1e-30);
      CHECK(residual_norm(V, k, p.E, p.psi).to_double() < 1e-30);
      const auto want = oracle::fix_phase(ref.vectors[j]);
      const auto got = p.psi_double();
      double norm = 0.0;
      for (int x = 0; x < q; ++x) {
        norm += std::norm(got[x]);
        CHECK(std::abs(std::complex<long double>(got[x]) - want[x]) < 1e-9L);
      }
      CHECK(norm == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(p.psi[p.center()].im.is_zero());
      CHECK(p.psi[p.center()].re.sign() > 0);
    }
  }
}

TEST_CASE("Dirichlet eigenvalues match the dense spectrum") {
  const PotentialSeq V = sample_iid(DistributionSpec::default_iid(), 9, 4);
  auto block = oracle::dirichlet_block(values(V), 2, 7, 0.0L);
  oracle::CMatrix h(block.size(), std::vector<oracle::cld>(block.size()));
  for (std::size_t i = 0; i < block.size(); ++i)
    for (std::size_t j = 0; j < block.size(); ++j) h[i][j] = block[i][j];
  const auto ref = oracle::hermitian_eigen(h);
  const auto got = dirichlet_eigenvalues(V, 2, 7, Exec::serial);
  REQUIRE(got.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(got[i] == doctest::Approx(double(ref.values[i])).epsilon(1e-13));
}

TEST_CASE("periodic and antiperiodic eigenvalues sit on the band edges") {
  const Spectrum s = compute_spectrum(sample_iid(DistributionSpec::default_iid(), 30, 8));
  const auto sens = thouless_sensitivity(s);
  for (int j = 0; j < s.q(); ++j) {
    const BigReal diff = abs(sens[j] - s.bands[j].width());
    CHECK(diff <= ldexp(s.bands[j].width(), -40));
  }
  CHECK_THROWS_AS(band_eigenvalue(s, 0, FloquetPhase::periodic()), ValidationError);
  CHECK_THROWS_AS(band_eigenvalue(s, 31, FloquetPhase::periodic()), ValidationError);
}

TEST_CASE("serial and parallel catalogs are identical") {
  const PotentialSeq V = sample_iid(DistributionSpec::default_iid(), 80, 12);
  const Spectrum a = compute_spectrum(V, {0, Exec::serial});
  const Spectrum b = compute_spectrum(V, {0, Exec::parallel});
  CHECK(a.bits == b.bits);
  for (int j = 0; j < 80; ++j) {
    CHECK(a.bands[j].left == b.bands[j].left);
    CHECK(a.bands[j].right == b.bands[j].right);
  }
  const auto ea = eigenvalues(a, FloquetPhase::from_units(0.3), Exec::serial);
  const auto eb = eigenvalues(a, FloquetPhase::from_units(0.3), Exec::parallel);
  for (int j = 0; j < 80; ++j) CHECK(ea[j] == eb[j]);
}

TEST_CASE("localized bands narrow exponentially and need more bits") {
  const Spectrum s = compute_spectrum(sample_iid(DistributionSpec::default_iid(), 150, 1));
  double smallest = 1.0;
  for (const Band& b : s.bands) smallest = std::min(smallest, b.width().to_double());
  CHECK(smallest < 1e-20);
  // |Delta'| ~ 4 / width on a band, so this bounds each edge error by a tiny fraction of its width.
  CHECK(s.log2_err < -20.0);
  CHECK(s.bits > 128);
  for (const Band& b : s.bands) {
    CHECK(b.log_width_rate(150) > 0.0);
    CHECK(b.width().sign() > 0);
  }
}

TEST_CASE("bands CSV") {
  const Spectrum s = compute_spectrum(constant_seq(0.0, 4));
  std::ostringstream os;
  write_bands_csv(os, s);
  const std::string text = os.str();
  CHECK(text.find("j,left,right,center,width,log_width_rate") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') >= 5);
}

TEST_CASE("two-site potentials have closed-form edges") {
  // Delta = (E - v0)(E - v1) - 2, and the Dirichlet eigenvalue v1 is itself an edge.
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const PotentialSeq V = sample_iid(DistributionSpec::default_iid(), 2, seed);
    const double a = V[0], b = V[1];
    const double root = std::sqrt((a - b) * (a - b) + 16.0);
    const Spectrum s = compute_spectrum(V);
    CHECK(s.bands[0].left.to_double() == doctest::Approx((a + b - root) / 2).epsilon(1e-14));
    CHECK(s.bands[0].right.to_double() == doctest::Approx(std::min(a, b)).epsilon(1e-14));
    CHECK(s.bands[1].left.to_double() == doctest::Approx(std::max(a, b)).epsilon(1e-14));
    CHECK(s.bands[1].right.to_double() == doctest::Approx((a + b + root) / 2).epsilon(1e-14));
  }
}
