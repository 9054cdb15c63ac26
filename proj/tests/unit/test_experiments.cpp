#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "thouless/errors.hpp"
#include "thouless/experiments.hpp"

using namespace thouless;

namespace {

AmoModel amo169() { return {std::exp(0.25), std::sqrt(3.0), Rational{239, 169}, std::sqrt(2.0L)}; }

std::size_t count(const std::string& text, const std::string& what) {
  std::size_t n = 0;
  for (auto pos = text.find(what); pos != std::string::npos; pos = text.find(what, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("models build their potentials") {
  CHECK(make_potential(amo169(), 169).period() == 169);
  CHECK_THROWS_AS(make_potential(amo169(), 100), ValidationError);
  const PotentialSeq v = make_potential(IidModel{DistributionSpec::default_iid(), 4}, 30);
  CHECK(v == sample_iid(DistributionSpec::default_iid(), 30, 4));
  CHECK(make_potential(FreeModel{0.5}, 3)[2] == 0.5);
  CHECK(model_bound(amo169()) == doctest::Approx(2 * std::exp(0.25)));
  CHECK(model_bound(IidModel{}) == 1.5);
  CHECK(model_json(amo169()).at("alpha") == "239/169");
  CHECK(model_json(IidModel{}).at("type") == "iid");
}

TEST_CASE("gamma method and event names") {
  for (auto m : {GammaMethod::automatic, GammaMethod::iid_mc, GammaMethod::birkhoff, GammaMethod::oracle})
    CHECK(parse_gamma_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_gamma_method("exact"), ValidationError);
  CHECK(parse_event("qnr") == Event::qnr);
  CHECK(to_string(Event::qsep) == "qsep");
  CHECK_THROWS_AS(parse_event("other"), ValidationError);
}

TEST_CASE("reference curves pick the right estimator") {
  GammaOptions o;
  o.grid_points = 11;
  o.n = 200;
  o.samples = 4;
  o.birkhoff_n = 500;
  const auto oracle = reference_curve(amo169(), o);
  CHECK(oracle.method == "amo_oracle");
  CHECK(oracle.size() == 11);
  CHECK(oracle.energies.front() == energy_window(2 * std::exp(0.25)).lo);
  for (double g : oracle.gamma) CHECK(g == doctest::Approx(0.25));

  AmoModel sub = amo169();
  sub.lambda = 0.5;
  CHECK(reference_curve(sub, o).method == "birkhoff");
  CHECK(reference_curve(IidModel{}, o).method == "iid_mc");
  const auto free_curve = reference_curve(FreeModel{0.0}, o);
  CHECK(free_curve.at(0.0) < 0.05);
  o.method = GammaMethod::oracle;
  CHECK_THROWS_AS(reference_curve(IidModel{}, o), ValidationError);
  o.method = GammaMethod::birkhoff;
  CHECK_THROWS_AS(reference_curve(FreeModel{}, o), ValidationError);
  o.method = GammaMethod::iid_mc;
  CHECK_THROWS_AS(reference_curve(amo169(), o), ValidationError);
}

TEST_CASE("the potential seed does not enter the gamma cache key") {
  const auto dir = std::filesystem::temp_directory_path() / "thouless-test-refcache";
  std::filesystem::remove_all(dir);
  GammaOptions o;
  o.grid_points = 5;
  o.n = 100;
  o.samples = 3;
  o.cache_dir = dir;
  const auto a = reference_curve(IidModel{DistributionSpec::default_iid(), 1}, o);
  const auto b = reference_curve(IidModel{DistributionSpec::default_iid(), 2}, o);
  CHECK(a.gamma == b.gamma);
  o.seed = 9;
  reference_curve(IidModel{}, o);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) files += e.path().extension() == ".csv";
  CHECK(files == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("scatter data and deviations") {
  const auto curve = constant_curve(0.25, -5.0, 5.0);
  const ScatterDataset d = figure_scatter(amo169(), 169, 0, curve);
  CHECK(d.q == 169);
  REQUIRE(d.points.size() == 169);
  for (std::size_t j = 0; j < d.points.size(); ++j) {
    CHECK(d.points[j].band == static_cast<int>(j) + 1);
    CHECK(d.points[j].gamma == 0.25);
    if (j > 0) CHECK(d.points[j].center > d.points[j - 1].center);
  }
  const DeviationRow r = deviation_of(d);
  double sup = 0.0;
  for (const auto& p : d.points) sup = std::max(sup, std::fabs(p.rate - 0.25));
  CHECK(r.sup == sup);
  CHECK(r.mean <= r.sup);
  CHECK(std::fabs(d.points[r.sup_band - 1].rate - 0.25) == sup);
  CHECK_THROWS_AS(deviation_sweep(IidModel{}, {20, 10}, 0, curve), ValidationError);
  const auto rows = deviation_sweep(IidModel{}, {10, 20}, 0, curve);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].q == 20);
}

TEST_CASE("Wilson intervals") {
  const auto zero = wilson_interval(0, 100);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi == doctest::Approx(0.0370).epsilon(1e-3));
  const auto half = wilson_interval(50, 100);
  CHECK(half.lo == doctest::Approx(0.4038).epsilon(1e-3));
  CHECK(half.hi == doctest::Approx(0.5962).epsilon(1e-3));
  const auto all = wilson_interval(100, 100);
  CHECK(all.hi == 1.0);
  CHECK(all.lo == doctest::Approx(0.9630).epsilon(1e-3));
}

TEST_CASE("event probabilities are reproducible") {
  EventSpec spec;
  spec.q = 12;
  spec.trials = 30;
  spec.epsilon = 0.5;
  const auto a = estimate_event_prob(spec, {}, {}, Exec::serial);
  const auto b = estimate_event_prob(spec, {}, {}, Exec::parallel);
  CHECK(a.successes == b.successes);
  CHECK(a.p_hat == doctest::Approx(a.successes / 30.0));
  CHECK(a.interval.lo <= a.p_hat);
  CHECK(a.p_hat <= a.interval.hi);
  CHECK(a.to_json().at("event") == "qsep");

  spec.event = Event::qnr;
  spec.n = 2;
  const auto curve = constant_curve(0.6, -14.0, 14.0);
  const auto grid = energy_window(1.5).grid(41);
  const auto c = estimate_event_prob(spec, curve, grid, Exec::serial);
  const auto d = estimate_event_prob(spec, curve, grid, Exec::parallel);
  CHECK(c.successes == d.successes);
  CHECK(c.to_json().at("n") == 2);
  spec.trials = 29;
  CHECK_THROWS_AS(estimate_event_prob(spec, curve, grid), ValidationError);
}

TEST_CASE("CSV and SVG writers") {
  const auto curve = constant_curve(0.5, -3.0, 3.0);
  const ScatterDataset d = figure_scatter(IidModel{}, 12, 0, curve);
  std::ostringstream csv, svg, dev;
  write_scatter_csv(csv, d, {"tool=test"});
  CHECK(csv.str().rfind("# tool=test\nj,center,rate,gamma,stderr\n", 0) == 0);
  CHECK(count(csv.str(), "\n") == 14);
  write_scatter_svg(svg, d, {"tool=test"});
  const std::string s = svg.str();
  CHECK(s.find("viewBox=\"0 0 800 500\"") != std::string::npos);
  CHECK(s.find("<!-- tool=test -->") != std::string::npos);
  CHECK(count(s, "<circle") == 12);
  CHECK(count(s, "<polyline") == 1);
  write_deviation_csv(dev, {deviation_of(d)});
  CHECK(dev.str().rfind("q,bits,sup,mean,sup_band,sup_stderr\n12,", 0) == 0);
}
