#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "thouless/errors.hpp"
#include "thouless/lyapunov.hpp"

using namespace thouless;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("thouless-test-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("constant potential has the hyperbolic closed form") {
  const auto c = lyapunov_iid_mc(DistributionSpec::constant(0.5), {-4.0, -2.5, 0.5, 2.0, 6.0}, 20000, 4, 1);
  CHECK(c.gamma[0] == doctest::Approx(std::acosh(4.5 / 2)).epsilon(1e-3));
  CHECK(c.gamma[1] == doctest::Approx(std::acosh(3.0 / 2)).epsilon(1e-3));
  CHECK(c.gamma[2] < 1e-3);
  CHECK(c.gamma[3] < 1e-3);
  CHECK(c.gamma[4] == doctest::Approx(std::acosh(5.5 / 2)).epsilon(1e-3));
  for (double s : c.stderr_) CHECK(s == 0.0);
  CHECK(c.method == "iid_mc");
}

TEST_CASE("i.i.d. exponent is positive and symmetric for a symmetric law") {
  std::vector<double> grid;
  for (int i = -12; i <= 12; ++i) grid.push_back(0.25 * i);
  const auto c = lyapunov_iid_mc(DistributionSpec::default_iid(), grid, 4000, 40, 3);
  CHECK(c.min_gamma() > 0.1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::size_t j = grid.size() - 1 - i;
    const double tol = 5.0 * std::hypot(c.stderr_[i], c.stderr_[j]) + 1e-3;
    CHECK(std::fabs(c.gamma[i] - c.gamma[j]) < tol);
    CHECK(c.stderr_[i] > 0.0);
  }
}

TEST_CASE("Monte Carlo curve is reproducible and independent of the execution path") {
  const std::vector<double> grid = {-2.0, -0.5, 0.0, 1.25};
  const auto a = lyapunov_iid_mc(DistributionSpec::default_iid(), grid, 500, 10, 99, Exec::serial);
  const auto b = lyapunov_iid_mc(DistributionSpec::default_iid(), grid, 500, 10, 99, Exec::parallel);
  const auto c = lyapunov_iid_mc(DistributionSpec::default_iid(), grid, 500, 10, 100, Exec::serial);
  CHECK(a.gamma == b.gamma);
  CHECK(a.stderr_ == b.stderr_);
  CHECK(a.gamma != c.gamma);
  CHECK(a.cache_key() == b.cache_key());
  CHECK(a.cache_key() != c.cache_key());
  CHECK_THROWS_AS(lyapunov_iid_mc(DistributionSpec::default_iid(), {1.0, 0.0}, 10, 2, 1), ValidationError);
  CHECK_THROWS_AS(lyapunov_iid_mc(DistributionSpec::default_iid(), {0.0}, 0, 2, 1), ValidationError);
}

TEST_CASE("Birkhoff averages respect the log lambda lower bound") {
  const double lambda = std::exp(0.25);
  std::vector<double> grid;
  for (int i = -20; i <= 20; ++i) grid.push_back(0.2 * i);
  const auto c = lyapunov_birkhoff(lambda, std::sqrt(3.0), std::sqrt(2.0L), grid, 20000);
  for (double g : c.gamma) CHECK(g > 0.25 - 0.01);
  const auto p = lyapunov_birkhoff(lambda, std::sqrt(3.0), std::sqrt(2.0L), grid, 20000, Exec::serial);
  CHECK(p.gamma == c.gamma);
  CHECK(c.method == "birkhoff");
}

TEST_CASE("almost Mathieu oracle") {
  CHECK(amo_oracle(std::exp(0.25), 0.3) == doctest::Approx(0.25));
  CHECK(amo_oracle(1.0, 0.0) == 0.0);
  CHECK_THROWS_AS(amo_oracle(0.9, 0.0), ValidationError);
  const auto c = amo_oracle_curve(2.0, {-1.0, 1.0});
  CHECK(c.gamma[0] == doctest::Approx(std::log(2.0)));
  CHECK(c.method == "amo_oracle");
}

TEST_CASE("curve interpolation clamps outside the grid") {
  LyapunovCurve c;
  c.energies = {0.0, 1.0, 3.0};
  c.gamma = {1.0, 2.0, 0.0};
  c.stderr_ = {0.1, 0.2, 0.3};
  CHECK(c.at(-5.0) == 1.0);
  CHECK(c.at(0.5) == doctest::Approx(1.5));
  CHECK(c.at(2.0) == doctest::Approx(1.0));
  CHECK(c.at(9.0) == 0.0);
  CHECK(c.stderr_at(2.0) == doctest::Approx(0.25));
  CHECK(c.max_gamma() == 2.0);
  CHECK(c.min_gamma() == 0.0);
  const auto k = constant_curve(0.7, -1.0, 1.0);
  CHECK(k.at(-100.0) == 0.7);
  CHECK(k.at(0.3) == 0.7);
}

TEST_CASE("CSV round trip is exact") {
  const auto c = lyapunov_iid_mc(DistributionSpec::default_iid(), {-1.0 / 3.0, 0.1, 2.0}, 300, 5, 4);
  std::stringstream ss;
  write_lyapunov_csv(ss, c);
  CHECK(ss.str().find("# method=iid_mc") != std::string::npos);
  CHECK(ss.str().find("energy,gamma,stderr") != std::string::npos);
  const auto back = read_lyapunov_csv(ss);
  CHECK(back.energies == c.energies);
  CHECK(back.gamma == c.gamma);
  CHECK(back.stderr_ == c.stderr_);
  CHECK(back.method == c.method);
  CHECK(back.parameters == c.parameters);
  CHECK(back.cache_key() == c.cache_key());
  std::stringstream bad("energy,gamma,stderr\n1,x,0\n");
  CHECK_THROWS_AS(read_lyapunov_csv(bad), ValidationError);
}

TEST_CASE("cached curves are computed once") {
  const auto dir = fresh_dir("cache");
  int calls = 0;
  const auto compute = [&] {
    ++calls;
    return lyapunov_iid_mc(DistributionSpec::default_iid(), {0.0, 1.0}, 200, 4, 8);
  };
  const auto a = cached_curve(dir, "k1", compute);
  const auto b = cached_curve(dir, "k1", compute);
  CHECK(calls == 1);
  CHECK(a.gamma == b.gamma);
  CHECK(std::filesystem::exists(dir / "lyapunov-k1.csv"));
  cached_curve(dir, "k2", compute);
  CHECK(calls == 2);
  cached_curve({}, "k1", compute);
  CHECK(calls == 3);
  std::filesystem::remove_all(dir);
}
