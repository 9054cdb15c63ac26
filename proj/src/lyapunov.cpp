#include "thouless/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "thouless/errors.hpp"
#include "thouless/hash.hpp"
#include "thouless/transfer.hpp"

namespace thouless {

namespace {

void check_grid(const std::vector<double>& e) {
  if (e.empty()) throw ValidationError("energy grid is empty");
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!std::isfinite(e[i])) throw ValidationError("energy grid contains a non-finite value");
    if (i > 0 && !(e[i] > e[i - 1])) throw ValidationError("energy grid must be strictly increasing");
  }
}

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double at) {
  if (x.empty()) throw ValidationError("empty Lyapunov curve");
  if (at <= x.front()) return y.front();
  if (at >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  const auto i = static_cast<std::size_t>(it - x.begin());
  const double t = (at - x[i - 1]) / (x[i] - x[i - 1]);
  return y[i - 1] + t * (y[i] - y[i - 1]);
}

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double LyapunovCurve::at(double E) const { return interpolate(energies, gamma, E); }

double LyapunovCurve::stderr_at(double E) const { return interpolate(energies, stderr_, E); }

double LyapunovCurve::max_gamma() const { return *std::max_element(gamma.begin(), gamma.end()); }

double LyapunovCurve::min_gamma() const { return *std::min_element(gamma.begin(), gamma.end()); }

std::string LyapunovCurve::cache_key() const {
  std::string s = method + "|" + parameters.dump() + "|";
  for (double e : energies) s += g17(e) + ",";
  return hex64(fnv1a64(s));
}

LyapunovCurve lyapunov_iid_mc(const DistributionSpec& dist, std::vector<double> energies, int n, int samples,
                              std::uint64_t seed, Exec exec) {
  check_grid(energies);
  if (n < 1) throw ValidationError("lyapunov_iid_mc needs n >= 1");
  if (samples < 2) throw ValidationError("lyapunov_iid_mc needs at least 2 samples");
  LyapunovCurve c;
  c.method = "iid_mc";
  c.parameters = {{"distribution", dist.to_json()}, {"n", n}, {"samples", samples}, {"seed", seed}};
  const std::size_t m = energies.size();
  c.gamma.resize(m);
  c.stderr_.resize(m);
  parallel_for(exec, m, [&](std::size_t e) {
    const double E = energies[e];
    double sum = 0.0, sum2 = 0.0;
    std::vector<double> v(static_cast<std::size_t>(std::min(n, 4096)));
    for (int k = 0; k < samples; ++k) {
      Rng rng(derive_seed(seed, {e, static_cast<std::uint64_t>(k)}));
      ScaledMatrix2 m2;
      for (int done = 0; done < n;) {
        const auto chunk = static_cast<std::size_t>(std::min<int>(n - done, static_cast<int>(v.size())));
        dist.fill(rng, std::span<double>(v.data(), chunk));
        for (std::size_t i = 0; i < chunk; ++i) m2.step(v[i], E);
        done += static_cast<int>(chunk);
      }
      m2.normalize();
      const double g = m2.log_norm() / n;
      sum += g;
      sum2 += g * g;
    }
    const double mean = sum / samples;
    const double var = std::max(0.0, (sum2 - samples * mean * mean) / (samples - 1));
    c.gamma[e] = mean;
    c.stderr_[e] = std::sqrt(var / samples);
  });
  c.energies = std::move(energies);
  return c;
}

LyapunovCurve lyapunov_birkhoff(double lambda, double theta, long double alpha, std::vector<double> energies, int n,
                                Exec exec) {
  check_grid(energies);
  if (n < 1) throw ValidationError("lyapunov_birkhoff needs n >= 1");
  if (!(lambda >= 0.0)) throw ValidationError("coupling lambda must be nonnegative");
  std::vector<double> v(static_cast<std::size_t>(n));
  const long double a = alpha - std::floor(alpha);
  for (int k = 0; k < n; ++k) {
    long double x = static_cast<long double>(theta) + static_cast<long double>(k) * a;
    x -= std::floor(x);
    v[static_cast<std::size_t>(k)] = 2.0 * lambda * std::cos(2.0 * std::numbers::pi * static_cast<double>(x));
  }
  LyapunovCurve c;
  c.method = "birkhoff";
  c.parameters = {{"lambda", lambda}, {"theta", theta}, {"alpha", g17(static_cast<double>(alpha))}, {"n", n}};
  c.gamma = parallel_map<double>(exec, energies.size(), [&](std::size_t i) { return log_norm(v, energies[i]) / n; });
  c.stderr_.assign(energies.size(), 0.0);
  c.energies = std::move(energies);
  return c;
}

double amo_oracle(double lambda, double /*E*/) {
  if (!(lambda >= 1.0)) throw ValidationError("amo_oracle covers only the supercritical regime lambda >= 1");
  return std::log(lambda);
}

LyapunovCurve amo_oracle_curve(double lambda, std::vector<double> energies) {
  check_grid(energies);
  LyapunovCurve c;
  c.method = "amo_oracle";
  c.parameters = {{"lambda", lambda}};
  for (double E : energies) c.gamma.push_back(amo_oracle(lambda, E));
  c.stderr_.assign(energies.size(), 0.0);
  c.energies = std::move(energies);
  return c;
}

LyapunovCurve constant_curve(double value, double lo, double hi) {
  LyapunovCurve c;
  c.method = "constant";
  c.parameters = {{"value", value}};
  c.energies = {lo, hi};
  check_grid(c.energies);
  c.gamma = {value, value};
  c.stderr_ = {0.0, 0.0};
  return c;
}

void write_lyapunov_csv(std::ostream& os, const LyapunovCurve& c) {
  os << "# method=" << c.method << "\n";
  os << "# parameters=" << c.parameters.dump() << "\n";
  os << "# key=" << c.cache_key() << "\n";
  os << "energy,gamma,stderr\n";
  for (std::size_t i = 0; i < c.size(); ++i)
    os << g17(c.energies[i]) << "," << g17(c.gamma[i]) << "," << g17(c.stderr_[i]) << "\n";
}

LyapunovCurve read_lyapunov_csv(std::istream& is) {
  LyapunovCurve c;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# method=", 0) == 0) c.method = line.substr(9);
      if (line.rfind("# parameters=", 0) == 0) {
        try {
          c.parameters = nlohmann::json::parse(line.substr(13));
        } catch (const nlohmann::json::exception& e) {
          throw ValidationError(std::string("bad parameters line in Lyapunov CSV: ") + e.what());
        }
      }
      continue;
    }
    if (!header) {
      if (line != "energy,gamma,stderr") throw ValidationError("Lyapunov CSV lacks the energy,gamma,stderr header");
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::string a, b, d;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, d))
      throw ValidationError("malformed Lyapunov CSV row: " + line);
    try {
      c.energies.push_back(std::stod(a));
      c.gamma.push_back(std::stod(b));
      c.stderr_.push_back(std::stod(d));
    } catch (const std::exception&) {
      throw ValidationError("malformed Lyapunov CSV row: " + line);
    }
  }
  check_grid(c.energies);
  return c;
}

LyapunovCurve cached_curve(const std::filesystem::path& dir, const std::string& key,
                           const std::function<LyapunovCurve()>& compute) {
  if (dir.empty()) return compute();
  const auto file = dir / ("lyapunov-" + key + ".csv");
  if (std::filesystem::exists(file)) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read " + file.string());
    return read_lyapunov_csv(in);
  }
  LyapunovCurve c = compute();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp.string());
    write_lyapunov_csv(out, c);
  }
  std::filesystem::rename(tmp, file, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
  return c;
}

}  // namespace thouless
