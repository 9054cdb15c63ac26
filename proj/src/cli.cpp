#include "thouless/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "thouless/errors.hpp"
#include "thouless/hash.hpp"
#include "thouless/localization.hpp"
#include "thouless/resonance.hpp"
#include "thouless/version.hpp"

namespace thouless::cli {

namespace {

enum class Type { integer, unsigned64, real, text, flag, json, int_list };

struct KeySpec {
  const char* name;
  Type type;
  const char* help;
};

constexpr KeySpec kKeys[] = {
    {"model", Type::text, "potential model: free | iid-uniform-union | iid | amo (default iid-uniform-union)"},
    {"q", Type::integer, "period, 1..100000; q >= 985 needs --long (default 100)"},
    {"precision-bits", Type::integer, "mantissa bits, 0 = automatic or 64..32768 (default 0)"},
    {"epsilon", Type::real, "epsilon, (0, 10] (default 0.05)"},
    {"n", Type::integer, "arc half-length, 1..10000 with 2n < q (default 8)"},
    {"kappa-points", Type::integer, "kappa grid points on [0, pi/q], 2..1025 (default 9)"},
    {"seed", Type::unsigned64, "root seed, 0..2^64-1 (default 1)"},
    {"trials", Type::integer, "Monte Carlo trials, 30..100000 (default 100)"},
    {"grid", Type::integer, "energy grid points on K, 2..1000000 (default 1001)"},
    {"out", Type::text, "output directory (default .)"},
    {"workers", Type::integer, "worker threads, 0 = all cores, 0..1024 (default 0)"},
    {"long", Type::flag, "allow q >= 985 (default off)"},
    {"lambda", Type::real, "AMO coupling, potential 2 lambda cos(2 pi (theta + k alpha)), 0..1e6 (default e^{1/4})"},
    {"theta", Type::real, "AMO phase, finite (default sqrt 3)"},
    {"alpha", Type::text, "AMO frequency or convergents input: sqrtN | golden | golden-1 | p/q | decimal (default sqrt2)"},
    {"distribution", Type::json, "i.i.d. law as JSON (default uniform on [-3/2,-1] u [1,3/2])"},
    {"count", Type::integer, "number of convergents, 1..60 (default 9)"},
    {"energy", Type::real, "single energy for resonance, finite (default: whole grid)"},
    {"band", Type::integer, "band index for localize, 0 = all, 0..q (default 0)"},
    {"event", Type::text, "event for prob: qnr | qsep (default qsep)"},
    {"gamma-method", Type::text, "gamma estimator: auto | mc | birkhoff | oracle (default auto)"},
    {"gamma-n", Type::integer, "transfer steps per gamma estimate, 1..10000000 (default 10000)"},
    {"gamma-samples", Type::integer, "Monte Carlo samples per energy, 2..100000 (default 200)"},
    {"gamma-seed", Type::unsigned64, "seed of the shared gamma curve, 0..2^64-1 (default 1)"},
    {"gamma-grid", Type::integer, "gamma curve points on K, 101..100001 (default 401)"},
    {"cache", Type::text, "directory caching gamma curves (default: no cache)"},
    {"sweep", Type::int_list, "increasing q list for the scatter deviation sweep, e.g. 100,200,400 (default none)"},
};

template <class T>
T get_as(const nlohmann::json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("config key '" + key + "' has the wrong type");
  }
}

int get_int(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ValidationError("config key '" + key + "' must be an integer");
  const auto x = v.get<std::int64_t>();
  if (x < INT32_MIN || x > INT32_MAX) throw ValidationError("config key '" + key + "' is out of range");
  return static_cast<int>(x);
}

std::uint64_t get_u64(const nlohmann::json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ValidationError("config key '" + key + "' must be a nonnegative integer");
}

double get_real(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw ValidationError("config key '" + key + "' must be a number");
  return v.get<double>();
}

/// Converts a flag string to the JSON value of its key type.
nlohmann::json flag_value(const KeySpec& k, const std::string& s) {
  const std::string name = std::string("--") + k.name;
  try {
    std::size_t used = 0;
    switch (k.type) {
      case Type::integer: {
        const long long v = std::stoll(s, &used);
        if (used != s.size()) break;
        return v;
      }
      case Type::unsigned64: {
        if (!s.empty() && s[0] == '-') break;
        const unsigned long long v = std::stoull(s, &used);
        if (used != s.size()) break;
        return static_cast<std::uint64_t>(v);
      }
      case Type::real: {
        const double v = std::stod(s, &used);
        if (used != s.size()) break;
        return v;
      }
      case Type::text: return s;
      case Type::flag: return true;
      case Type::json: return nlohmann::json::parse(s);
      case Type::int_list: {
        nlohmann::json arr = nlohmann::json::array();
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
          const long long v = std::stoll(item, &used);
          if (used != item.size()) throw ValidationError(name + ": bad list item '" + item + "'");
          arr.push_back(v);
        }
        return arr;
      }
    }
  } catch (const std::logic_error&) {
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(name + ": " + e.what());
  }
  throw ValidationError(name + ": cannot parse '" + s + "'");
}

bool is_quadratic_name(const std::string& s) { return s.rfind("sqrt", 0) == 0 || s.rfind("golden", 0) == 0; }

}  // namespace

void RunConfig::merge(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "model") model = get_as<std::string>(v, key);
    else if (key == "q") q = get_int(v, key);
    else if (key == "precision-bits") precision_bits = get_int(v, key);
    else if (key == "epsilon") epsilon = get_real(v, key);
    else if (key == "n") n = get_int(v, key);
    else if (key == "kappa-points") kappa_points = get_int(v, key);
    else if (key == "seed") seed = get_u64(v, key);
    else if (key == "trials") trials = get_int(v, key);
    else if (key == "grid") grid = get_int(v, key);
    else if (key == "out") out = get_as<std::string>(v, key);
    else if (key == "workers") workers = get_int(v, key);
    else if (key == "long") long_run = get_as<bool>(v, key);
    else if (key == "lambda") lambda = get_real(v, key);
    else if (key == "theta") theta = get_real(v, key);
    else if (key == "alpha") alpha = get_as<std::string>(v, key);
    else if (key == "distribution") distribution = v;
    else if (key == "count") count = get_int(v, key);
    else if (key == "energy") {
      energy = get_real(v, key);
      has_energy = true;
    } else if (key == "band") band = get_int(v, key);
    else if (key == "event") event = get_as<std::string>(v, key);
    else if (key == "gamma-method") gamma_method = get_as<std::string>(v, key);
    else if (key == "gamma-n") gamma_n = get_int(v, key);
    else if (key == "gamma-samples") gamma_samples = get_int(v, key);
    else if (key == "gamma-seed") gamma_seed = get_u64(v, key);
    else if (key == "gamma-grid") gamma_grid = get_int(v, key);
    else if (key == "cache") cache = get_as<std::string>(v, key);
    else if (key == "sweep") {
      if (!v.is_array()) throw ValidationError("config key 'sweep' must be an array of integers");
      sweep.clear();
      for (const auto& x : v) sweep.push_back(get_int(x, key));
    } else
      throw ValidationError("unknown config key '" + key + "'");
  }
}

void RunConfig::validate() const {
  const auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
  };
  need(model == "free" || model == "iid-uniform-union" || model == "iid" || model == "amo",
       "model must be one of free, iid-uniform-union, iid, amo");
  need(q >= 1 && q <= 100000, "q must lie in 1..100000");
  need(q < 985 || long_run, "q >= 985 is a long run; pass --long");
  need(precision_bits == 0 || (precision_bits >= 64 && precision_bits <= 32768),
       "precision-bits must be 0 or lie in 64..32768");
  need(epsilon > 0.0 && epsilon <= 10.0, "epsilon must lie in (0, 10]");
  need(n >= 1 && n <= 10000, "n must lie in 1..10000");
  need(kappa_points >= 2 && kappa_points <= 1025, "kappa-points must lie in 2..1025");
  need(trials >= 30 && trials <= 100000, "trials must lie in 30..100000");
  need(grid >= 2 && grid <= 1000000, "grid must lie in 2..1000000");
  need(workers >= 0 && workers <= 1024, "workers must lie in 0..1024");
  need(std::isfinite(lambda) && lambda >= 0.0 && lambda <= 1e6, "lambda must lie in 0..1e6");
  need(std::isfinite(theta), "theta must be finite");
  need(count >= 1 && count <= 60, "count must lie in 1..60");
  need(!has_energy || std::isfinite(energy), "energy must be finite");
  need(band >= 0 && band <= q, "band must lie in 0..q");
  need(event == "qnr" || event == "qsep", "event must be qnr or qsep");
  parse_gamma_method(gamma_method);
  need(gamma_n >= 1 && gamma_n <= 10000000, "gamma-n must lie in 1..10000000");
  need(gamma_samples >= 2 && gamma_samples <= 100000, "gamma-samples must lie in 2..100000");
  need(gamma_grid >= 101 && gamma_grid <= 100001, "gamma-grid must lie in 101..100001");
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    need(sweep[i] >= 1 && (sweep[i] < 985 || long_run), "sweep entries must lie in 1..984 unless --long");
    need(i == 0 || sweep[i] > sweep[i - 1], "sweep must be strictly increasing");
  }
  if (!distribution.is_null()) DistributionSpec::from_json(distribution);
}

nlohmann::json RunConfig::canonical() const {
  nlohmann::json j = {{"command", command},
                      {"model", model},
                      {"q", q},
                      {"precision-bits", precision_bits},
                      {"epsilon", epsilon},
                      {"n", n},
                      {"kappa-points", kappa_points},
                      {"seed", seed},
                      {"trials", trials},
                      {"grid", grid},
                      {"long", long_run},
                      {"lambda", lambda},
                      {"theta", theta},
                      {"alpha", alpha},
                      {"distribution", distribution},
                      {"count", count},
                      {"band", band},
                      {"event", event},
                      {"gamma-method", gamma_method},
                      {"gamma-n", gamma_n},
                      {"gamma-samples", gamma_samples},
                      {"gamma-seed", gamma_seed},
                      {"gamma-grid", gamma_grid},
                      {"sweep", sweep}};
  if (has_energy) j["energy"] = energy;
  return j;
}

std::string RunConfig::hash() const { return hex64(fnv1a64(canonical().dump())); }

ModelSpec RunConfig::model_spec() const {
  if (model == "free") return FreeModel{0.0};
  if (model == "iid-uniform-union") return IidModel{DistributionSpec::default_iid(), seed};
  if (model == "iid")
    return IidModel{distribution.is_null() ? DistributionSpec::default_iid() : DistributionSpec::from_json(distribution),
                    seed};
  AmoModel a{lambda, theta, {}, 0.0L};
  if (!is_quadratic_name(alpha)) {
    a.alpha = Rational::parse(alpha);
    if (a.alpha.q != q)
      throw ValidationError("alpha " + a.alpha.to_string() + " has denominator " + std::to_string(a.alpha.q) +
                            ", not q = " + std::to_string(q));
    return a;
  }
  const QuadraticIrrational qi = QuadraticIrrational::parse(alpha);
  a.alpha_limit = static_cast<long double>(qi.value());
  std::string seen;
  for (int k = 1; k <= 60; ++k) {
    std::vector<Rational> cs;
    try {
      cs = cf_convergents(qi, k);
    } catch (const ValidationError&) {
      break;
    }
    const Rational& last = cs.back();
    if (last.q == q) {
      a.alpha = last;
      return a;
    }
    if (last.q > q) break;
  }
  std::string list;
  try {
    for (const auto& r : cf_convergents(qi, 12)) list += (list.empty() ? "" : ", ") + std::to_string(r.q);
  } catch (const ValidationError&) {
  }
  throw ValidationError("q = " + std::to_string(q) + " is not a convergent denominator of " + alpha +
                        " (first denominators: " + list + ")");
}

GammaOptions RunConfig::gamma_options() const {
  GammaOptions g;
  g.method = parse_gamma_method(gamma_method);
  g.n = gamma_n;
  g.samples = gamma_samples;
  g.seed = gamma_seed;
  g.grid_points = gamma_grid;
  g.cache_dir = cache;
  return g;
}

namespace {

class Runner {
 public:
  Runner(RunConfig cfg, std::ostream& out) : cfg_(std::move(cfg)), out_(out), dir_(cfg_.out) {}

  void operator()() {
    if (cfg_.workers > 0) set_worker_count(cfg_.workers);
    const std::map<std::string, std::function<void()>> commands = {
        {"bands", [&] { bands(); }},           {"scatter", [&] { scatter(); }},
        {"lyapunov", [&] { lyapunov(); }},     {"resonance", [&] { resonance(); }},
        {"localize", [&] { localize(); }},     {"separation", [&] { separation(); }},
        {"prob", [&] { prob(); }},             {"convergents", [&] { convergents(); }},
    };
    commands.at(cfg_.command)();
  }

 private:
  std::vector<std::string> header(int bits) const {
    return {std::string("tool=thouless version=") + kVersion, "command=" + cfg_.command,
            "config_hash=" + cfg_.hash(), "seed=" + std::to_string(cfg_.seed),
            "precision_bits=" + std::to_string(cfg_.precision_bits) + " bits=" + std::to_string(bits)};
  }

  nlohmann::json provenance(int bits) const {
    return {{"tool", "thouless"},
            {"version", kVersion},
            {"command", cfg_.command},
            {"config_hash", cfg_.hash()},
            {"seed", cfg_.seed},
            {"precision_bits", cfg_.precision_bits},
            {"bits", bits},
            {"config", cfg_.canonical()}};
  }

  std::filesystem::path file(const std::string& name) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
    return dir_ / name;
  }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const auto path = file(name);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    body(os);
    os.flush();
    if (!os) throw IoError("failed writing " + path.string());
    written_.push_back(path.string());
  }

  void write_json(const std::string& name, const nlohmann::json& j) {
    write(name, [&](std::ostream& os) { os << j.dump(2) << "\n"; });
  }

  void summary(const std::string& text) {
    out_ << cfg_.command << ": " << text;
    if (!written_.empty()) {
      out_ << " ->";
      for (const auto& w : written_) out_ << " " << w;
    }
    out_ << "\n";
  }

  Spectrum spectrum(const PotentialSeq& V) { return compute_spectrum(V, {cfg_.precision_bits, Exec::parallel}); }

  LyapunovCurve curve() { return reference_curve(cfg_.model_spec(), cfg_.gamma_options()); }

  std::vector<double> energy_grid() const {
    return energy_window(model_bound(cfg_.model_spec())).grid(cfg_.grid);
  }

  void bands() {
    const Spectrum s = spectrum(make_potential(cfg_.model_spec(), cfg_.q));
    write("bands.csv", [&](std::ostream& os) {
      for (const auto& h : header(s.bits)) os << "# " << h << "\n";
      write_bands_csv(os, s);
    });
    int closed = 0;
    for (const auto& b : s.bands) closed += b.closed_right ? 1 : 0;
    summary("q=" + std::to_string(s.q()) + " bits=" + std::to_string(s.bits) + " bands=" +
            std::to_string(s.bands.size()) + " closed_gaps=" + std::to_string(closed));
  }

  void scatter() {
    const ModelSpec m = cfg_.model_spec();
    const LyapunovCurve c = curve();
    const ScatterDataset d = figure_scatter(m, cfg_.q, cfg_.precision_bits, c);
    const auto h = header(d.bits);
    write("scatter.csv", [&](std::ostream& os) { write_scatter_csv(os, d, h); });
    write("scatter.svg", [&](std::ostream& os) { write_scatter_svg(os, d, h); });
    write("gamma.csv", [&](std::ostream& os) {
      for (const auto& line : h) os << "# " << line << "\n";
      write_lyapunov_csv(os, c);
    });
    const DeviationRow dev = deviation_of(d);
    if (!cfg_.sweep.empty()) {
      if (!std::holds_alternative<AmoModel>(m)) {
        const auto rows = deviation_sweep(m, cfg_.sweep, cfg_.precision_bits, c);
        write("deviation.csv", [&](std::ostream& os) { write_deviation_csv(os, rows, h); });
      } else {
        throw ValidationError("the deviation sweep needs a model defined for every q (free or i.i.d.)");
      }
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "q=%d bits=%d sup_dev=%.4f mean_dev=%.4f", d.q, d.bits, dev.sup, dev.mean);
    summary(buf);
  }

  void lyapunov() {
    const LyapunovCurve c = curve();
    write("gamma.csv", [&](std::ostream& os) {
      for (const auto& line : header(0)) os << "# " << line << "\n";
      write_lyapunov_csv(os, c);
    });
    char buf[160];
    std::snprintf(buf, sizeof buf, "method=%s points=%zu gamma_range=[%.4f, %.4f]", c.method.c_str(), c.size(),
                  c.min_gamma(), c.max_gamma());
    summary(buf);
  }

  void resonance() {
    const PotentialSeq V = make_potential(cfg_.model_spec(), cfg_.q);
    const LyapunovCurve c = curve();
    nlohmann::json j = {{"provenance", provenance(128)}};
    std::string text;
    if (cfg_.has_energy) {
      const ResonanceReport r = resonant_set(V, cfg_.energy, cfg_.epsilon, cfg_.n, c);
      j["report"] = r.to_json();
      text = "E=" + std::to_string(cfg_.energy) + " resonant=" + std::to_string(r.resonant_sites.size()) +
             " diameter=" + std::to_string(r.diameter) + " qnr=" + (r.qnr_at_E ? "true" : "false");
    } else {
      const QnrResult r = qnr_check(V, cfg_.epsilon, cfg_.n, c, energy_grid());
      j["qnr_check"] = r.to_json();
      text = "grid=" + std::to_string(r.grid_points) + " failing=" + std::to_string(r.failing_energies.size()) +
             " qnr=" + (r.passed ? "true" : "false");
    }
    write_json("resonance.json", j);
    summary(text);
  }

  void localize() {
    const PotentialSeq V = make_potential(cfg_.model_spec(), cfg_.q);
    const Spectrum s = spectrum(V);
    const LyapunovCurve c = curve();
    const auto kappas = kappa_grid(cfg_.kappa_points);
    const double C = default_radius_constant(c.max_gamma(), cfg_.epsilon);
    std::vector<int> which;
    if (cfg_.band > 0)
      which.push_back(cfg_.band);
    else
      for (int j = 1; j <= s.q(); ++j) which.push_back(j);
    struct Item {
      DriftReport drift;
      LocalizationProfile profile;
      DecayCheck check;
      double gamma;
    };
    const auto items = parallel_map<Item>(Exec::parallel, which.size(), [&](std::size_t i) {
      const int j = which[i];
      DriftReport d = center_drift(s, j, kappas);
      const BigReal E = band_eigenvalue(s, j, FloquetPhase::periodic());
      const EigenPair pair = eigenvector(V, FloquetPhase::periodic(), E, j);
      LocalizationProfile p = localization_profile(pair, C, cfg_.n);
      const double g = c.at(E.to_double());
      DecayCheck chk = check_decay_bound(p, g, cfg_.epsilon, C, cfg_.n);
      return Item{std::move(d), std::move(p), chk, g};
    });
    nlohmann::json arr = nlohmann::json::array();
    int max_drift = 0, violations = 0;
    for (const auto& it : items) {
      nlohmann::json profile = it.profile.to_json();
      profile.erase("decay_points");
      arr.push_back({{"drift", it.drift.to_json()},
                     {"profile", profile},
                     {"gamma", it.gamma},
                     {"decay_bound", {{"holds", it.check.holds},
                                      {"worst_excess", std::isfinite(it.check.worst_excess)
                                                           ? nlohmann::json(it.check.worst_excess)
                                                           : nlohmann::json(nullptr)},
                                      {"worst_site", it.check.worst_site}}}});
      if (!it.drift.flat) max_drift = std::max(max_drift, it.drift.drift);
      violations += it.check.holds ? 0 : 1;
    }
    write_json("localize.json", {{"provenance", provenance(s.bits)},
                                 {"C", C},
                                 {"kappa_units", [&] {
                                    std::vector<double> u;
                                    for (const auto& k : kappas) u.push_back(k.units());
                                    return u;
                                  }()},
                                 {"bands", arr}});
    write("decay.csv", [&](std::ostream& os) {
      for (const auto& line : header(s.bits)) os << "# " << line << "\n";
      os << "# band=" << items.front().profile.band << " kappa=0\n";
      write_decay_csv(os, items.front().profile);
    });
    summary("bands=" + std::to_string(items.size()) + " max_drift=" + std::to_string(max_drift) +
            " C*n=" + std::to_string(C * cfg_.n) + " decay_violations=" + std::to_string(violations));
  }

  void separation() {
    const Spectrum s = spectrum(make_potential(cfg_.model_spec(), cfg_.q));
    const SeparationReport r = separation_report(s, cfg_.epsilon);
    write_json("separation.json", {{"provenance", provenance(s.bits)}, {"report", r.to_json()}});
    summary("min_gap=" + r.min_gap.to_string(6) + " threshold=" + r.threshold.to_string(6) +
            " qsep=" + (r.qsep ? "true" : "false"));
  }

  void prob() {
    const ModelSpec m = cfg_.model_spec();
    const auto* iid = std::get_if<IidModel>(&m);
    if (!iid) throw ValidationError("prob needs an i.i.d. model");
    EventSpec e;
    e.event = parse_event(cfg_.event);
    e.dist = iid->dist;
    e.epsilon = cfg_.epsilon;
    e.n = cfg_.n;
    e.q = cfg_.q;
    e.trials = cfg_.trials;
    e.seed = cfg_.seed;
    e.bits = cfg_.precision_bits;
    LyapunovCurve c = constant_curve(0.0, -1.0, 1.0);
    std::vector<double> grid;
    if (e.event == Event::qnr) {
      if (e.q <= 2 * e.n) throw ValidationError("qnr needs q > 2n");
      c = curve();
      grid = energy_grid();
    }
    const TrialSummary t = estimate_event_prob(e, c, grid);
    write_json("prob.json", {{"provenance", provenance(e.bits)}, {"summary", t.to_json()}});
    char buf[160];
    std::snprintf(buf, sizeof buf, "event=%s p_hat=%.3f wilson95=[%.3f, %.3f] trials=%d", cfg_.event.c_str(),
                  t.p_hat, t.interval.lo, t.interval.hi, t.trials);
    summary(buf);
  }

  void convergents() {
    std::vector<Rational> cs;
    if (is_quadratic_name(cfg_.alpha)) {
      cs = cf_convergents(QuadraticIrrational::parse(cfg_.alpha), cfg_.count);
    } else {
      if (cfg_.alpha.find('/') != std::string::npos)
        throw ValidationError("alpha " + cfg_.alpha + " is rational; its expansion terminates");
      double a = 0.0;
      try {
        a = std::stod(cfg_.alpha);
      } catch (const std::logic_error&) {
        throw ValidationError("cannot parse alpha '" + cfg_.alpha + "'");
      }
      cs = cf_convergents(a, cfg_.count);
    }
    for (const auto& r : cs) out_ << r.to_string() << "\n";
  }

  RunConfig cfg_;
  std::ostream& out_;
  std::filesystem::path dir_;
  std::vector<std::string> written_;
};

void report_error(std::ostream& err, const std::string& kind, const std::string& message, int code) {
  err << nlohmann::json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bands, Lyapunov exponents, resonances and localization of periodic Schrodinger operators"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  struct Sub {
    CLI::App* app;
    std::string config;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
  };
  const std::vector<std::pair<const char*, const char*>> names = {
      {"bands", "certified band edges of one potential"},
      {"scatter", "band centers against log-width rates with the reference gamma curve"},
      {"lyapunov", "gamma(E) on the energy window"},
      {"resonance", "resonant sites at one energy, or the Q_NR check over the grid"},
      {"localize", "localization centers, decay profiles and center drift over kappa"},
      {"separation", "minimal gap of the periodic eigenvalues against e^{-eps q}"},
      {"prob", "Monte Carlo probability of Q_NR or Q_Sep with a Wilson interval"},
      {"convergents", "continued-fraction convergents of alpha"},
  };
  std::vector<std::unique_ptr<Sub>> subs;
  for (const auto& [name, desc] : names) {
    auto s = std::make_unique<Sub>();
    s->app = app.add_subcommand(name, desc);
    s->app->add_option("--config", s->config, "JSON file with config keys; flags override it");
    for (const auto& k : kKeys) {
      const std::string flag = std::string("--") + k.name;
      if (k.type == Type::flag)
        s->options[k.name] = s->app->add_flag(flag, k.help);
      else
        s->options[k.name] = s->app->add_option(flag, s->values[k.name], k.help);
    }
    subs.push_back(std::move(s));
  }

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      throw ValidationError(e.what());
    }

    const Sub* chosen = nullptr;
    for (const auto& s : subs)
      if (s->app->parsed()) chosen = s.get();
    RunConfig cfg;
    cfg.command = chosen->app->get_name();
    if (!chosen->config.empty()) {
      std::ifstream in(chosen->config);
      if (!in) throw IoError("cannot read config file " + chosen->config);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config file " + chosen->config + " is not valid JSON: " + e.what());
      }
      cfg.merge(j);
    }
    nlohmann::json flags = nlohmann::json::object();
    for (const auto& k : kKeys) {
      const CLI::Option* o = chosen->options.at(k.name);
      if (o->count() == 0) continue;
      flags[k.name] = flag_value(k, k.type == Type::flag ? std::string() : chosen->values.at(k.name));
    }
    cfg.merge(flags);
    cfg.validate();
    Runner{cfg, out}();
    return 0;
  } catch (const Error& e) {
    report_error(err, e.kind(), e.what(), e.exit_code());
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    report_error(err, "io", e.what(), 4);
    return 4;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what(), 1);
    return 1;
  }
}

}  // namespace thouless::cli
