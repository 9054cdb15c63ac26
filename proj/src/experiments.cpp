#include "thouless/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "thouless/errors.hpp"
#include "thouless/hash.hpp"
#include "thouless/localization.hpp"
#include "thouless/resonance.hpp"

namespace thouless {

namespace {

template <class... F>
struct overloaded : F... {
  using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void write_header(std::ostream& os, const std::vector<std::string>& header) {
  for (const auto& h : header) os << "# " << h << "\n";
}

}  // namespace

PotentialSeq make_potential(const ModelSpec& m, int q) {
  return std::visit(overloaded{
                        [&](const AmoModel& a) { return quasiperiodic_seq(a.lambda, a.theta, a.alpha, q); },
                        [&](const IidModel& i) { return sample_iid(i.dist, q, i.seed); },
                        [&](const FreeModel& f) { return constant_seq(f.value, q); },
                    },
                    m);
}

nlohmann::json model_json(const ModelSpec& m) {
  return std::visit(overloaded{
                        [](const AmoModel& a) {
                          return nlohmann::json{{"type", "amo"},
                                                {"lambda", a.lambda},
                                                {"theta", a.theta},
                                                {"alpha", a.alpha.to_string()},
                                                {"alpha_limit", fmt("%.17g", static_cast<double>(a.alpha_limit))}};
                        },
                        [](const IidModel& i) {
                          return nlohmann::json{{"type", "iid"}, {"distribution", i.dist.to_json()}, {"seed", i.seed}};
                        },
                        [](const FreeModel& f) { return nlohmann::json{{"type", "free"}, {"value", f.value}}; },
                    },
                    m);
}

double model_bound(const ModelSpec& m) {
  return std::visit(overloaded{
                        [](const AmoModel& a) { return 2.0 * std::fabs(a.lambda); },
                        [](const IidModel& i) { return i.dist.support_bound(); },
                        [](const FreeModel& f) { return std::fabs(f.value); },
                    },
                    m);
}

GammaMethod parse_gamma_method(const std::string& s) {
  if (s == "auto") return GammaMethod::automatic;
  if (s == "iid_mc" || s == "mc") return GammaMethod::iid_mc;
  if (s == "birkhoff") return GammaMethod::birkhoff;
  if (s == "oracle") return GammaMethod::oracle;
  throw ValidationError("unknown gamma method '" + s + "' (auto, mc, birkhoff, oracle)");
}

std::string to_string(GammaMethod m) {
  switch (m) {
    case GammaMethod::automatic: return "auto";
    case GammaMethod::iid_mc: return "mc";
    case GammaMethod::birkhoff: return "birkhoff";
    case GammaMethod::oracle: return "oracle";
  }
  return "auto";
}

LyapunovCurve reference_curve(const ModelSpec& m, const GammaOptions& opt, Exec exec) {
  if (opt.grid_points < 2) throw ValidationError("gamma grid needs at least 2 points");
  auto grid = energy_window(model_bound(m)).grid(opt.grid_points);
  GammaMethod method = opt.method;
  if (method == GammaMethod::automatic) {
    if (const auto* a = std::get_if<AmoModel>(&m))
      method = a->lambda >= 1.0 ? GammaMethod::oracle : GammaMethod::birkhoff;
    else
      method = GammaMethod::iid_mc;
  }
  nlohmann::json key = {{"model", model_json(m)}, {"method", to_string(method)}, {"grid_points", opt.grid_points}};
  if (std::holds_alternative<IidModel>(m)) key["model"].erase("seed");
  std::function<LyapunovCurve()> compute;
  switch (method) {
    case GammaMethod::iid_mc: {
      if (std::holds_alternative<AmoModel>(m)) throw ValidationError("Monte Carlo gamma needs an i.i.d. model");
      const DistributionSpec dist = std::holds_alternative<IidModel>(m)
                                        ? std::get<IidModel>(m).dist
                                        : DistributionSpec::constant(std::get<FreeModel>(m).value);
      key.update({{"n", opt.n}, {"samples", opt.samples}, {"seed", opt.seed}});
      compute = [=] { return lyapunov_iid_mc(dist, grid, opt.n, opt.samples, opt.seed, exec); };
      break;
    }
    case GammaMethod::birkhoff: {
      const auto* a = std::get_if<AmoModel>(&m);
      if (!a) throw ValidationError("Birkhoff gamma needs an AMO model");
      const long double alpha = a->alpha_limit != 0.0L ? a->alpha_limit : static_cast<long double>(a->alpha.value());
      key["n"] = opt.birkhoff_n;
      compute = [=] { return lyapunov_birkhoff(a->lambda, a->theta, alpha, grid, opt.birkhoff_n, exec); };
      break;
    }
    case GammaMethod::oracle: {
      const auto* a = std::get_if<AmoModel>(&m);
      if (!a) throw ValidationError("the closed-form gamma oracle needs an AMO model");
      compute = [=] { return amo_oracle_curve(a->lambda, grid); };
      break;
    }
    case GammaMethod::automatic: break;
  }
  return cached_curve(opt.cache_dir, hex64(fnv1a64(key.dump())), compute);
}

ScatterDataset scatter_from(const Spectrum& s, const LyapunovCurve& curve, nlohmann::json meta) {
  ScatterDataset d;
  d.q = s.q();
  d.bits = s.bits;
  d.curve = curve;
  d.meta = std::move(meta);
  for (const auto& b : s.bands) {
    const double c = b.center().to_double();
    d.points.push_back({b.index, c, b.log_width_rate(d.q), curve.at(c), curve.stderr_at(c)});
  }
  return d;
}

ScatterDataset figure_scatter(const ModelSpec& m, int q, int bits, const LyapunovCurve& curve, Exec exec) {
  const PotentialSeq V = make_potential(m, q);
  const Spectrum s = compute_spectrum(V, {bits, exec});
  nlohmann::json meta = {{"model", model_json(m)}, {"q", q}, {"bits", s.bits}, {"gamma_method", curve.method}};
  return scatter_from(s, curve, std::move(meta));
}

DeviationRow deviation_of(const ScatterDataset& d) {
  DeviationRow r;
  r.q = d.q;
  r.bits = d.bits;
  double sum = 0.0;
  for (const auto& p : d.points) {
    const double dev = std::fabs(p.rate - p.gamma);
    sum += dev;
    if (dev > r.sup || r.sup_band == 0) {
      r.sup = dev;
      r.sup_band = p.band;
      r.sup_stderr = p.stderr_;
    }
  }
  r.mean = d.points.empty() ? 0.0 : sum / static_cast<double>(d.points.size());
  return r;
}

std::vector<DeviationRow> deviation_sweep(const ModelSpec& m, const std::vector<int>& qs, int bits,
                                          const LyapunovCurve& curve, Exec exec) {
  for (std::size_t i = 1; i < qs.size(); ++i)
    if (qs[i] <= qs[i - 1]) throw ValidationError("deviation_sweep needs an increasing q list");
  std::vector<DeviationRow> rows;
  for (int q : qs) rows.push_back(deviation_of(figure_scatter(m, q, bits, curve, exec)));
  return rows;
}

Event parse_event(const std::string& s) {
  if (s == "qnr") return Event::qnr;
  if (s == "qsep") return Event::qsep;
  throw ValidationError("unknown event '" + s + "' (qnr, qsep)");
}

std::string to_string(Event e) { return e == Event::qnr ? "qnr" : "qsep"; }

WilsonInterval wilson_interval(int successes, int trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = trials;
  const double p = successes / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  // The closed form misses the exact ends by rounding when p is 0 or 1.
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half), successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

nlohmann::json TrialSummary::to_json() const {
  nlohmann::json j = {{"event", to_string(event)}, {"epsilon", epsilon},  {"q", q},
                      {"trials", trials},          {"successes", successes}, {"p_hat", p_hat},
                      {"wilson95", {interval.lo, interval.hi}}};
  if (event == Event::qnr) j["n"] = n;
  return j;
}

TrialSummary estimate_event_prob(const EventSpec& spec, const LyapunovCurve& curve,
                                 const std::vector<double>& energies, Exec exec) {
  if (spec.trials < 30) throw ValidationError("estimate_event_prob needs at least 30 trials");
  const auto hit = parallel_map<char>(exec, static_cast<std::size_t>(spec.trials), [&](std::size_t t) {
    const PotentialSeq V = sample_iid(spec.dist, spec.q, derive_seed(spec.seed, {t}));
    if (spec.event == Event::qsep) return static_cast<char>(separation_report(V, spec.epsilon, spec.bits, Exec::serial).qsep);
    return static_cast<char>(qnr_check(V, spec.epsilon, spec.n, curve, energies, 128, Exec::serial).passed);
  });
  TrialSummary s;
  s.event = spec.event;
  s.epsilon = spec.epsilon;
  s.n = spec.n;
  s.q = spec.q;
  s.trials = spec.trials;
  s.successes = static_cast<int>(std::count(hit.begin(), hit.end(), 1));
  s.p_hat = static_cast<double>(s.successes) / s.trials;
  s.interval = wilson_interval(s.successes, s.trials);
  return s;
}

void write_scatter_csv(std::ostream& os, const ScatterDataset& d, const std::vector<std::string>& header) {
  write_header(os, header);
  os << "j,center,rate,gamma,stderr\n";
  for (const auto& p : d.points)
    os << p.band << "," << fmt("%.17g", p.center) << "," << fmt("%.17g", p.rate) << "," << fmt("%.17g", p.gamma)
       << "," << fmt("%.17g", p.stderr_) << "\n";
}

void write_deviation_csv(std::ostream& os, const std::vector<DeviationRow>& rows,
                         const std::vector<std::string>& header) {
  write_header(os, header);
  os << "q,bits,sup,mean,sup_band,sup_stderr\n";
  for (const auto& r : rows)
    os << r.q << "," << r.bits << "," << fmt("%.17g", r.sup) << "," << fmt("%.17g", r.mean) << "," << r.sup_band
       << "," << fmt("%.17g", r.sup_stderr) << "\n";
}

void write_scatter_svg(std::ostream& os, const ScatterDataset& d, const std::vector<std::string>& header) {
  constexpr double x0 = 60, x1 = 780, y0 = 460, y1 = 20;
  double emin = INFINITY, emax = -INFINITY, ymax = 0.0;
  for (const auto& p : d.points) {
    emin = std::min(emin, p.center);
    emax = std::max(emax, p.center);
    if (std::isfinite(p.rate)) ymax = std::max(ymax, p.rate);
    ymax = std::max(ymax, p.gamma);
  }
  if (!(emin <= emax)) emin = -1.0, emax = 1.0;
  emin -= 0.25;
  emax += 0.25;
  ymax = ymax > 0.0 ? 1.1 * ymax : 1.0;
  const auto X = [&](double e) { return x0 + (e - emin) / (emax - emin) * (x1 - x0); };
  const auto Y = [&](double r) { return y0 + std::clamp(r / ymax, 0.0, 1.0) * (y1 - y0); };

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  for (const auto& h : header) os << "<!-- " << h << " -->\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" width=\"800\" height=\"500\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
  os << "<line x1=\"60\" y1=\"460\" x2=\"780\" y2=\"460\" stroke=\"black\"/>\n";
  os << "<line x1=\"60\" y1=\"460\" x2=\"60\" y2=\"20\" stroke=\"black\"/>\n";
  os << "<text x=\"420\" y=\"490\" font-size=\"14\" text-anchor=\"middle\">band center</text>\n";
  os << "<text x=\"20\" y=\"240\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 240)\">"
        "-ln(width)/q</text>\n";
  os << "<text x=\"60\" y=\"476\" font-size=\"11\" text-anchor=\"middle\">" << fmt("%.2f", emin) << "</text>\n";
  os << "<text x=\"780\" y=\"476\" font-size=\"11\" text-anchor=\"middle\">" << fmt("%.2f", emax) << "</text>\n";
  os << "<text x=\"55\" y=\"24\" font-size=\"11\" text-anchor=\"end\">" << fmt("%.3f", ymax) << "</text>\n";
  os << "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"1.5\" points=\"";
  bool first = true;
  for (std::size_t i = 0; i < d.curve.size(); ++i) {
    const double e = d.curve.energies[i];
    if (e < emin || e > emax) continue;
    os << (first ? "" : " ") << fmt("%.2f", X(e)) << "," << fmt("%.2f", Y(d.curve.gamma[i]));
    first = false;
  }
  os << "\"/>\n";
  for (const auto& p : d.points)
    if (std::isfinite(p.rate))
      os << "<circle cx=\"" << fmt("%.2f", X(p.center)) << "\" cy=\"" << fmt("%.2f", Y(p.rate))
         << "\" r=\"2\" fill=\"blue\"/>\n";
  os << "</svg>\n";
}

}  // namespace thouless
