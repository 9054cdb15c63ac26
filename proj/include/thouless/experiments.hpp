#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "thouless/floquet.hpp"
#include "thouless/lyapunov.hpp"
#include "thouless/potential.hpp"

namespace thouless {

/// 2 lambda cos(2 pi (theta + k alpha)) with a rational alpha. alpha_limit is
/// the irrational the rational approximates; it drives the Birkhoff estimate
/// of gamma and is ignored when zero.
struct AmoModel {
  double lambda = 1.0;
  double theta = 0.0;
  Rational alpha;
  long double alpha_limit = 0.0L;
};

struct IidModel {
  DistributionSpec dist = DistributionSpec::default_iid();
  std::uint64_t seed = 1;
};

struct FreeModel {
  double value = 0.0;
};

using ModelSpec = std::variant<AmoModel, IidModel, FreeModel>;

/// The period-q potential of a model. AMO requires q == alpha.q.
PotentialSeq make_potential(const ModelSpec& m, int q);
nlohmann::json model_json(const ModelSpec& m);
/// Declared bound on max|V|.
double model_bound(const ModelSpec& m);

enum class GammaMethod { automatic, iid_mc, birkhoff, oracle };

GammaMethod parse_gamma_method(const std::string& s);
std::string to_string(GammaMethod m);

struct GammaOptions {
  GammaMethod method = GammaMethod::automatic;
  int n = 10000;
  int samples = 200;
  std::uint64_t seed = 1;
  int birkhoff_n = 100000;
  /// Points on the energy window K.
  int grid_points = 401;
  std::filesystem::path cache_dir;
};

/// gamma curve of the model on an equispaced grid over K. automatic picks
/// Monte Carlo for i.i.d. models, the closed form for AMO with lambda >= 1,
/// and the Birkhoff average otherwise.
LyapunovCurve reference_curve(const ModelSpec& m, const GammaOptions& opt, Exec exec = Exec::parallel);

struct ScatterPoint {
  int band = 0;
  double center = 0.0;
  /// -q^{-1} ln(width)
  double rate = 0.0;
  double gamma = 0.0;
  double stderr_ = 0.0;
};

struct ScatterDataset {
  std::vector<ScatterPoint> points;
  LyapunovCurve curve;
  nlohmann::json meta;
  int q = 0;
  int bits = 0;
};

ScatterDataset scatter_from(const Spectrum& s, const LyapunovCurve& curve, nlohmann::json meta = {});
ScatterDataset figure_scatter(const ModelSpec& m, int q, int bits, const LyapunovCurve& curve,
                              Exec exec = Exec::parallel);

struct DeviationRow {
  int q = 0;
  int bits = 0;
  double sup = 0.0;
  double mean = 0.0;
  int sup_band = 0;
  /// stderr of gamma at the band attaining the sup.
  double sup_stderr = 0.0;
};

DeviationRow deviation_of(const ScatterDataset& d);
std::vector<DeviationRow> deviation_sweep(const ModelSpec& m, const std::vector<int>& qs, int bits,
                                          const LyapunovCurve& curve, Exec exec = Exec::parallel);

enum class Event { qnr, qsep };

Event parse_event(const std::string& s);
std::string to_string(Event e);

struct EventSpec {
  Event event = Event::qsep;
  DistributionSpec dist = DistributionSpec::default_iid();
  double epsilon = 0.05;
  int n = 8;
  int q = 80;
  int trials = 100;
  std::uint64_t seed = 1;
  int bits = 0;
};

struct WilsonInterval {
  double lo;
  double hi;
};

/// 95% Wilson score interval.
WilsonInterval wilson_interval(int successes, int trials, double z = 1.959963984540054);

struct TrialSummary {
  Event event = Event::qsep;
  double epsilon = 0.0;
  int n = 0;
  int q = 0;
  int trials = 0;
  int successes = 0;
  double p_hat = 0.0;
  WilsonInterval interval{0.0, 1.0};

  nlohmann::json to_json() const;
};

/// Samples potentials from derive_seed(seed, {trial}) and evaluates the event.
/// Q_NR uses `curve` and the energy grid; Q_Sep ignores both.
TrialSummary estimate_event_prob(const EventSpec& spec, const LyapunovCurve& curve,
                                 const std::vector<double>& energies, Exec exec = Exec::parallel);

/// Header lines are written verbatim, each prefixed by "# ".
void write_scatter_csv(std::ostream& os, const ScatterDataset& d, const std::vector<std::string>& header = {});
void write_deviation_csv(std::ostream& os, const std::vector<DeviationRow>& rows,
                         const std::vector<std::string>& header = {});
/// 800x500 viewBox; plot area x in [60, 780], y in [20, 460]. Energies map
/// linearly from [min center - 0.25, max center + 0.25], rates from
/// [0, 1.1 * max(rate, gamma)]. Blue dots, red reference polyline.
void write_scatter_svg(std::ostream& os, const ScatterDataset& d, const std::vector<std::string>& header = {});

}  // namespace thouless
