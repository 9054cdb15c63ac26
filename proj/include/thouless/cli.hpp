#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "thouless/experiments.hpp"

namespace thouless::cli {

/// Effective configuration of one run: defaults, then the JSON config file,
/// then command-line flags. Keys match the long flag names.
struct RunConfig {
  std::string command;
  std::string model = "iid-uniform-union";
  int q = 100;
  int precision_bits = 0;
  double epsilon = 0.05;
  int n = 8;
  int kappa_points = 9;
  std::uint64_t seed = 1;
  int trials = 100;
  int grid = 1001;
  std::string out = ".";
  int workers = 0;
  bool long_run = false;

  double lambda = 1.2840254166877414;  // e^{1/4}
  double theta = 1.7320508075688772;   // sqrt 3
  std::string alpha = "sqrt2";
  nlohmann::json distribution;  // null selects the default i.i.d. law

  int count = 9;
  bool has_energy = false;
  double energy = 0.0;
  int band = 0;
  std::string event = "qsep";
  std::string gamma_method = "auto";
  int gamma_n = 10000;
  int gamma_samples = 200;
  std::uint64_t gamma_seed = 1;
  int gamma_grid = 401;
  std::string cache;
  std::vector<int> sweep;

  /// Applies a JSON object on top of this config. Unknown keys and ill-typed
  /// values raise ValidationError.
  void merge(const nlohmann::json& j);
  /// Range checks; throws ValidationError.
  void validate() const;
  /// Everything that influences results. Excludes out, workers and cache so
  /// that the hash does not depend on where or how fast a run happened.
  nlohmann::json canonical() const;
  std::string hash() const;

  ModelSpec model_spec() const;
  GammaOptions gamma_options() const;
};

/// Runs one CLI invocation. Machine-readable error JSON goes to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace thouless::cli
