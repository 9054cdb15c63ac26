#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <json.hpp>

#include "thouless/cli.hpp"
#include "thouless/errors.hpp"

using namespace thouless;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "thouless");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("thouless-cli-" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return files;
}

const char* const kSubcommands[] = {"bands",     "scatter",    "lyapunov", "resonance",
                                    "localize",  "separation", "prob",     "convergents"};
const char* const kKeys[] = {"model", "q",    "precision-bits", "epsilon", "n",     "kappa-points",
                             "seed",  "trials", "grid",          "out",     "workers", "long"};

}  // namespace

TEST_CASE("help lists every key with range and default") {
  for (const char* sub : kSubcommands) {
    const Result r = run({sub, "--help"});
    CHECK(r.code == 0);
    for (const char* key : kKeys) {
      const auto pos = r.out.find(std::string("--") + key + " ");
      REQUIRE_MESSAGE(pos != std::string::npos, sub << " --" << key);
      const auto line = r.out.substr(pos, r.out.find('\n', pos) - pos);
      CHECK_MESSAGE(line.find("default") != std::string::npos, line);
    }
  }
  CHECK(run({"--help"}).code == 0);
  const Result v = run({"--version"});
  CHECK(v.code == 0);
  CHECK_FALSE(v.out.empty());
}

TEST_CASE("errors are JSON on stderr with typed exit codes") {
  const auto check_error = [](const Result& r, int code, const std::string& kind) {
    CHECK(r.code == code);
    const auto j = nlohmann::json::parse(r.err);
    CHECK(j.at("error").at("exit_code") == code);
    CHECK(j.at("error").at("kind") == kind);
    CHECK_FALSE(j.at("error").at("message").get<std::string>().empty());
  };
  check_error(run({"bands", "--q", "0"}), 2, "validation");
  check_error(run({"bands", "--q", "abc"}), 2, "validation");
  check_error(run({"bands", "--bogus", "1"}), 2, "validation");
  check_error(run({"bands", "--q", "1000"}), 2, "validation");
  check_error(run({"bands", "--model", "amo", "--q", "100"}), 2, "validation");
  check_error(run({"bands", "--precision-bits", "65", "--q", "400", "--out", fresh("prec").string()}), 3,
              "precision_exhausted");
  check_error(run({"nothing"}), 2, "validation");
  const auto blocker = fresh("blocked");
  std::ofstream(blocker.string()) << "x";
  check_error(run({"bands", "--q", "4", "--out", (blocker / "sub").string()}), 4, "io");
  fs::remove(blocker);
}

TEST_CASE("config files merge under the flags") {
  const auto dir = fresh("config");
  fs::create_directories(dir);
  const auto cfg = dir / "run.json";
  std::ofstream(cfg) << R"({"q": 6, "seed": 3, "model": "iid"})";
  REQUIRE(run({"bands", "--config", cfg.string(), "--out", (dir / "a").string()}).code == 0);
  const std::string a = slurp(dir / "a" / "bands.csv");
  CHECK(a.find("# seed=3") != std::string::npos);
  CHECK(std::count(a.begin(), a.end(), '\n') == 5 + 1 + 6);
  REQUIRE(run({"bands", "--config", cfg.string(), "--q", "5", "--out", (dir / "b").string()}).code == 0);
  const std::string b = slurp(dir / "b" / "bands.csv");
  CHECK(std::count(b.begin(), b.end(), '\n') == 5 + 1 + 5);

  std::ofstream(cfg) << R"({"q": 6, "unknown": 1})";
  CHECK(run({"bands", "--config", cfg.string()}).code == 2);
  std::ofstream(cfg) << R"({"q": "six"})";
  CHECK(run({"bands", "--config", cfg.string()}).code == 2);
  std::ofstream(cfg) << "{not json";
  CHECK(run({"bands", "--config", cfg.string()}).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("run configuration hashing") {
  cli::RunConfig a, b;
  a.command = b.command = "bands";
  b.out = "/elsewhere";
  b.workers = 3;
  b.cache = "/tmp/cache";
  CHECK(a.hash() == b.hash());
  b.seed = 2;
  CHECK(a.hash() != b.hash());
  CHECK(a.hash().size() == 16);
  cli::RunConfig c;
  CHECK_THROWS_AS(c.merge({{"nope", 1}}), ValidationError);
  c.merge({{"q", 985}});
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.merge({{"long", true}});
  CHECK_NOTHROW(c.validate());
  cli::RunConfig m;
  m.model = "amo";
  m.q = 169;
  const auto spec = std::get<AmoModel>(m.model_spec());
  CHECK(spec.alpha == Rational{239, 169});
  m.alpha = "7/5";
  CHECK_THROWS_AS(m.model_spec(), ValidationError);
}

TEST_CASE("every output carries a provenance header") {
  const auto dir = fresh("prov");
  const auto out = dir.string();
  const std::vector<std::vector<std::string>> runs = {
      {"bands", "--q", "6"},
      {"lyapunov", "--q", "6", "--gamma-n", "100", "--gamma-samples", "4", "--gamma-grid", "101"},
      {"scatter", "--q", "10", "--gamma-n", "100", "--gamma-samples", "4", "--gamma-grid", "101", "--sweep", "6,8"},
      {"resonance", "--q", "20", "--n", "2", "--grid", "51", "--gamma-n", "100", "--gamma-samples", "4",
       "--gamma-grid", "101"},
      {"localize", "--q", "12", "--n", "2", "--kappa-points", "3", "--gamma-n", "100", "--gamma-samples", "4",
       "--gamma-grid", "101"},
      {"separation", "--q", "12"},
      {"prob", "--q", "10", "--trials", "30"},
  };
  for (auto args : runs) {
    args.insert(args.end(), {"--out", out});
    const Result r = run(args);
    CHECK_MESSAGE(r.code == 0, args[0] << ": " << r.err);
    CHECK(r.out.find(args[0] + ":") == 0);
  }
  for (const auto& [name, text] : snapshot(dir)) {
    if (name.ends_with(".json")) {
      const auto j = nlohmann::json::parse(text);
      const auto& p = j.at("provenance");
      CHECK(p.contains("config_hash"));
      CHECK(p.contains("seed"));
      CHECK(p.contains("precision_bits"));
      CHECK(p.contains("version"));
    } else {
      CHECK_MESSAGE(text.find("tool=thouless version=") != std::string::npos, name);
      CHECK_MESSAGE(text.find("config_hash=") != std::string::npos, name);
      CHECK_MESSAGE(text.find("seed=") != std::string::npos, name);
      CHECK_MESSAGE(text.find("precision_bits=") != std::string::npos, name);
    }
  }
  const auto files = snapshot(dir);
  for (const char* f : {"bands.csv", "gamma.csv", "scatter.csv", "scatter.svg", "deviation.csv", "resonance.json",
                        "localize.json", "decay.csv", "separation.json", "prob.json"})
    CHECK_MESSAGE(files.count(f) == 1, f);
  const Result conv = run({"convergents", "--alpha", "sqrt2", "--count", "7"});
  CHECK(conv.code == 0);
  CHECK(conv.out.find("239/169") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("repeated runs are byte-identical at any worker count") {
  const std::vector<std::string> base = {"scatter", "--q", "16", "--seed", "5", "--gamma-n", "200",
                                         "--gamma-samples", "6", "--gamma-grid", "101"};
  std::vector<std::map<std::string, std::string>> snaps;
  for (const char* workers : {"1", "2", "1"}) {
    const auto dir = fresh(std::string("det") + std::to_string(snaps.size()));
    auto args = base;
    args.insert(args.end(), {"--workers", workers, "--out", dir.string()});
    REQUIRE(run(args).code == 0);
    snaps.push_back(snapshot(dir));
    fs::remove_all(dir);
  }
  CHECK(snaps[0] == snaps[1]);
  CHECK(snaps[0] == snaps[2]);
}

TEST_CASE("the installed binary reports exit codes") {
  const char* exe = std::getenv("THOULESS_CLI");
  if (!exe) return;
  const std::string cmd = std::string(exe) + " bands --q 0 2>/dev/null >/dev/null";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 2);
  CHECK(WEXITSTATUS(std::system((std::string(exe) + " --help >/dev/null").c_str())) == 0);
}
