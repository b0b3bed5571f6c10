#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "dynborrow/commands.hpp"
#include "dynborrow/oracle.hpp"

using namespace dynborrow;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigDir = DYNBORROW_CONFIG_DIR;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

std::string bundled(const std::string& name) { return read_file(kConfigDir / (name + ".yaml")); }

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("dynborrow-test-" + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name, std::ios::binary) << text;
    return path / name;
  }
};

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "dynborrow");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

int config_error_line(const std::string& text) {
  try {
    parse_config(text, "test.yaml");
  } catch (const ConfigError& e) {
    return e.line();
  }
  FAIL("expected a ConfigError");
  return -1;
}

double cell_number(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  return static_cast<double>(std::get<std::int64_t>(c));
}

}  // namespace

TEST_CASE("bundled configurations load") {
  for (const char* name : {"bridging-china", "bridging-china-w03", "bridging-china-w05", "bridging-china-w07",
                           "bridging-china-w05-power"}) {
    const auto cfg = load_config(kConfigDir / (std::string(name) + ".yaml"));
    CHECK(cfg.design.target_n == 150);
    CHECK(cfg.design.sigma == 350);
    CHECK(cfg.design.target_se == doctest::Approx(2 * 350 / std::sqrt(150.0)).epsilon(1e-15));
    CHECK(cfg.design.prior.vague_variance == 245000);
    CHECK(cfg.design.external.n == 800);
    CHECK(cfg.design.external.y_hat == 86);
    CHECK(cfg.design.external.se == 20.1);
    CHECK(cfg.design.mode == PosteriorMode::Replication);
    CHECK(cfg.design.decision_grid.size() == 101);
    REQUIRE(cfg.calibration);
    CHECK(cfg.calibration->lambda_grid->size() == 800);
    CHECK(cfg.calibration->lambda_grid->at(147) == 0.185);
    CHECK(cfg.calibration->nu_grid->size() == 60);
  }
  const auto w07 = load_config(kConfigDir / "bridging-china-w07.yaml");
  CHECK(w07.design.prior.w0 == 0.7);
  CHECK(std::get<HalfNormal>(std::get<MapPrior>(w07.design.prior.informative).heterogeneity).scale == 46);
}

TEST_CASE("config errors carry line numbers") {
  const auto base = bundled("bridging-china");
  CHECK(config_error_line(replace(base, "  w0: 0.5\n", "  w0: 0.5\n  bogus: 1\n")) > 1);
  const std::string unknown = "mode: exact\nfoo: 1\n";
  CHECK(config_error_line(unknown) == 2);

  const auto bad_threshold = replace(base, "threshold: 0.95", "threshold: 0.5");
  std::istringstream lines(bad_threshold);
  std::string line;
  int n = 0;
  int where = 0;
  while (std::getline(lines, line)) {
    ++n;
    if (line.find("threshold: 0.5") != std::string::npos) where = n;
  }
  CHECK(config_error_line(bad_threshold) == where);

  CHECK(config_error_line(replace(base, "mode: replication", "mode: approximate")) == 3);
  CHECK(config_error_line("target: [1, 2\n") > 0);
  CHECK_THROWS_AS(parse_config(replace(base, "external:", "externals:")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(base, "lambda_grid: {from: 1, to: 800, step: 1, divide_by: 800}",
                                       "lambda_grid: [0.5, 0.2]")),
                  ConfigError);
  CHECK_THROWS_AS(load_config(kConfigDir / "does-not-exist.yaml"), ConfigError);
}

TEST_CASE("posterior command") {
  auto cfg = load_config(kConfigDir / "bridging-china-w03.yaml");
  const auto r = cmd_posterior(cfg, 49);
  CHECK(std::get<double>(r.get("success_prob")) >= 0.95);
  CHECK(std::get<bool>(r.get("success")));
  CHECK(r.table("components").rows.size() == 2);

  cfg.design.prior.w0 = 0.0;
  const auto vague = cmd_posterior(cfg, 20);
  CHECK(std::get<double>(vague.get("w")) == 0.0);
}

TEST_CASE("MAP posterior command reports borrowing histograms that match the integrated values") {
  const auto cfg = load_config(kConfigDir / "bridging-china-w05.yaml");
  const auto r = cmd_posterior(cfg, 0);
  CHECK(r.table("borrowing").rows.size() == 800);
  const auto& hist = r.table("borrowing_histogram");
  REQUIRE(hist.rows.size() == 8);
  std::vector<double> edges;
  for (const auto& row : hist.rows) edges.push_back(cell_number(row[0]));
  edges.push_back(cell_number(hist.rows.back()[1]));
  const auto quad = oracle::ess_bin_masses(cfg.design.target_at(0), cfg.design.external, HalfNormal{34}, edges);
  for (std::size_t k = 0; k < 8; ++k) CHECK(std::abs(cell_number(hist.rows[k][3]) - quad[k]) <= 1e-3);
}

TEST_CASE("oc command") {
  const auto r = cmd_oc(load_config(kConfigDir / "bridging-china-w07.yaml"));
  CHECK(std::get<double>(r.get("y_c")) == 49.0);
  CHECK(std::get<bool>(r.get("upper_set")));
  CHECK(r.table("sweep").rows.size() == 101);
}

TEST_CASE("ess-hist command writes one table per scenario") {
  const auto r = cmd_ess_hist(load_config(kConfigDir / "bridging-china-w05.yaml"), {0, 50, 100});
  for (const char* name : {"prior", "posterior_y0", "posterior_y50", "posterior_y100"}) {
    const auto& t = r.table(name);
    CHECK(t.columns[0] == "bin_lo");
    CHECK(t.columns[1] == "bin_hi");
    CHECK(t.columns[2] == "mass");
    CHECK(t.rows.size() == 8);
    CHECK(std::get<double>(r.get(std::string(name) + "_max_abs_diff")) <= 1e-3);
  }
  CHECK_THROWS_AS(cmd_ess_hist(load_config(kConfigDir / "bridging-china-w03.yaml"), {0}), ConfigError);
}

TEST_CASE("JSON reports read back to identical values") {
  const auto cfg = load_config(kConfigDir / "bridging-china-w05.yaml");
  for (const auto& r : {cmd_posterior(cfg, 37.25), cmd_oc(cfg), cmd_ess_hist(cfg, {0, 100})}) {
    const auto text = to_json_text(r);
    const auto back = report_from_json_text(text);
    CHECK(back == r);
    CHECK(to_json_text(back) == text);
  }
}

TEST_CASE("CSV numbers read back to identical doubles") {
  const auto r = cmd_oc(load_config(kConfigDir / "bridging-china-w05.yaml"));
  const auto csv = table_to_csv(r.table("sweep"));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "y,success_prob,w,bayes_factor,qualifies");
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const double p = std::strtod(line.substr(c1 + 1, c2 - c1 - 1).c_str(), nullptr);
    CHECK(p == std::get<double>(r.table("sweep").rows[row][1]));
    ++row;
  }
  CHECK(row == 101);
  CHECK(format_number(0.1) == "0.10000000000000001");
}

TEST_CASE("same config, mode and seed give byte-identical files") {
  TempDir dir("bytes");
  const auto cfg_text = replace(bundled("bridging-china-w05-power"), "replicates: 100000", "replicates: 5000");
  const auto cfg = dir.write("cfg.yaml", cfg_text);
  for (const char* fmt : {"csv", "json"}) {
    const auto a = dir.path / (std::string("a-") + fmt);
    const auto b = dir.path / (std::string("b-") + fmt);
    REQUIRE(run({"validate", "--config", cfg.string(), "--format", fmt, "--out", a.string()}).code == 0);
    REQUIRE(run({"validate", "--config", cfg.string(), "--format", fmt, "--out", b.string()}).code == 0);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      ++files;
      CHECK(read_file(entry.path()) == read_file(b / entry.path().filename()));
    }
    CHECK(files > 0);
  }
  const auto c = dir.path / "c";
  REQUIRE(run({"validate", "--config", cfg.string(), "--format", "json", "--seed", "7", "--out", c.string()}).code == 0);
  CHECK(read_file(c / "validate.json") != read_file(dir.path / "a-json" / "validate.json"));
}

TEST_CASE("command-line exit codes") {
  TempDir dir("exit");
  const auto good = (kConfigDir / "bridging-china-w03.yaml").string();

  CHECK(run({"--help"}).code == 0);
  CHECK(run({}).code == kExitConfig);
  CHECK(run({"oc"}).code == kExitConfig);
  CHECK(run({"oc", "--config", good, "--mode", "fast"}).code == kExitConfig);
  CHECK(run({"oc", "--config", (dir.path / "missing.yaml").string()}).code == kExitConfig);

  const auto bad = dir.write("bad.yaml", replace(bundled("bridging-china"), "  w0: 0.5\n", "  w0: 0.5\n  bogus: 1\n"));
  const auto bad_run = run({"oc", "--config", bad.string()});
  CHECK(bad_run.code == kExitConfig);
  CHECK(bad_run.err.find("bad.yaml:") != std::string::npos);

  CHECK(run({"ess-hist", "--config", good}).code == kExitConfig);
  CHECK(run({"posterior", "--config", good, "--y-star", "1e6"}).code == kExitNumeric);

  const auto tight = dir.write("tight.yaml", replace(bundled("bridging-china-w03"), "alpha_target: 0.2", "alpha_target: 0.001"));
  CHECK(run({"calibrate", "--config", tight.string()}).code == kExitInfeasible);

  const auto ok = run({"posterior", "--config", good, "--y-star", "49", "--mode", "exact", "--format", "json"});
  REQUIRE(ok.code == kExitOk);
  const auto doc = nlohmann::json::parse(ok.out);
  CHECK(doc["command"] == "posterior");
  bool saw_mode = false;
  for (const auto& kv : doc["summary"]) {
    if (kv["key"] == "mode") {
      CHECK(kv["value"] == "exact");
      saw_mode = true;
    }
  }
  CHECK(saw_mode);
}

TEST_CASE("calibrate command reproduces the published row and flags mode disagreements") {
  const auto r = cmd_calibrate(load_config(kConfigDir / "bridging-china-w05.yaml"));
  CHECK(std::get<bool>(r.get("feasible")));
  CHECK(std::get<double>(r.get("lambda_chosen")) == 0.185);
  CHECK(std::get<double>(r.get("nu_chosen")) == 34);
  CHECK(std::get<bool>(r.get("triples_match")));
  const auto& sweep = r.table("nu_sweep");
  CHECK(sweep.columns.back() == "modes_disagree");
  std::int64_t flagged = 0;
  for (const auto& row : sweep.rows) flagged += std::get<bool>(row.back()) ? 1 : 0;
  CHECK(flagged == std::get<std::int64_t>(r.get("nu_mode_disagreements")));
}
