#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "minimax_lb/cli.hpp"
#include "minimax_lb/config.hpp"

using namespace minimax_lb;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path = fs::temp_directory_path() / fs::path("minimax_lb_test_" + std::to_string(stamp) + "_" +
                                                std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"minimax-lb"};
  storage.insert(storage.end(), args);
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  return cli::run_main(static_cast<int>(argv.size()), argv.data());
}

std::string spec_config_text(const InstanceSpec& spec) {
  char buf[512];
  if (spec.sigma) {
    std::snprintf(buf, sizeof buf,
                  "L = %.17g\nmu = %.17g\nDelta = %.17g\neps = %.17g\nsigma = %.17g\n"
                  "R1 = %.17g\nR2 = %.17g\nvariant = stochastic\n",
                  spec.L, spec.mu, spec.Delta, spec.eps, *spec.sigma, spec.R1, spec.R2);
  } else {
    std::snprintf(buf, sizeof buf,
                  "L = %.17g\nmu = %.17g\nDelta = %.17g\neps = %.17g\nvariant = deterministic\n",
                  spec.L, spec.mu, spec.Delta, spec.eps);
  }
  return buf;
}

}  // namespace

TEST_CASE("key-value parsing", "[harness]") {
  std::istringstream in(
      "# comment line\n"
      "L = 1.5\n"
      "  name =  hello world \n"
      "grid = 1, 2.5, 1e3\n"
      "\n"
      "flag=0\n");
  const KeyValueConfig cfg = KeyValueConfig::parse(in, "test");
  CHECK(cfg.number("L") == 1.5);
  CHECK(cfg.text("name") == "hello world");
  CHECK(cfg.list("grid") == std::vector<double>{1.0, 2.5, 1000.0});
  CHECK(cfg.integer("flag") == 0);
  CHECK(cfg.number("missing", 7.0) == 7.0);
  CHECK_THROWS_AS(cfg.number("missing"), ConfigError);
  CHECK_THROWS_AS(cfg.number("name"), ConfigError);

  std::istringstream bad("key value\n");
  CHECK_THROWS_AS(KeyValueConfig::parse(bad, "bad"), ConfigError);
}

TEST_CASE("instance spec from config validates variant consistency", "[harness]") {
  std::istringstream det("L = 1\nmu = 0.001\nDelta = 700\neps = 0.1\nvariant = stochastic\n");
  CHECK_THROWS_AS(instance_spec_from_config(KeyValueConfig::parse(det)), ConfigError);
  std::istringstream mix(
      "L = 1\nmu = 0.001\nDelta = 700\neps = 0.1\nsigma = 100\nvariant = deterministic\n");
  CHECK_THROWS_AS(instance_spec_from_config(KeyValueConfig::parse(mix)), ConfigError);
  std::istringstream ok("L = 1\nmu = 0.001\nDelta = 700\neps = 0.1\nsigma = 100\n");
  const InstanceSpec spec = instance_spec_from_config(KeyValueConfig::parse(ok));
  CHECK(spec.variant() == InstanceVariant::Stochastic);
}

TEST_CASE("metadata round trip reproduces derived constants exactly", "[harness]") {
  for (auto variant : {InstanceVariant::Deterministic, InstanceVariant::Stochastic}) {
    const InstanceSpec spec =
        variant == InstanceVariant::Deterministic
            ? spec_for_regime(variant, 12, 4)
            : spec_for_regime(variant, 10, 4, 0.1, 1.0, 5000.0);
    const ScaledInstance inst = build_scaled(spec);
    const nlohmann::json meta = metadata_json(inst.spec(), inst.derived());
    const InstanceSpec back = instance_spec_from_metadata(meta);
    const ScaledInstance rebuilt = build_scaled(back);
    CHECK(rebuilt.derived().n == inst.derived().n);
    CHECK(rebuilt.derived().T == inst.derived().T);
    CHECK(rebuilt.derived().lambda == inst.derived().lambda);
    CHECK(rebuilt.derived().ell0 == inst.derived().ell0);
    CHECK(rebuilt.derived().ellm == inst.derived().ellm);
    CHECK(rebuilt.derived().p == inst.derived().p);
    CHECK(rebuilt.derived().hm.a1 == inst.derived().hm.a1);
    CHECK(rebuilt.derived().hm.C == inst.derived().hm.C);
  }
}

TEST_CASE("cli build prints metadata and maps failures to exit codes", "[harness]") {
  TempDir tmp;
  const InstanceSpec spec = spec_for_regime(InstanceVariant::Deterministic, 12, 4);
  const std::string cfg = tmp.file("det.cfg");
  write_file(cfg, spec_config_text(spec));
  const std::string out = tmp.file("meta.json");
  CHECK(run_cli({"build", cfg, "--output", out}) == cli::kExitOk);
  const nlohmann::json meta = nlohmann::json::parse(read_file(out));
  CHECK(meta["derived"]["n"] == 12);
  CHECK(meta["derived"]["T"] == 4);
  CHECK(meta["parameters"]["variant"] == "deterministic");

  // kappa = 1: regime failure -> exit 1
  const std::string bad = tmp.file("bad.cfg");
  write_file(bad, "L = 1\nmu = 1\nDelta = 700\neps = 0.1\n");
  CHECK(run_cli({"build", bad}) == cli::kExitFailure);

  // malformed config -> usage error
  const std::string ugly = tmp.file("ugly.cfg");
  write_file(ugly, "L == 1\n");
  CHECK(run_cli({"build", ugly}) == cli::kExitUsage);
  CHECK(run_cli({"build", tmp.file("absent.cfg")}) == cli::kExitUsage);
  CHECK(run_cli({"no-such-command"}) == cli::kExitUsage);
}

TEST_CASE("cli run produces csv and trajectories", "[harness]") {
  TempDir tmp;
  const InstanceSpec spec = spec_for_regime(InstanceVariant::Deterministic, 12, 4);
  std::string cfg_text = spec_config_text(spec);
  cfg_text += "algorithm = gda\nbudget = 20\nreplicas = 2\nseed = 7\noutput = " +
              tmp.file("run") + "\n";
  const std::string cfg = tmp.file("run.cfg");
  write_file(cfg, cfg_text);
  REQUIRE(run_cli({"run", cfg}) == cli::kExitOk);

  const std::string csv = read_file(tmp.file("run.csv"));
  CHECK(csv.rfind("kappa,eps,sigma,p,n,T,budget,first_discovery_complete,first_eps_stationary,"
                  "replica,seed",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 replicas

  const std::string jsonl = read_file(tmp.file("run.trajectory.jsonl"));
  CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 40);  // 2 replicas x 20 calls
  std::istringstream lines(jsonl);
  std::string line;
  REQUIRE(std::getline(lines, line));
  const nlohmann::json first = nlohmann::json::parse(line);
  CHECK(first["t"] == 1);
  CHECK(first["fm_stationarity"].get<double>() > spec.eps);
}

TEST_CASE("cli sweep emits rows, summary, and is reproducible", "[harness]") {
  TempDir tmp;
  const InstanceSpec s12 = spec_for_regime(InstanceVariant::Deterministic, 12, 4);
  const InstanceSpec s24 = spec_for_regime(InstanceVariant::Deterministic, 24, 4);
  char grid[256];
  std::snprintf(grid, sizeof grid, "kappa_grid = %.17g, %.17g\n", s12.L / s12.mu,
                s24.L / s24.mu);
  const std::string base = std::string("L = 1\nDelta = ") + std::to_string(s12.Delta) +
                           "\neps_grid = 0.1\n" + grid +
                           "algorithm = greedy-fill\nreplicas = 2\nseed = 11\nbudget = 25\n";
  write_file(tmp.file("sweep.cfg"), base + "output = " + tmp.file("a") + "\n");
  write_file(tmp.file("sweep2.cfg"), base + "output = " + tmp.file("b") + "\n");
  REQUIRE(run_cli({"sweep", tmp.file("sweep.cfg")}) == cli::kExitOk);
  REQUIRE(run_cli({"sweep", tmp.file("sweep2.cfg")}) == cli::kExitOk);

  const std::string csv_a = read_file(tmp.file("a.csv"));
  CHECK(std::count(csv_a.begin(), csv_a.end(), '\n') == 5);  // header + 2 cells x 2 replicas
  CHECK(csv_a == read_file(tmp.file("b.csv")));              // bit-for-bit reproducible

  const nlohmann::json summary = nlohmann::json::parse(read_file(tmp.file("a.summary.json")));
  CHECK(summary["no_run_beat_bound"] == true);
  // doubling n at fixed T doubles the witness budget: slope vs kappa is 1/2
  const double slope = summary["witness_fit"]["slope_kappa"].get<double>();
  CHECK(slope > 0.35);
  CHECK(slope < 0.65);
  CHECK(summary["witness_fit"]["slope_eps"].is_null());  // single-eps grid
}

TEST_CASE("cli verify-lemmas runs at reduced scale", "[harness]") {
  TempDir tmp;
  const std::string out = tmp.file("report.json");
  CHECK(run_cli({"verify-lemmas", "--samples", "0.002", "--seed", "5", "--output", out}) ==
        cli::kExitOk);
  const nlohmann::json report = nlohmann::json::parse(read_file(out));
  CHECK(report["all_pass"] == true);
  CHECK(report["entries"].size() == 10);
}
