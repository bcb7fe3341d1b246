#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "minimax_lb/algorithms.hpp"
#include "minimax_lb/config.hpp"
#include "minimax_lb/instances.hpp"
#include "minimax_lb/oracles.hpp"
#include "minimax_lb/rng.hpp"
#include "minimax_lb/verify.hpp"

namespace minimax_lb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // verification or regime failure
inline constexpr int kExitUsage = 2;    // bad invocation or config

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct SummaryRow {
  double kappa = 0, eps = 0;
  std::optional<double> sigma;
  double p = 1.0;
  int n = 0, T = 0;
  long budget = 0;
  long first_discovery_complete = -1;
  long first_eps_stationary = -1;
  int replica = 0;
  std::uint64_t seed = 0;
  double min_stationarity = kInf;
  long discovered = 0;
};

inline const char* kCsvHeader =
    "kappa,eps,sigma,p,n,T,budget,first_discovery_complete,first_eps_stationary,replica,seed";

inline std::string csv_line(const SummaryRow& r) {
  std::ostringstream os;
  os << fmt_double(r.kappa) << ',' << fmt_double(r.eps) << ','
     << (r.sigma ? fmt_double(*r.sigma) : std::string{}) << ',' << fmt_double(r.p) << ',' << r.n
     << ',' << r.T << ',' << r.budget << ',' << r.first_discovery_complete << ','
     << r.first_eps_stationary << ',' << r.replica << ',' << r.seed;
  return os.str();
}

inline long default_budget(const ScaledInstance& inst, double p) {
  const long witness = static_cast<long>(inst.derived().n) * (inst.derived().T - 1);
  if (!inst.boxed() || p >= 1.0) return witness;
  return static_cast<long>(std::ceil((witness - std::log(2.0)) / (2.0 * p)));
}

struct ReplicaResult {
  SummaryRow row;
  std::vector<IterationLog> iterations;
};

inline ReplicaResult run_replica(const ScaledInstance& inst, const ExperimentConfig& ec,
                                 int replica, long budget, bool record_iterations) {
  const std::uint64_t oracle_seed = derive_seed(ec.seed, 0x0ac13eULL, replica);
  const std::uint64_t alg_seed = derive_seed(ec.seed, 0xa16ULL, replica);
  auto alg = make_algorithm(ec.algorithm, inst, ec.eta_x, ec.eta_y);
  const RunOptions opt{budget, alg_seed, record_iterations};

  TrajectoryRecord rec;
  double p_used = 1.0;
  if (inst.boxed()) {
    const double p = ec.p_override > 0.0 ? ec.p_override : inst.derived().p;
    p_used = p;
    StochasticOracle oracle(inst,
                            StochasticOracleConfig{p, oracle_seed, inst.derived().grad_inf_bound});
    rec = run_zero_respecting(*alg, inst, oracle, opt);
  } else {
    auto oracle = [&inst](const ChainPoint& v) { return deterministic_oracle(inst, v); };
    rec = run_zero_respecting(*alg, inst, oracle, opt);
  }

  ReplicaResult out;
  out.row.kappa = inst.derived().kappa;
  out.row.eps = inst.spec().eps;
  out.row.sigma = inst.spec().sigma;
  out.row.p = p_used;
  out.row.n = inst.derived().n;
  out.row.T = inst.derived().T;
  out.row.budget = budget;
  out.row.first_discovery_complete = rec.first_chain_complete;
  out.row.first_eps_stationary = rec.first_eps_stationary;
  out.row.replica = replica;
  out.row.seed = oracle_seed;
  out.row.min_stationarity = rec.min_fm_stationarity;
  out.row.discovered = rec.discovered_count();
  out.iterations = std::move(rec.iterations);
  return out;
}

// Least squares with intercept over the varying regressors; slopes for
// constant regressors are omitted.
struct WitnessFit {
  std::optional<double> slope_kappa;
  std::optional<double> slope_eps;
  std::optional<double> slope_sigma;
};

inline WitnessFit fit_witness_slopes(const std::vector<std::array<double, 3>>& logs,
                                     const std::vector<double>& y) {
  WitnessFit fit;
  if (logs.size() < 2) return fit;
  std::vector<int> active;
  for (int c = 0; c < 3; ++c) {
    double lo = kInf, hi = -kInf;
    for (const auto& r : logs) {
      lo = std::min(lo, r[c]);
      hi = std::max(hi, r[c]);
    }
    if (std::isfinite(lo) && hi - lo > 1e-12) active.push_back(c);
  }
  const int d = static_cast<int>(active.size()) + 1;
  std::vector<std::vector<double>> ata(d, std::vector<double>(d, 0.0));
  std::vector<double> atb(d, 0.0);
  for (std::size_t r = 0; r < logs.size(); ++r) {
    std::vector<double> row(d, 1.0);
    for (int c = 0; c < d - 1; ++c) row[c + 1] = logs[r][active[c]];
    for (int i = 0; i < d; ++i) {
      atb[i] += row[i] * y[r];
      for (int j = 0; j < d; ++j) ata[i][j] += row[i] * row[j];
    }
  }
  // small dense solve with partial pivoting
  for (int col = 0; col < d; ++col) {
    int piv = col;
    for (int r = col + 1; r < d; ++r)
      if (std::abs(ata[r][col]) > std::abs(ata[piv][col])) piv = r;
    std::swap(ata[col], ata[piv]);
    std::swap(atb[col], atb[piv]);
    if (std::abs(ata[col][col]) < 1e-14) return fit;  // singular; leave slopes empty
    for (int r = col + 1; r < d; ++r) {
      const double f = ata[r][col] / ata[col][col];
      for (int c2 = col; c2 < d; ++c2) ata[r][c2] -= f * ata[col][c2];
      atb[r] -= f * atb[col];
    }
  }
  std::vector<double> beta(d);
  for (int r = d - 1; r >= 0; --r) {
    double s = atb[r];
    for (int c2 = r + 1; c2 < d; ++c2) s -= ata[r][c2] * beta[c2];
    beta[r] = s / ata[r][r];
  }
  for (int c = 0; c < d - 1; ++c) {
    if (active[c] == 0) fit.slope_kappa = beta[c + 1];
    if (active[c] == 1) fit.slope_eps = beta[c + 1];
    if (active[c] == 2) fit.slope_sigma = beta[c + 1];
  }
  return fit;
}

template <class Task>
void run_parallel(int workers, long tasks, Task&& task) {
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = static_cast<int>(std::max<long>(1, std::min<long>(workers, tasks)));
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&]() {
      for (long t = next.fetch_add(1); t < tasks; t = next.fetch_add(1)) task(t);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

// --- build ------------------------------------------------------------------

inline int cmd_build(const std::string& config_path, const std::string& output) {
  const KeyValueConfig cfg = KeyValueConfig::parse_file(config_path);
  const InstanceSpec spec = instance_spec_from_config(cfg);
  const ScaledInstance inst = build_scaled(spec);
  const nlohmann::json meta = metadata_json(inst.spec(), inst.derived());
  if (!output.empty()) {
    std::ofstream out(output);
    if (!out) throw ConfigError("cannot open output file: " + output);
    out << meta.dump(2) << '\n';
  }
  std::cout << meta.dump(2) << std::endl;
  return kExitOk;
}

// --- verify-lemmas -----------------------------------------------------------

inline int cmd_verify_lemmas(double sample_scale, std::uint64_t seed, const std::string& output) {
  VerifyOptions opt;
  opt.sample_scale = sample_scale;
  opt.seed = seed;
  const VerificationReport report = verify_all_lemmas(opt);
  nlohmann::json j;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : report.entries) {
    std::fprintf(stderr, "[%s] %-9s margin=%+.6g samples=%ld time=%.2fs  %s\n",
                 e.pass ? "PASS" : "FAIL", e.id.c_str(), e.worst_margin, e.samples, e.seconds,
                 e.statement.c_str());
    j["entries"].push_back({{"id", e.id},
                            {"statement", e.statement},
                            {"samples", e.samples},
                            {"worst_margin", e.worst_margin},
                            {"pass", e.pass},
                            {"seconds", e.seconds}});
  }
  j["all_pass"] = report.all_pass();
  if (!output.empty()) {
    std::ofstream out(output);
    if (!out) throw ConfigError("cannot open output file: " + output);
    out << j.dump(2) << '\n';
  } else {
    std::cout << j.dump(2) << std::endl;
  }
  return report.all_pass() ? kExitOk : kExitFailure;
}

// --- run ----------------------------------------------------------------------

inline int cmd_run(const std::string& config_path) {
  const KeyValueConfig cfg = KeyValueConfig::parse_file(config_path);
  const ExperimentConfig ec = experiment_from_config(cfg);
  const ScaledInstance inst = build_scaled(ec.spec);
  const double p_used =
      inst.boxed() ? (ec.p_override > 0.0 ? ec.p_override : inst.derived().p) : 1.0;
  const long budget = ec.budget > 0 ? ec.budget : detail::default_budget(inst, p_used);

  std::vector<detail::ReplicaResult> results(ec.replicas);
  detail::run_parallel(ec.workers, ec.replicas, [&](long r) {
    results[r] = detail::run_replica(inst, ec, static_cast<int>(r), budget, ec.record_iterations);
  });

  {
    std::ofstream meta(ec.output_prefix + ".meta.json");
    meta << metadata_json(inst.spec(), inst.derived()).dump(2) << '\n';
  }
  {
    std::ofstream csv(ec.output_prefix + ".csv");
    csv << detail::kCsvHeader << '\n';
    for (const auto& res : results) csv << detail::csv_line(res.row) << '\n';
  }
  if (ec.record_iterations) {
    std::ofstream jsonl(ec.output_prefix + ".trajectory.jsonl");
    for (const auto& res : results)
      for (const auto& it : res.iterations) {
        nlohmann::json line = {{"replica", res.row.replica},
                               {"t", it.t},
                               {"fm_stationarity", it.fm_stationarity},
                               {"fm_value", it.fm_value},
                               {"discovered", it.discovered}};
        jsonl << line.dump() << '\n';
      }
  }
  std::cout << "ran " << ec.replicas << " replica(s) of " << ec.algorithm << " for " << budget
            << " oracle calls; outputs at " << ec.output_prefix << ".{csv,meta.json"
            << (ec.record_iterations ? ",trajectory.jsonl}" : "}") << std::endl;
  return kExitOk;
}

// --- sweep ---------------------------------------------------------------------

inline int cmd_sweep(const std::string& config_path) {
  const KeyValueConfig cfg = KeyValueConfig::parse_file(config_path);
  const SweepConfig sc = sweep_from_config(cfg);

  struct Cell {
    InstanceSpec spec;
    std::optional<ScaledInstance> inst;
    double p_used = 1.0;
    long budget = 0;
    long witness = 0;
  };
  std::vector<Cell> cells;
  for (double kappa : sc.kappa_grid)
    for (double eps : sc.eps_grid) {
      if (sc.sigma_grid.empty()) {
        Cell c;
        c.spec = InstanceSpec{sc.L, sc.L / kappa, sc.Delta, eps, std::nullopt, sc.R1, sc.R2};
        cells.push_back(std::move(c));
      } else {
        for (double sigma : sc.sigma_grid) {
          Cell c;
          c.spec = InstanceSpec{sc.L, sc.L / kappa, sc.Delta, eps, sigma, sc.R1, sc.R2};
          cells.push_back(std::move(c));
        }
      }
    }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    try {
      cells[i].inst = build_scaled(cells[i].spec);
    } catch (const RegimeError& e) {
      throw RegimeError("sweep cell " + std::to_string(i) + " (kappa=" +
                        detail::fmt_double(sc.L / cells[i].spec.mu) + ", eps=" +
                        detail::fmt_double(cells[i].spec.eps) + "): " + e.what());
    }
    const ScaledInstance& inst = *cells[i].inst;
    cells[i].p_used = inst.boxed() ? inst.derived().p : 1.0;
    cells[i].witness = static_cast<long>(inst.derived().n) * (inst.derived().T - 1);
    cells[i].budget = sc.budget > 0 ? sc.budget : detail::default_budget(inst, cells[i].p_used);
  }

  const long tasks = static_cast<long>(cells.size()) * sc.replicas;
  std::vector<detail::SummaryRow> rows(tasks);
  detail::run_parallel(sc.workers, tasks, [&](long t) {
    const long ci = t / sc.replicas;
    const int replica = static_cast<int>(t % sc.replicas);
    const Cell& cell = cells[ci];
    ExperimentConfig ec;
    ec.spec = cell.spec;
    ec.algorithm = sc.algorithm;
    ec.eta_x = sc.eta_x;
    ec.eta_y = sc.eta_y;
    ec.seed = derive_seed(sc.seed, ci + 1);
    rows[t] = detail::run_replica(*cell.inst, ec, replica, cell.budget, false).row;
  });

  std::ofstream csv(sc.output_prefix + ".csv");
  csv << detail::kCsvHeader << '\n';
  for (const auto& row : rows) csv << detail::csv_line(row) << '\n';

  std::ofstream jsonl(sc.output_prefix + ".summary.jsonl");
  for (const auto& row : rows) {
    nlohmann::json line = {{"kappa", row.kappa},
                           {"eps", row.eps},
                           {"p", row.p},
                           {"n", row.n},
                           {"T", row.T},
                           {"budget", row.budget},
                           {"first_discovery_complete", row.first_discovery_complete},
                           {"first_eps_stationary", row.first_eps_stationary},
                           {"replica", row.replica},
                           {"seed", row.seed},
                           {"min_stationarity", row.min_stationarity},
                           {"discovered", row.discovered}};
    if (row.sigma) line["sigma"] = *row.sigma;
    jsonl << line.dump() << '\n';
  }

  // Witness-budget scaling fit and the one-sided bound check.  The exponents
  // of the witness horizon are 1/2 in kappa and -2 in eps for the
  // deterministic recipe; 1/3 in kappa, -4 in eps, +2 in sigma for the
  // stochastic one.
  const bool stochastic = !sc.sigma_grid.empty();
  std::vector<std::array<double, 3>> logs;
  std::vector<double> ys;
  for (const auto& cell : cells) {
    const ScaledInstance& inst = *cell.inst;
    const double witness_time =
        stochastic ? (cell.witness - std::log(2.0)) / (2.0 * cell.p_used)
                   : static_cast<double>(cell.witness);
    logs.push_back({std::log(inst.derived().kappa), std::log(inst.spec().eps),
                    inst.spec().sigma ? std::log(*inst.spec().sigma) : 0.0});
    ys.push_back(std::log(witness_time));
  }
  const detail::WitnessFit fit = detail::fit_witness_slopes(logs, ys);

  bool no_run_beat_bound = true;
  nlohmann::json cell_checks = nlohmann::json::array();
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const Cell& cell = cells[ci];
    long completed_early = 0, stationary_early = 0;
    const double t_star = (cell.witness - std::log(2.0)) / (2.0 * cell.p_used);
    for (int r = 0; r < sc.replicas; ++r) {
      const auto& row = rows[ci * sc.replicas + r];
      if (!stochastic) {
        if (row.first_eps_stationary >= 0 && row.first_eps_stationary <= cell.witness)
          ++stationary_early;
      } else {
        if (row.first_discovery_complete >= 0 && row.first_discovery_complete <= t_star)
          ++completed_early;
      }
    }
    bool ok = true;
    if (!stochastic) {
      ok = stationary_early == 0;
    } else {
      const double frac = static_cast<double>(completed_early) / sc.replicas;
      ok = frac <= 0.5 + 3.0 * std::sqrt(0.25 / sc.replicas);
    }
    no_run_beat_bound = no_run_beat_bound && ok;
    cell_checks.push_back({{"cell", ci},
                           {"kappa", cells[ci].inst->derived().kappa},
                           {"eps", cells[ci].spec.eps},
                           {"witness", cell.witness},
                           {"bound_respected", ok}});
  }

  nlohmann::json summary;
  summary["cells"] = nlohmann::json::array();
  for (const auto& cell : cells)
    summary["cells"].push_back(metadata_json(cell.spec, cell.inst->derived()));
  summary["witness_fit"] = {
      {"slope_kappa", fit.slope_kappa ? nlohmann::json(*fit.slope_kappa) : nlohmann::json()},
      {"slope_eps", fit.slope_eps ? nlohmann::json(*fit.slope_eps) : nlohmann::json()},
      {"slope_sigma", fit.slope_sigma ? nlohmann::json(*fit.slope_sigma) : nlohmann::json()},
      {"theory_kappa", stochastic ? 1.0 / 3.0 : 0.5},
      {"theory_eps", stochastic ? -4.0 : -2.0},
      {"theory_sigma", stochastic ? 2.0 : 0.0},
  };
  summary["bound_checks"] = cell_checks;
  summary["no_run_beat_bound"] = no_run_beat_bound;
  std::ofstream sum(sc.output_prefix + ".summary.json");
  sum << summary.dump(2) << '\n';

  std::cout << "swept " << cells.size() << " cell(s) x " << sc.replicas
            << " replica(s); no_run_beat_bound=" << (no_run_beat_bound ? "true" : "false")
            << "; outputs at " << sc.output_prefix << ".{csv,summary.jsonl,summary.json}"
            << std::endl;
  return kExitOk;
}

// --- entry point -----------------------------------------------------------------

inline int run_main(int argc, const char* const* argv) {
  CLI::App app{"worst-case instance testbed for nonconvex-strongly-concave min-max optimization"};
  app.require_subcommand(1);

  std::string config_path, output;
  double sample_scale = 1.0;
  std::uint64_t seed = 20260808;

  auto* build = app.add_subcommand("build", "derive and print instance constants from a config");
  build->add_option("config", config_path, "key = value config file")->required();
  build->add_option("--output", output, "also write the metadata JSON here");

  auto* verify = app.add_subcommand("verify-lemmas", "run the sampled verification battery");
  verify->add_option("--samples", sample_scale, "scale factor on every sample count");
  verify->add_option("--seed", seed, "sampling seed");
  verify->add_option("--output", output, "write the JSON report here instead of stdout");

  auto* run = app.add_subcommand("run", "run algorithm replicas against one instance");
  run->add_option("config", config_path, "key = value config file")->required();

  auto* sweep = app.add_subcommand("sweep", "run a (kappa, eps, sigma) grid");
  sweep->add_option("config", config_path, "key = value config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (build->parsed()) return cmd_build(config_path, output);
    if (verify->parsed()) return cmd_verify_lemmas(sample_scale, seed, output);
    if (run->parsed()) return cmd_run(config_path);
    if (sweep->parsed()) return cmd_sweep(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitUsage;
  } catch (const RegimeError& e) {
    std::cerr << "regime error: " << e.what() << std::endl;
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace minimax_lb::cli
