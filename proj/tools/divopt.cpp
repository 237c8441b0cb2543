// Copyright 2026 the divopt authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: scenario ingestion, allocation, budget sweeps,
// the two-sensor brute-force oracle, divergence bounds, and validation.
//
// Exit codes: 0 ok, 2 config error, 3 non-certified solve, 4 capability
// error.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include "divopt/allocate.hpp"
#include "divopt/config.hpp"
#include "divopt/divergence.hpp"
#include "divopt/montecarlo.hpp"
#include "divopt/report.hpp"
#include "divopt/units.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNotCertified = 3;
constexpr int kExitCapability = 4;

struct CommonFlags {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 1;
  int mc_runs = 20000;
  double pf_fc = 0.04;
  std::string solver = "auto";
  double grid_step = 0.02;
};

divopt::SolverChoice solver_choice(const std::string& name) {
  if (name == "auto") return divopt::SolverChoice::Auto;
  if (name == "waterfill") return divopt::SolverChoice::Waterfill;
  if (name == "general") return divopt::SolverChoice::General;
  throw CLI::ValidationError("--solver", "expected auto|waterfill|general");
}

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_out = true,
                bool with_mc_flags = true) {
  cmd->add_option("--config", flags.config_path, "scenario config file")->required();
  if (with_out) cmd->add_option("--out", flags.out_path, "write CSV to this path");
  if (with_mc_flags) {
    cmd->add_option("--seed", flags.seed, "Monte Carlo master seed");
    cmd->add_option("--mc-runs", flags.mc_runs, "Monte Carlo runs per estimate");
    cmd->add_option("--pf-fc", flags.pf_fc, "fusion-center false alarm target");
  }
}

void write_file_or_die(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

std::string describe_j(double j_nats) {
  return divopt::format_double(j_nats) + " nats (" +
         divopt::format_double(j_nats / std::numbers::ln2) + " bits)";
}

void print_allocation(const divopt::Scenario& scenario, const Eigen::VectorXd& p_mw) {
  for (Eigen::Index j = 0; j < p_mw.size(); ++j) {
    std::cout << "  sensor " << (j + 1) << ": " << divopt::format_double(p_mw(j)) << " mW";
    if (p_mw(j) > 0.0) std::cout << " (" << divopt::format_double(divopt::dbm_from_mw(p_mw(j)))
                                 << " dBm)";
    std::cout << "\n";
  }
  std::cout << "  total: " << divopt::format_double(p_mw.sum()) << " / "
            << divopt::format_double(scenario.p_tot_mw) << " mW budget\n";
}

int cmd_validate(const CommonFlags& flags) {
  const divopt::Scenario scenario = divopt::load_scenario(flags.config_path);
  const divopt::ValidationReport report = divopt::validate(scenario);
  if (!report.ok()) {
    std::cout << "invalid scenario:\n" << report.describe();
    return kExitConfig;
  }
  std::cout << "scenario ok: " << scenario.sensor_count() << " sensors, "
            << (scenario.channel.is_orthogonal() ? "orthogonal" : "general") << " channel, "
            << "budget " << divopt::format_double(scenario.p_tot_mw) << " mW\n";
  for (Eigen::Index j = 0; j < scenario.sensor_count(); ++j) {
    std::cout << "  sensor " << (j + 1)
              << (report.sensor_in_region_s[static_cast<size_t>(j)]
                      ? ": concavity region"
                      : ": outside concavity region (general solver required)")
              << "\n";
  }
  if (report.trivial_full_power) {
    std::cout << "  note: caps cannot reach the budget; full power is optimal\n";
  }
  return kExitOk;
}

int cmd_allocate(const CommonFlags& flags) {
  const divopt::Scenario scenario = divopt::load_scenario(flags.config_path);
  const divopt::AllocateOutcome outcome =
      divopt::allocate(scenario, solver_choice(flags.solver));

  std::cout << "solver: " << (outcome.used_waterfill ? "waterfill" : "general")
            << (outcome.certified ? "" : " (non-certified)") << "\n";
  print_allocation(scenario, outcome.allocation.p_mw);
  std::cout << "approx J: " << describe_j(outcome.objective_j) << "\n";
  std::cout << "kkt: lambda " << divopt::format_double(outcome.kkt.lambda)
            << ", max stationarity residual "
            << divopt::format_double(outcome.kkt.max_stationarity_residual())
            << ", complementarity " << divopt::format_double(outcome.kkt.complementarity_residual)
            << "\n";

  if (!flags.out_path.empty()) {
    divopt::Report report;
    divopt::ReportRow row;
    row.p_tot_dbm = divopt::dbm_from_mw(scenario.p_tot_mw);
    row.p_tot_mw = scenario.p_tot_mw;
    row.allocator = divopt::AllocatorKind::Proposed;
    row.solver = outcome.used_waterfill ? "waterfill" : "general";
    row.p_mw = outcome.allocation.p_mw;
    row.approx_j = outcome.objective_j;
    row.certified = outcome.certified;
    report.rows.push_back(std::move(row));
    std::ostringstream csv;
    divopt::write_report_csv(csv, report);
    write_file_or_die(flags.out_path, csv.str());
  }
  return outcome.certified ? kExitOk : kExitNotCertified;
}

int cmd_sweep(const CommonFlags& flags, const divopt::SweepSpec& spec, bool with_mc) {
  const divopt::Scenario scenario = divopt::load_scenario(flags.config_path);
  divopt::SweepOptions options;
  options.solver = solver_choice(flags.solver);
  options.with_mc = with_mc;
  options.mc = {flags.mc_runs, flags.seed, flags.pf_fc};

  const divopt::Report report = divopt::run_sweep(scenario, spec, options);
  std::ostringstream csv;
  divopt::write_report_csv(csv, report);
  if (!flags.out_path.empty()) {
    write_file_or_die(flags.out_path, csv.str());
    std::cout << report.rows.size() << " rows -> " << flags.out_path << "\n";
  } else {
    std::cout << csv.str();
  }
  const bool all_certified =
      std::all_of(report.rows.begin(), report.rows.end(),
                  [](const divopt::ReportRow& r) { return r.certified; });
  return all_certified ? kExitOk : kExitNotCertified;
}

int cmd_oracle(const CommonFlags& flags, const std::string& objective_name) {
  const divopt::Scenario scenario = divopt::load_scenario(flags.config_path);
  const divopt::OracleObjective objective = objective_name == "pdfc"
                                                ? divopt::OracleObjective::PdFc
                                                : divopt::OracleObjective::ApproxJ;
  std::optional<divopt::McConfig> mc;
  if (objective == divopt::OracleObjective::PdFc) {
    mc = divopt::McConfig{flags.mc_runs, flags.seed, flags.pf_fc};
  }
  const divopt::GridOracleResult result =
      divopt::grid_oracle(scenario, objective, flags.grid_step, mc);

  std::cout << "grid points: " << result.surface.size() << "\n";
  std::cout << "best: p1 " << divopt::format_double(result.best.p_mw(0)) << " mW, p2 "
            << divopt::format_double(result.best.p_mw(1)) << " mW, value "
            << divopt::format_double(result.best_value) << "\n";
  if (!flags.out_path.empty()) {
    std::ostringstream csv;
    divopt::write_surface_csv(csv, result.surface);
    write_file_or_die(flags.out_path, csv.str());
  }
  return kExitOk;
}

int cmd_bounds(const CommonFlags& flags, double prior0, bool with_mc) {
  const divopt::Scenario scenario = divopt::load_scenario(flags.config_path);
  divopt::require_valid(scenario);
  const double prior1 = 1.0 - prior0;

  const double j_u = divopt::bernoulli_j_upper_bound(scenario.sensors);
  std::cout << "J(u) upper bound: " << describe_j(j_u) << "\n";
  std::cout << "  P_e lower bound: "
            << divopt::format_double(divopt::pe_lower_bound(j_u, prior0, prior1)) << "\n";

  const divopt::AllocateOutcome outcome = divopt::allocate(scenario, solver_choice(flags.solver));
  std::cout << "approx J(y) at proposed allocation: " << describe_j(outcome.objective_j) << "\n";
  std::cout << "  P_e lower bound: "
            << divopt::format_double(
                   divopt::pe_lower_bound(std::max(0.0, outcome.objective_j), prior0, prior1))
            << "\n";

  if (with_mc) {
    const divopt::McConfig mc{flags.mc_runs, flags.seed, flags.pf_fc};
    const divopt::McEstimate j_mc =
        divopt::estimate_j_mc(scenario, outcome.allocation, mc);
    std::cout << "MC J(y) at proposed allocation: " << divopt::format_double(j_mc.value)
              << " +- " << divopt::format_double(j_mc.std_error) << " nats ("
              << j_mc.n_runs << " runs, seed " << j_mc.seed << ")\n";
    std::cout << "  P_e lower bound: "
              << divopt::format_double(
                     divopt::pe_lower_bound(std::max(0.0, j_mc.value), prior0, prior1))
              << "\n";
  }
  return outcome.certified ? kExitOk : kExitNotCertified;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"J-divergence optimal transmit power allocation for distributed detection"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* validate = app.add_subcommand("validate", "check a scenario config");
  add_common(validate, flags, false, false);

  auto* alloc = app.add_subcommand("allocate", "compute the proposed power allocation");
  add_common(alloc, flags, true, false);
  alloc->add_option("--solver", flags.solver, "auto|waterfill|general");

  auto* sweep = app.add_subcommand("sweep", "allocations across a budget range");
  add_common(sweep, flags);
  sweep->add_option("--solver", flags.solver, "auto|waterfill|general");
  divopt::SweepSpec spec;
  sweep->add_option("--start-dbm", spec.p_tot_start_dbm, "first budget, dBm")->required();
  sweep->add_option("--stop-dbm", spec.p_tot_stop_dbm, "last budget, dBm")->required();
  sweep->add_option("--points", spec.n_points, "number of budgets")->required();
  std::vector<std::string> allocator_names{"proposed", "equal", "equal_snr"};
  sweep->add_option("--allocators", allocator_names, "subset of proposed,equal,equal_snr")
      ->delimiter(',');
  bool sweep_mc = false;
  sweep->add_flag("--mc", sweep_mc, "append Monte Carlo detection probability columns");

  auto* oracle = app.add_subcommand("oracle", "two-sensor brute-force surface");
  add_common(oracle, flags);
  std::string objective_name = "approxj";
  oracle->add_option("--objective", objective_name, "approxj|pdfc");
  auto* grid_opt =
      oracle->add_option("--grid-step", flags.grid_step,
                         "grid spacing, mW (default 0.02 for approxj, 0.1 for pdfc)");

  auto* bounds = app.add_subcommand("bounds", "divergence bounds and P_e lower bounds");
  add_common(bounds, flags);
  bounds->add_option("--solver", flags.solver, "auto|waterfill|general");
  double prior0 = 0.5;
  bounds->add_option("--prior0", prior0, "prior probability of H0");
  bool bounds_mc = false;
  bounds->add_flag("--mc", bounds_mc, "also estimate J(y) by Monte Carlo");

  CLI11_PARSE(app, argc, argv);

  try {
    if (flags.mc_runs < 1000) {
      throw divopt::ConfigError(0, "--mc-runs", "reported estimates need at least 1000 runs");
    }
    if (app.got_subcommand(validate)) return cmd_validate(flags);
    if (app.got_subcommand(alloc)) return cmd_allocate(flags);
    if (app.got_subcommand(sweep)) {
      spec.allocators.clear();
      for (const std::string& name : allocator_names) {
        if (name == "proposed") spec.allocators.push_back(divopt::AllocatorKind::Proposed);
        else if (name == "equal") spec.allocators.push_back(divopt::AllocatorKind::Equal);
        else if (name == "equal_snr") spec.allocators.push_back(divopt::AllocatorKind::EqualSnr);
        else throw divopt::ConfigError(0, "--allocators", "unknown allocator '" + name + "'");
      }
      return cmd_sweep(flags, spec, sweep_mc);
    }
    if (app.got_subcommand(oracle)) {
      if (objective_name != "approxj" && objective_name != "pdfc") {
        throw divopt::ConfigError(0, "--objective", "expected approxj|pdfc");
      }
      if (grid_opt->count() == 0 && objective_name == "pdfc") {
        flags.grid_step = 0.1;  // Monte Carlo per grid point; keep the cost bounded
      }
      return cmd_oracle(flags, objective_name);
    }
    if (app.got_subcommand(bounds)) return cmd_bounds(flags, prior0, bounds_mc);
  } catch (const divopt::CapabilityError& e) {
    std::cerr << "capability error: " << e.what() << "\n";
    return kExitCapability;
  } catch (const divopt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    // e.g. forcing the waterfilling solver outside its concavity region
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
