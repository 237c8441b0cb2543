// Copyright 2026 the divopt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "divopt/allocate.hpp"
#include "divopt/montecarlo.hpp"
#include "divopt/scenario.hpp"

namespace divopt {

enum class AllocatorKind { Proposed, Equal, EqualSnr };

const char* allocator_name(AllocatorKind kind);

/// Budget sweep request: n_points budgets spaced evenly in dBm, each run
/// through the selected allocators.
struct SweepSpec {
  double p_tot_start_dbm = 0.0;
  double p_tot_stop_dbm = 0.0;
  int n_points = 0;
  std::vector<AllocatorKind> allocators{AllocatorKind::Proposed, AllocatorKind::Equal,
                                        AllocatorKind::EqualSnr};
};

struct ReportRow {
  double p_tot_dbm = 0.0;
  double p_tot_mw = 0.0;
  AllocatorKind allocator = AllocatorKind::Proposed;
  std::string solver;  // "waterfill" | "general" | "baseline"
  Eigen::VectorXd p_mw;
  double approx_j = 0.0;  // Gaussian-approximated J, nats
  bool certified = true;
  std::optional<McEstimate> pd_fc;
};

struct Report {
  std::vector<ReportRow> rows;  // sorted by (p_tot, allocator)
};

struct SweepOptions {
  SolverChoice solver = SolverChoice::Auto;
  bool with_mc = false;
  McConfig mc{};
};

/// Runs every (budget, allocator) pair of the sweep. Every emitted row is
/// re-validated against the allocation invariants.
Report run_sweep(const Scenario& scenario, const SweepSpec& spec, const SweepOptions& options);

/// Locale-independent shortest-round-trip formatting; keeps CSV output
/// byte-identical for identical inputs.
std::string format_double(double value);

void write_report_csv(std::ostream& os, const Report& report);

void write_surface_csv(std::ostream& os, const std::vector<GridPoint>& surface);

}  // namespace divopt
