// Copyright 2026 the divopt authors
// SPDX-License-Identifier: Apache-2.0

#include "divopt/report.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>
#include <stdexcept>

#include "divopt/divergence.hpp"
#include "divopt/units.hpp"

namespace divopt {

const char* allocator_name(AllocatorKind kind) {
  switch (kind) {
    case AllocatorKind::Proposed:
      return "proposed";
    case AllocatorKind::Equal:
      return "equal";
    case AllocatorKind::EqualSnr:
      return "equal_snr";
  }
  return "?";
}

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

Report run_sweep(const Scenario& scenario, const SweepSpec& spec, const SweepOptions& options) {
  if (!(spec.p_tot_start_dbm < spec.p_tot_stop_dbm)) {
    throw std::invalid_argument("run_sweep: requires start < stop");
  }
  if (spec.n_points < 2) throw std::invalid_argument("run_sweep: requires n_points >= 2");
  if (spec.allocators.empty()) throw std::invalid_argument("run_sweep: no allocators selected");

  Report report;
  for (int i = 0; i < spec.n_points; ++i) {
    const double dbm = spec.p_tot_start_dbm + (spec.p_tot_stop_dbm - spec.p_tot_start_dbm) * i /
                                                  (spec.n_points - 1);
    Scenario point = scenario;
    point.p_tot_mw = mw_from_dbm(dbm);

    for (const AllocatorKind kind : {AllocatorKind::Proposed, AllocatorKind::Equal,
                                     AllocatorKind::EqualSnr}) {
      if (std::find(spec.allocators.begin(), spec.allocators.end(), kind) ==
          spec.allocators.end()) {
        continue;
      }
      ReportRow row;
      row.p_tot_dbm = dbm;
      row.p_tot_mw = point.p_tot_mw;
      row.allocator = kind;
      switch (kind) {
        case AllocatorKind::Proposed: {
          const AllocateOutcome outcome = allocate(point, options.solver);
          row.p_mw = outcome.allocation.p_mw;
          row.solver = outcome.used_waterfill ? "waterfill" : "general";
          row.certified = outcome.certified;
          break;
        }
        case AllocatorKind::Equal:
          row.p_mw = equal_allocation(point).p_mw;
          row.solver = "baseline";
          break;
        case AllocatorKind::EqualSnr:
          row.p_mw = equal_snr_allocation(point).p_mw;
          row.solver = "baseline";
          break;
      }
      check_allocation(point, Allocation{row.p_mw}, 1e-6);
      row.approx_j = j_gaussian_mimo(point, Allocation{row.p_mw});
      if (options.with_mc) {
        row.pd_fc = estimate_pd_fc(point, Allocation{row.p_mw}, options.mc);
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

void write_report_csv(std::ostream& os, const Report& report) {
  if (report.rows.empty()) {
    os << "p_tot_dbm,p_tot_mw,allocator,solver,approx_j_nats\n";
    return;
  }
  const Eigen::Index k = report.rows.front().p_mw.size();
  const bool with_mc =
      std::any_of(report.rows.begin(), report.rows.end(),
                  [](const ReportRow& r) { return r.pd_fc.has_value(); });
  os << "p_tot_dbm,p_tot_mw,allocator,solver";
  for (Eigen::Index j = 0; j < k; ++j) os << ",p" << (j + 1) << "_mw";
  os << ",approx_j_nats";
  if (with_mc) os << ",pd_fc,pd_fc_stderr,mc_runs,mc_seed";
  os << "\n";
  for (const ReportRow& row : report.rows) {
    os << format_double(row.p_tot_dbm) << ',' << format_double(row.p_tot_mw) << ','
       << allocator_name(row.allocator) << ',' << row.solver;
    for (Eigen::Index j = 0; j < k; ++j) os << ',' << format_double(row.p_mw(j));
    os << ',' << format_double(row.approx_j);
    if (with_mc) {
      if (row.pd_fc) {
        os << ',' << format_double(row.pd_fc->value) << ',' << format_double(row.pd_fc->std_error)
           << ',' << row.pd_fc->n_runs << ',' << row.pd_fc->seed;
      } else {
        os << ",,,,";
      }
    }
    os << "\n";
  }
}

void write_surface_csv(std::ostream& os, const std::vector<GridPoint>& surface) {
  os << "p1_mw,p2_mw,value\n";
  for (const GridPoint& point : surface) {
    os << format_double(point.p1_mw) << ',' << format_double(point.p2_mw) << ','
       << format_double(point.value) << "\n";
  }
}

}  // namespace divopt
