// Copyright 2026 the divopt authors
// SPDX-License-Identifier: Apache-2.0

#include "divopt/allocate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "divopt/divergence.hpp"

namespace divopt {

namespace {

constexpr double kBudgetSlackRel = 1e-12;  // "budget active" classification slack

std::vector<Eigen::Index> uncapped_indices(Eigen::Index k) {
  std::vector<Eigen::Index> idx(static_cast<size_t>(k));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  return idx;
}

}  // namespace

Allocation equal_allocation(const Scenario& scenario) {
  require_valid(scenario);
  const Eigen::Index k = scenario.sensor_count();
  Allocation out{Eigen::VectorXd::Zero(k)};
  double budget = std::min(scenario.p_tot_mw, scenario.sum_p_max_mw());
  auto open = uncapped_indices(k);
  while (!open.empty()) {
    const double share = budget / static_cast<double>(open.size());
    std::vector<Eigen::Index> still_open;
    bool capped_any = false;
    for (const Eigen::Index j : open) {
      if (scenario.p_max_mw(j) <= share) {
        out.p_mw(j) = scenario.p_max_mw(j);
        budget -= scenario.p_max_mw(j);
        capped_any = true;
      } else {
        still_open.push_back(j);
      }
    }
    if (!capped_any) {
      for (const Eigen::Index j : still_open) out.p_mw(j) = share;
      break;
    }
    open = std::move(still_open);
  }
  return out;
}

Allocation equal_snr_allocation(const Scenario& scenario) {
  require_valid(scenario);
  if (!scenario.channel.is_orthogonal()) {
    throw std::invalid_argument(
        "equal_snr_allocation: baseline requires per-sensor gains (orthogonal channel)");
  }
  const Eigen::Index k = scenario.sensor_count();
  const Eigen::VectorXd weights = scenario.channel.gains().cwiseInverse();
  Allocation out{Eigen::VectorXd::Zero(k)};
  double budget = std::min(scenario.p_tot_mw, scenario.sum_p_max_mw());
  auto open = uncapped_indices(k);
  while (!open.empty()) {
    double weight_sum = 0.0;
    for (const Eigen::Index j : open) weight_sum += weights(j);
    const double pass_budget = budget;
    bool capped_any = false;
    std::vector<Eigen::Index> still_open;
    for (const Eigen::Index j : open) {
      if (pass_budget * weights(j) / weight_sum >= scenario.p_max_mw(j)) {
        out.p_mw(j) = scenario.p_max_mw(j);
        budget -= scenario.p_max_mw(j);
        capped_any = true;
      } else {
        still_open.push_back(j);
      }
    }
    if (!capped_any) {
      for (const Eigen::Index j : still_open) out.p_mw(j) = pass_budget * weights(j) / weight_sum;
      break;
    }
    open = std::move(still_open);
  }
  return out;
}

double kkt_power_at_lambda(double lambda, const SensorProfile& sensor, double g,
                           double sigma2_mw) {
  if (!in_region_s(sensor.p_d, sensor.p_f).inside) {
    throw NotInRegionSError(
        "kkt_power_at_lambda: marginal value is not monotone outside the concavity region; "
        "use general_allocate");
  }
  const auto coeffs = orth_coeffs(sensor);
  const double p_max = sensor.p_max_mw;
  const double w0 = dj_dp(0.0, coeffs, g, sigma2_mw);
  const double w1 = dj_dp(p_max, coeffs, g, sigma2_mw);
  if (lambda >= w0) return 0.0;
  if (lambda <= w1) return p_max;
  double lo = 0.0, hi = p_max;
  const double tol = 1e-15 * p_max;
  // dj_dp is strictly decreasing on [0, p_max] here, so plain bisection is
  // certified to land on the unique root.
  for (int iter = 0; iter < 200 && (hi - lo) > tol; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (dj_dp(mid, coeffs, g, sigma2_mw) > lambda) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

WaterfillResult waterfill_allocate(const Scenario& scenario) {
  require_valid(scenario);
  if (!scenario.channel.is_orthogonal()) {
    throw std::invalid_argument("waterfill_allocate: requires an orthogonal channel");
  }
  const Eigen::Index k = scenario.sensor_count();
  const Eigen::VectorXd& gains = scenario.channel.gains();
  const double s2 = scenario.channel.sigma2_mw();

  for (const auto& s : scenario.sensors) {
    if (!in_region_s(s.p_d, s.p_f).inside) {
      throw NotInRegionSError(
          "waterfill_allocate: sensor outside the concavity region; use general_allocate");
    }
  }

  WaterfillResult result;
  result.state.w0.resize(k);
  result.state.w1.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& s = scenario.sensors[static_cast<size_t>(j)];
    result.state.w0(j) = dj_dp(0.0, s, gains(j), s2);
    result.state.w1(j) = dj_dp(s.p_max_mw, s, gains(j), s2);
  }

  // Trivial case: the caps cannot reach the budget, so everyone transmits
  // at full power and the budget constraint stays slack.
  if (scenario.sum_p_max_mw() <= scenario.p_tot_mw) {
    result.allocation.p_mw.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) result.allocation.p_mw(j) = scenario.p_max_mw(j);
    result.state.lambda = 0.0;
    result.state.bracket = {0.0, 0.0};
    return result;
  }

  auto power_at = [&](double lambda) {
    Eigen::VectorXd p(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      p(j) = kkt_power_at_lambda(lambda, scenario.sensors[static_cast<size_t>(j)], gains(j), s2);
    }
    return p;
  };
  auto total_at = [&](double lambda) { return power_at(lambda).sum(); };

  // Sensors activate in descending w0 order; ties resolved by sensor index.
  std::vector<Eigen::Index> order = uncapped_indices(k);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (result.state.w0(a) != result.state.w0(b)) return result.state.w0(a) > result.state.w0(b);
    return a < b;
  });

  size_t last_within = 0;
  for (size_t i = 0; i < order.size(); ++i) {
    if (total_at(result.state.w0(order[i])) <= scenario.p_tot_mw) last_within = i;
  }
  double w_a = result.state.w0(order[last_within]);
  double w_b = last_within + 1 < order.size() ? result.state.w0(order[last_within + 1]) : 0.0;

  // Tighter than it needs to be for the budget alone: the objective match
  // against the barrier solver is bounded by lambda times this gap.
  const double eps = 1e-12 * scenario.p_tot_mw;
  for (int iter = 0; iter < 500 && total_at(w_b) - total_at(w_a) >= eps; ++iter) {
    const double w_c = 0.5 * (w_a + w_b);
    if (total_at(w_c) <= scenario.p_tot_mw) {
      w_a = w_c;
    } else {
      w_b = w_c;
    }
  }

  result.allocation.p_mw = power_at(w_a);
  result.state.lambda = w_a;
  result.state.bracket = {w_a, w_b};
  return result;
}

namespace {

// Active-set KKT reconstruction shared by verify_kkt and the barrier solver.
// `gradient` holds the optimized objective's partial derivatives at the
// allocation, so residuals are in that objective's units.
KktReport kkt_from_gradient(const Scenario& scenario, const Eigen::VectorXd& p,
                            const Eigen::VectorXd& gradient, double tol) {
  const Eigen::Index k = p.size();
  const double active_tol = std::max(tol, 1e-12);
  const bool trivial_full_power =
      scenario.sum_p_max_mw() <= scenario.p_tot_mw * (1.0 + kBudgetSlackRel);

  KktReport report;
  report.nu = Eigen::VectorXd::Zero(k);
  report.eta = Eigen::VectorXd::Zero(k);
  report.stationarity_residual = Eigen::VectorXd::Zero(k);

  std::vector<bool> at_zero(static_cast<size_t>(k)), at_cap(static_cast<size_t>(k));
  double interior_sum = 0.0;
  int interior_count = 0;
  double zero_max = -std::numeric_limits<double>::infinity();
  double cap_min = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < k; ++j) {
    at_zero[static_cast<size_t>(j)] = p(j) <= active_tol;
    at_cap[static_cast<size_t>(j)] = p(j) >= scenario.p_max_mw(j) - active_tol;
    if (at_zero[static_cast<size_t>(j)]) zero_max = std::max(zero_max, gradient(j));
    if (at_cap[static_cast<size_t>(j)]) cap_min = std::min(cap_min, gradient(j));
    if (!at_zero[static_cast<size_t>(j)] && !at_cap[static_cast<size_t>(j)]) {
      interior_sum += gradient(j);
      ++interior_count;
    }
  }

  if (trivial_full_power) {
    report.lambda = 0.0;
  } else if (interior_count > 0) {
    report.lambda = interior_sum / interior_count;
  } else {
    // Only boundary sensors: any multiplier between the largest at-zero
    // marginal and the smallest at-cap marginal witnesses optimality.
    double lo = std::isfinite(zero_max) ? zero_max : 0.0;
    double hi = std::isfinite(cap_min) ? cap_min : lo;
    if (lo > hi) std::swap(lo, hi);
    report.lambda = std::max(0.0, 0.5 * (lo + hi));
  }

  for (Eigen::Index j = 0; j < k; ++j) {
    if (at_zero[static_cast<size_t>(j)]) {
      report.nu(j) = std::max(0.0, report.lambda - gradient(j));
    }
    if (at_cap[static_cast<size_t>(j)]) {
      report.eta(j) = std::max(0.0, gradient(j) - report.lambda);
    }
    report.stationarity_residual(j) = gradient(j) - report.lambda + report.nu(j) - report.eta(j);
  }

  const double target_total = std::min(scenario.p_tot_mw, scenario.sum_p_max_mw());
  const double budget_gap = std::abs(p.sum() - target_total);
  report.boundary_ok = budget_gap <= std::max(tol, 1e-6 * scenario.p_tot_mw);
  double comp = trivial_full_power ? 0.0 : report.lambda * std::abs(scenario.p_tot_mw - p.sum());
  for (Eigen::Index j = 0; j < k; ++j) {
    comp += report.nu(j) * std::max(0.0, p(j)) +
            report.eta(j) * std::max(0.0, scenario.p_max_mw(j) - p(j));
  }
  report.complementarity_residual = comp;
  return report;
}

}  // namespace

KktReport verify_kkt(const Scenario& scenario, const Allocation& allocation, double tol) {
  require_valid(scenario);
  if (!scenario.channel.is_orthogonal()) {
    throw std::invalid_argument("verify_kkt: requires an orthogonal channel");
  }
  check_allocation(scenario, allocation, std::max(tol, 1e-9));
  const Eigen::Index k = scenario.sensor_count();
  Eigen::VectorXd gradient(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    gradient(j) = dj_dp(allocation.p_mw(j), scenario.sensors[static_cast<size_t>(j)],
                        scenario.channel.gains()(j), scenario.channel.sigma2_mw());
  }
  return kkt_from_gradient(scenario, allocation.p_mw, gradient, tol);
}

namespace {

struct BarrierObjective {
  const Scenario* scenario;
  bool orthogonal;
  double fd_step_rel;

  double value(const Eigen::VectorXd& p) const {
    if (orthogonal) return j_orthogonal(*scenario, Allocation{p});
    return j_gaussian_mimo(*scenario, Allocation{p});
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& p) const {
    const Eigen::Index k = p.size();
    Eigen::VectorXd g(k);
    if (orthogonal) {
      for (Eigen::Index j = 0; j < k; ++j) {
        g(j) = dj_dp(p(j), scenario->sensors[static_cast<size_t>(j)],
                     scenario->channel.gains()(j), scenario->channel.sigma2_mw());
      }
      return g;
    }
    // Central differences, falling back to a forward difference when the
    // point sits closer to zero than the step.
    const double floor_scale = scenario->p_tot_mw / static_cast<double>(k);
    Eigen::VectorXd probe = p;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double h = fd_step_rel * std::max(p(j), floor_scale);
      if (p(j) >= h) {
        probe(j) = p(j) + h;
        const double up = value(probe);
        probe(j) = p(j) - h;
        const double down = value(probe);
        g(j) = (up - down) / (2.0 * h);
      } else {
        const double base = value(p);
        probe(j) = p(j) + h;
        g(j) = (value(probe) - base) / h;
      }
      probe(j) = p(j);
    }
    return g;
  }
};

}  // namespace

GeneralResult general_allocate(const Scenario& scenario, const GeneralOptions& options) {
  require_valid(scenario);
  const Eigen::Index k = scenario.sensor_count();
  const double p_tot = scenario.p_tot_mw;

  Eigen::VectorXd caps(k);
  for (Eigen::Index j = 0; j < k; ++j) caps(j) = scenario.p_max_mw(j);

  GeneralResult result;

  // Trivial case: caps cannot reach the budget.
  if (caps.sum() <= p_tot) {
    result.allocation.p_mw = caps;
    result.certified = true;
    result.winning_start = 0;
    result.objective_j = j_gaussian_mimo(scenario, result.allocation);
    BarrierObjective obj{&scenario, scenario.channel.is_orthogonal(), options.fd_step_rel};
    result.kkt = kkt_from_gradient(scenario, caps, obj.gradient(caps), 1e-6);
    return result;
  }

  const BarrierObjective obj{&scenario, scenario.channel.is_orthogonal(), options.fd_step_rel};

  // Strictly interior reference point used to pull starts off the boundary.
  Eigen::VectorXd center(k);
  for (Eigen::Index j = 0; j < k; ++j) center(j) = 0.5 * std::min(caps(j), p_tot / k);

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(equal_allocation(scenario).p_mw);
  if (scenario.channel.is_orthogonal()) {
    starts.push_back(equal_snr_allocation(scenario).p_mw);
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::VectorXd vertex = Eigen::VectorXd::Zero(k);
    vertex(j) = std::min(caps(j), p_tot);
    starts.push_back(std::move(vertex));
  }

  auto barrier_value = [&](const Eigen::VectorXd& p, double mu) {
    const double slack = p_tot - p.sum();
    if (!(slack > 0.0) || (p.array() <= 0.0).any() || ((caps - p).array() <= 0.0).any()) {
      return -std::numeric_limits<double>::infinity();
    }
    return obj.value(p) +
           mu * (std::log(slack) + p.array().log().sum() + (caps - p).array().log().sum());
  };
  auto barrier_gradient = [&](const Eigen::VectorXd& p, double mu) {
    const double slack = p_tot - p.sum();
    Eigen::VectorXd g = obj.gradient(p);
    g.array() += mu * (-1.0 / slack + 1.0 / p.array() - 1.0 / (caps - p).array());
    return g;
  };
  // The barrier walls make the landscape extremely stiff at small mu
  // (curvature ~ mu / distance^2), which plain gradient steps cannot
  // traverse. Steps are scaled by the exact barrier curvature, which is
  // diagonal (per-sensor walls) plus rank-one (the shared budget wall), so
  // the Sherman-Morrison identity gives the scaled direction in O(K).
  // Tangential moves along the budget face keep their mobility this way.
  auto barrier_scaled_direction = [&](const Eigen::VectorXd& p, double mu,
                                      const Eigen::VectorXd& grad, double floor) {
    const double slack = p_tot - p.sum();
    Eigen::VectorXd diag =
        (mu * (1.0 / p.array().square() + 1.0 / (caps - p).array().square()) + floor).matrix();
    const double wall = mu / (slack * slack);
    const Eigen::VectorXd dinv_g = grad.cwiseQuotient(diag);
    const Eigen::VectorXd dinv_one = diag.cwiseInverse();
    const double correction = wall * dinv_g.sum() / (1.0 + wall * dinv_one.sum());
    return (dinv_g - correction * dinv_one).eval();
  };

  // Central differences cannot certify gradients below their own rounding
  // noise, roughly eps * |f| / h; the convergence tolerance floors there.
  const double fd_noise =
      scenario.channel.is_orthogonal()
          ? 0.0
          : 128.0 * std::numeric_limits<double>::epsilon() *
                (std::abs(obj.value(center)) + static_cast<double>(k)) /
                (options.fd_step_rel * p_tot / static_cast<double>(k));

  // Rounding granularity of one objective evaluation; the matrix-solve path
  // of the general channel carries a much larger constant than the
  // decoupled closed form.
  const double value_noise =
      (scenario.channel.is_orthogonal() ? 16.0 : 2048.0) *
      std::numeric_limits<double>::epsilon() *
      (std::abs(obj.value(center)) + static_cast<double>(k) + 1.0);

  // The barrier coefficient is normalized by the objective's variation scale
  // and the constraint count. With a raw coefficient of 1 the first stage is
  // strictly concave, which funnels every start into the analytic center and
  // defeats the multi-start; normalized, basins survive stage one and the
  // final duality gap scales with the objective rather than with an absolute
  // constant.
  const double objective_scale =
      std::max(obj.gradient(center).cwiseAbs().maxCoeff() * p_tot, 1e-30);
  const double mu_scale = 0.1 * objective_scale / static_cast<double>(2 * k + 1);

  double best_objective = -std::numeric_limits<double>::infinity();
  for (size_t start_idx = 0; start_idx < starts.size(); ++start_idx) {
    Eigen::VectorXd p = 0.999 * starts[start_idx] + 0.001 * center;
    bool converged_all = true;

    for (double mu_raw = options.mu_initial; mu_raw >= options.mu_final * (1.0 - 1e-12);
         mu_raw *= options.mu_factor) {
      const double mu = mu_raw * mu_scale;
      const double scale = std::max(obj.gradient(p).cwiseAbs().maxCoeff(), 1e-12);
      const double gtol = std::max(options.gradient_tolerance * scale, 2.0 * fd_noise);
      double step = 1.0;
      bool converged = false;
      for (int iter = 0; iter < options.max_inner_iterations; ++iter) {
        const Eigen::VectorXd grad = barrier_gradient(p, mu);
        if (grad.cwiseAbs().maxCoeff() <= gtol) {
          converged = true;
          break;
        }
        const Eigen::VectorXd direction =
            barrier_scaled_direction(p, mu, grad, scale / p_tot);
        const double phi0 = barrier_value(p, mu);
        const double slope = grad.dot(direction);  // > 0: ascent direction
        // Once the achievable gain per unit step falls below the evaluation
        // noise of the objective itself, the point is stationary to working
        // precision even if the raw gradient is not yet tiny.
        if (slope <= value_noise) {
          converged = true;
          break;
        }
        // Fraction-to-the-boundary: cap the step so every Armijo trial stays
        // strictly feasible. Close to the budget wall the feasible range
        // along the raw direction can be arbitrarily small.
        double t_max = std::numeric_limits<double>::infinity();
        const double dir_sum = direction.sum();
        if (dir_sum > 0.0) t_max = std::min(t_max, (p_tot - p.sum()) / dir_sum);
        for (Eigen::Index j = 0; j < k; ++j) {
          if (direction(j) > 0.0) t_max = std::min(t_max, (caps(j) - p(j)) / direction(j));
          if (direction(j) < 0.0) t_max = std::min(t_max, p(j) / -direction(j));
        }
        step = std::min({step * 2.0, 1.0, 0.995 * t_max});
        bool moved = false;
        while (step > 1e-20) {
          const Eigen::VectorXd trial = p + step * direction;
          const double phi = barrier_value(trial, mu);
          if (std::isfinite(phi) && phi >= phi0 + 1e-4 * step * slope) {
            p = trial;
            moved = true;
            break;
          }
          step *= 0.5;
        }
        if (!moved) break;
      }
      converged_all = converged_all && converged;
    }

    const double objective = obj.value(p);
    if (objective > best_objective) {
      best_objective = objective;
      result.allocation.p_mw = p;
      result.certified = converged_all;
      result.winning_start = static_cast<int>(start_idx);
    }
  }

  // Ultra-flat objectives (everything below the finite-difference noise
  // floor) can leave visible slack behind. Spending it along the feasible
  // direction toward the caps costs nothing when the objective is monotone
  // and is discarded otherwise.
  {
    Eigen::VectorXd& p = result.allocation.p_mw;
    const double slack = p_tot - p.sum();
    const Eigen::VectorXd headroom = caps - p;
    if (slack > 0.0 && headroom.sum() > 0.0) {
      Eigen::VectorXd topped = p + (slack / headroom.sum()) * headroom;
      topped = topped.cwiseMin(caps).cwiseMax(0.0);
      if (topped.sum() <= p_tot * (1.0 + 1e-12) &&
          obj.value(topped) >= best_objective * (1.0 - 1e-12) - 1e-300) {
        p = topped;
      }
    }
  }

  result.objective_j = j_gaussian_mimo(scenario, result.allocation);
  result.kkt =
      kkt_from_gradient(scenario, result.allocation.p_mw, obj.gradient(result.allocation.p_mw),
                        1e-5 * caps.maxCoeff());
  return result;
}

AllocateOutcome allocate(const Scenario& scenario, SolverChoice choice,
                         const GeneralOptions& options) {
  const ValidationReport report = validate(scenario);
  if (!report.ok()) throw std::invalid_argument("invalid scenario:\n" + report.describe());

  const bool all_in_s =
      std::all_of(report.sensor_in_region_s.begin(), report.sensor_in_region_s.end(),
                  [](bool b) { return b; });
  const bool waterfill_applicable = scenario.channel.is_orthogonal() && all_in_s;

  bool use_waterfill = false;
  switch (choice) {
    case SolverChoice::Auto:
      use_waterfill = waterfill_applicable;
      break;
    case SolverChoice::Waterfill:
      use_waterfill = true;  // waterfill_allocate re-checks and throws if misapplied
      break;
    case SolverChoice::General:
      use_waterfill = false;
      break;
  }

  AllocateOutcome outcome;
  if (use_waterfill) {
    WaterfillResult wf = waterfill_allocate(scenario);
    outcome.allocation = std::move(wf.allocation);
    outcome.kkt = verify_kkt(scenario, outcome.allocation);
    outcome.objective_j = j_gaussian_mimo(scenario, outcome.allocation);
    outcome.certified = true;
    outcome.used_waterfill = true;
  } else {
    GeneralResult gr = general_allocate(scenario, options);
    outcome.allocation = std::move(gr.allocation);
    outcome.kkt = std::move(gr.kkt);
    outcome.objective_j = gr.objective_j;
    outcome.certified = gr.certified;
    outcome.used_waterfill = false;
  }
  return outcome;
}

}  // namespace divopt
