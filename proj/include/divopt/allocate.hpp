// Copyright 2026 the divopt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>

#include "divopt/scenario.hpp"

// Power allocators: two baselines, the weighted-waterfilling solver for
// orthogonal channels whose sensors all lie in the concavity region, a
// log-barrier solver for everything else, and a KKT verifier.

namespace divopt {

/// Raised when a sensor outside the concavity region reaches a code path
/// that needs the monotone marginal-power mapping (waterfilling); callers
/// must fall back to general_allocate.
struct NotInRegionSError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Splits the budget evenly, repeatedly redistributing any excess above a
/// sensor's cap among the uncapped sensors.
Allocation equal_allocation(const Scenario& scenario);

/// Makes every sensor arrive at the fusion center with the same SNR
/// (P_j proportional to 1/g_j), with proportional redistribution when caps
/// bind. Orthogonal channels only.
Allocation equal_snr_allocation(const Scenario& scenario);

/// Inverts the marginal-value relation at multiplier lambda for one sensor:
/// zero when lambda exceeds the marginal value at zero power, the cap when
/// lambda is below the marginal value at the cap, otherwise the unique root
/// of dj_dp(p) = lambda. Requires the sensor in the concavity region.
double kkt_power_at_lambda(double lambda, const SensorProfile& sensor, double g, double sigma2_mw);

/// Waterfilling search state: marginal values at zero and full power per
/// sensor, and the multiplier bracket the bisection ended on.
struct WaterfillState {
  Eigen::VectorXd w0;  // marginal value at zero power
  Eigen::VectorXd w1;  // marginal value at the cap
  double lambda = 0.0;
  std::pair<double, double> bracket{0.0, 0.0};
};

struct WaterfillResult {
  Allocation allocation;
  WaterfillState state;
};

/// Weighted waterfilling: activates sensors in descending w0 order and
/// bisects the shared multiplier until the budget is exhausted to within
/// 1e-6 * p_tot. Requires an orthogonal channel with every sensor in the
/// concavity region; returns full power in the trivial case where the caps
/// cannot reach the budget.
WaterfillResult waterfill_allocate(const Scenario& scenario);

/// Multipliers and residuals reconstructed from an allocation's active set.
struct KktReport {
  double lambda = 0.0;
  Eigen::VectorXd nu;                     // multipliers for p_j >= 0
  Eigen::VectorXd eta;                    // multipliers for p_j <= p_max
  Eigen::VectorXd stationarity_residual;  // per-sensor stationarity defect
  double complementarity_residual = 0.0;
  bool boundary_ok = false;  // total power sits on the constraint boundary

  double max_stationarity_residual() const {
    return stationarity_residual.size() ? stationarity_residual.cwiseAbs().maxCoeff() : 0.0;
  }
};

/// Rebuilds (lambda, nu, eta) from the active-set pattern of an allocation
/// on an orthogonal channel and reports stationarity and complementarity
/// residuals in the decoupled objective's units.
KktReport verify_kkt(const Scenario& scenario, const Allocation& allocation, double tol = 1e-6);

struct GeneralOptions {
  double mu_initial = 1.0;
  double mu_final = 1e-9;
  double mu_factor = 0.1;
  int max_inner_iterations = 5000;
  double gradient_tolerance = 1e-7;  // scaled by the ambient gradient magnitude
  double fd_step_rel = 1e-6;         // central-difference step factor, general channels
};

struct GeneralResult {
  Allocation allocation;
  KktReport kkt;
  double objective_j = 0.0;  // Gaussian-approximated J at the allocation
  bool certified = false;    // every barrier stage reached its gradient tolerance
  int winning_start = -1;
};

/// Log-barrier maximization of the Gaussian-approximated J over the box and
/// budget constraints, multi-started from the equal allocation, the
/// equal-SNR allocation (orthogonal channels), and each single-sensor-full
/// vertex. Works for any channel and any region membership.
GeneralResult general_allocate(const Scenario& scenario, const GeneralOptions& options = {});

enum class SolverChoice { Auto, Waterfill, General };

struct AllocateOutcome {
  Allocation allocation;
  KktReport kkt;
  double objective_j = 0.0;
  bool certified = true;
  bool used_waterfill = false;
};

/// Solver front door: Auto picks waterfilling exactly when the channel is
/// orthogonal and every sensor is in the concavity region, otherwise the
/// barrier solver.
AllocateOutcome allocate(const Scenario& scenario, SolverChoice choice = SolverChoice::Auto,
                         const GeneralOptions& options = {});

}  // namespace divopt
