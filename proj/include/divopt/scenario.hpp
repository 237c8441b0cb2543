// Copyright 2026 the divopt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace divopt {

/// Local decision quality and transmit power cap of one sensor.
///
/// Construction enforces 0 <= p_f < p_d <= 1: a sensor whose detection
/// probability does not exceed its false alarm probability carries no
/// information and is rejected outright.
struct SensorProfile {
  double p_d;        // detection probability of the local decision
  double p_f;        // false alarm probability of the local decision
  double p_max_mw;   // individual transmit power cap, mW

  SensorProfile(double p_d_, double p_f_, double p_max_mw_);
};

enum class ChannelKind { Orthogonal, General };

/// How a printed coupling matrix consumes the per-sensor gain column:
/// AmplitudeAsPrinted places the linear power gain itself on the diagonal,
/// PowerSqrt places its square root (so the gain acts as a power gain).
enum class GainConvention { AmplitudeAsPrinted, PowerSqrt };

/// Linear channel between the K sensors and the fusion center:
/// received = h * diag(amplitudes) * decisions + noise, noise ~ N(0, r).
///
/// The orthogonal kind additionally records the per-sensor power gains and
/// the common noise variance, with h = diag(sqrt(g)) and r = sigma2 * I.
class ChannelSpec {
 public:
  /// Empty channel; fails validation until replaced by a factory result.
  ChannelSpec() = default;

  static ChannelSpec orthogonal(const Eigen::VectorXd& gains, double sigma2_mw);
  static ChannelSpec general(Eigen::MatrixXd h, Eigen::MatrixXd r);

  const Eigen::MatrixXd& h() const { return h_; }
  const Eigen::MatrixXd& r() const { return r_; }
  ChannelKind kind() const { return kind_; }
  bool is_orthogonal() const { return kind_ == ChannelKind::Orthogonal; }

  /// Per-sensor power gains; only meaningful for the orthogonal kind.
  const Eigen::VectorXd& gains() const;
  /// Common noise variance in mW; only meaningful for the orthogonal kind.
  double sigma2_mw() const;

  Eigen::Index receive_dim() const { return h_.rows(); }
  Eigen::Index sensor_count() const { return h_.cols(); }

 private:
  Eigen::MatrixXd h_;       // N x K
  Eigen::MatrixXd r_;       // N x N, symmetric positive definite
  ChannelKind kind_ = ChannelKind::General;
  Eigen::VectorXd gains_;   // K, orthogonal kind only
  double sigma2_mw_ = 0.0;  // orthogonal kind only
};

struct PathlossResult {
  double pl_db;  // pathloss in dB
  double gain;   // linear power gain 10^(-pl/10)
};

/// Log-distance pathloss PL = pl0 + 10 n log10(d/d0), returned both in dB
/// and as the linear power gain.
PathlossResult pathloss_gain(double d_m, double pl0_db, double exponent, double d0_m);

/// Two-sensor cross-coupled channel: h = [[1, rho], [rho, 1]] * diag(c)
/// where c carries the gains per the selected convention. The noise is
/// white with variance sigma2_mw.
ChannelSpec build_cross_channel(const Eigen::Vector2d& gains, double rho, double sigma2_mw,
                                GainConvention convention = GainConvention::AmplitudeAsPrinted);

/// One complete problem instance. Immutable by convention once validated;
/// safe to share across concurrent workers.
struct Scenario {
  std::vector<SensorProfile> sensors;
  ChannelSpec channel;
  double p_tot_mw = 0.0;  // joint transmit power budget

  Eigen::Index sensor_count() const { return static_cast<Eigen::Index>(sensors.size()); }
  double p_max_mw(Eigen::Index j) const { return sensors[static_cast<size_t>(j)].p_max_mw; }
  double sum_p_max_mw() const;
};

/// Per-sensor transmit powers in mW (squared amplitudes).
struct Allocation {
  Eigen::VectorXd p_mw;
};

struct ValidationIssue {
  std::string code;     // stable machine-readable name
  std::string message;  // human-readable detail
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<bool> sensor_in_region_s;  // concavity region membership per sensor
  bool trivial_full_power = false;       // sum of caps does not reach the budget

  bool ok() const { return errors.empty(); }
  std::string describe() const;
};

/// Checks every scenario invariant and reports named violations along with
/// the per-sensor concavity-region flags and the trivial full-power flag.
ValidationReport validate(const Scenario& scenario);

/// Throws std::invalid_argument listing every violation if the scenario is
/// not valid; returns the scenario unchanged otherwise.
const Scenario& require_valid(const Scenario& scenario);

/// Throws std::invalid_argument if the allocation violates the per-sensor
/// caps, nonnegativity, or the total budget (within tol_mw).
void check_allocation(const Scenario& scenario, const Allocation& allocation,
                      double tol_mw = 1e-9);

}  // namespace divopt
