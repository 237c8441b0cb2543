// Copyright 2026 the divopt authors
// SPDX-License-Identifier: Apache-2.0

#include "divopt/scenario.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

#include "divopt/divergence.hpp"

namespace divopt {

SensorProfile::SensorProfile(double p_d_, double p_f_, double p_max_mw_)
    : p_d(p_d_), p_f(p_f_), p_max_mw(p_max_mw_) {
  if (!(p_f >= 0.0 && p_f < p_d && p_d <= 1.0)) {
    throw std::invalid_argument(
        "SensorProfile: requires 0 <= p_f < p_d <= 1 (uninformative sensor rejected)");
  }
  if (!(p_max_mw > 0.0)) {
    throw std::invalid_argument("SensorProfile: requires p_max > 0");
  }
}

ChannelSpec ChannelSpec::orthogonal(const Eigen::VectorXd& gains, double sigma2_mw) {
  if (gains.size() < 1 || (gains.array() <= 0.0).any()) {
    throw std::invalid_argument("ChannelSpec::orthogonal: gains must be positive");
  }
  if (!(sigma2_mw > 0.0)) {
    throw std::invalid_argument("ChannelSpec::orthogonal: sigma2 must be positive");
  }
  ChannelSpec c;
  c.kind_ = ChannelKind::Orthogonal;
  c.gains_ = gains;
  c.sigma2_mw_ = sigma2_mw;
  const Eigen::Index k = gains.size();
  c.h_ = gains.cwiseSqrt().asDiagonal();
  c.r_ = sigma2_mw * Eigen::MatrixXd::Identity(k, k);
  return c;
}

ChannelSpec ChannelSpec::general(Eigen::MatrixXd h, Eigen::MatrixXd r) {
  if (h.rows() != r.rows() || r.rows() != r.cols()) {
    throw std::invalid_argument("ChannelSpec::general: r must be square with h's row count");
  }
  ChannelSpec c;
  c.kind_ = ChannelKind::General;
  c.h_ = std::move(h);
  c.r_ = std::move(r);
  return c;
}

const Eigen::VectorXd& ChannelSpec::gains() const {
  if (kind_ != ChannelKind::Orthogonal) {
    throw std::logic_error("ChannelSpec::gains: only available for orthogonal channels");
  }
  return gains_;
}

double ChannelSpec::sigma2_mw() const {
  if (kind_ != ChannelKind::Orthogonal) {
    throw std::logic_error("ChannelSpec::sigma2_mw: only available for orthogonal channels");
  }
  return sigma2_mw_;
}

PathlossResult pathloss_gain(double d_m, double pl0_db, double exponent, double d0_m) {
  if (!(d_m > 0.0)) throw std::domain_error("pathloss_gain: requires d > 0");
  if (!(d0_m > 0.0)) throw std::domain_error("pathloss_gain: requires d0 > 0");
  PathlossResult r;
  r.pl_db = pl0_db + 10.0 * exponent * std::log10(d_m / d0_m);
  r.gain = std::pow(10.0, -r.pl_db / 10.0);
  return r;
}

ChannelSpec build_cross_channel(const Eigen::Vector2d& gains, double rho, double sigma2_mw,
                                GainConvention convention) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::invalid_argument("build_cross_channel: requires 0 <= rho < 1");
  }
  const Eigen::Vector2d diag = convention == GainConvention::AmplitudeAsPrinted
                                   ? gains
                                   : Eigen::Vector2d(gains.cwiseSqrt());
  Eigen::Matrix2d coupling;
  coupling << 1.0, rho, rho, 1.0;
  Eigen::MatrixXd h = coupling * diag.asDiagonal();
  Eigen::MatrixXd r = sigma2_mw * Eigen::Matrix2d::Identity();
  return ChannelSpec::general(std::move(h), std::move(r));
}

double Scenario::sum_p_max_mw() const {
  double total = 0.0;
  for (const auto& s : sensors) total += s.p_max_mw;
  return total;
}

std::string ValidationReport::describe() const {
  std::ostringstream os;
  for (const auto& e : errors) os << e.code << ": " << e.message << "\n";
  return os.str();
}

ValidationReport validate(const Scenario& scenario) {
  ValidationReport report;
  auto fail = [&report](std::string code, std::string message) {
    report.errors.push_back({std::move(code), std::move(message)});
  };

  const Eigen::Index k = scenario.sensor_count();
  if (k < 1) fail("no_sensors", "scenario must contain at least one sensor");
  if (scenario.channel.sensor_count() != k) {
    fail("channel_sensor_mismatch",
         "channel has " + std::to_string(scenario.channel.sensor_count()) + " columns for " +
             std::to_string(k) + " sensors");
  }
  if (!(scenario.p_tot_mw > 0.0)) fail("nonpositive_budget", "p_tot must be positive");

  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& s = scenario.sensors[static_cast<size_t>(j)];
    const std::string tag = "sensor " + std::to_string(j + 1);
    // SensorProfile construction already enforces these; re-checked here so
    // that aggregate-initialized scenarios get named errors too.
    if (!(s.p_f >= 0.0 && s.p_f < s.p_d && s.p_d <= 1.0)) {
      fail("sensor_quality_invalid", tag + ": requires 0 <= p_f < p_d <= 1");
    }
    if (!(s.p_max_mw > 0.0)) fail("sensor_cap_invalid", tag + ": requires p_max > 0");
  }

  // Noise covariance must be symmetric positive definite.
  const Eigen::MatrixXd& r = scenario.channel.r();
  if (!r.isApprox(r.transpose(), 1e-12)) {
    fail("noise_not_symmetric", "noise covariance is not symmetric");
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(r);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        (ldlt.vectorD().array() <= 0.0).any()) {
      fail("noise_not_positive_definite", "noise covariance is not positive definite");
    }
  }

  if (scenario.channel.is_orthogonal()) {
    const Eigen::MatrixXd expect_h =
        Eigen::MatrixXd(scenario.channel.gains().cwiseSqrt().asDiagonal());
    if (!scenario.channel.h().isApprox(expect_h, 1e-12)) {
      fail("orthogonal_channel_inconsistent", "h does not equal diag(sqrt(gains))");
    }
  }

  if (report.ok()) {
    report.sensor_in_region_s.reserve(static_cast<size_t>(k));
    for (const auto& s : scenario.sensors) {
      report.sensor_in_region_s.push_back(in_region_s(s.p_d, s.p_f).inside);
    }
    report.trivial_full_power = scenario.sum_p_max_mw() < scenario.p_tot_mw;
  }
  return report;
}

const Scenario& require_valid(const Scenario& scenario) {
  const ValidationReport report = validate(scenario);
  if (!report.ok()) {
    throw std::invalid_argument("invalid scenario:\n" + report.describe());
  }
  return scenario;
}

void check_allocation(const Scenario& scenario, const Allocation& allocation, double tol_mw) {
  if (allocation.p_mw.size() != scenario.sensor_count()) {
    throw std::invalid_argument("allocation length does not match sensor count");
  }
  for (Eigen::Index j = 0; j < allocation.p_mw.size(); ++j) {
    const double p = allocation.p_mw(j);
    if (!(p >= -tol_mw)) {
      throw std::invalid_argument("allocation: negative power on sensor " + std::to_string(j + 1));
    }
    if (!(p <= scenario.p_max_mw(j) + tol_mw)) {
      throw std::invalid_argument("allocation: cap exceeded on sensor " + std::to_string(j + 1));
    }
  }
  if (!(allocation.p_mw.sum() <= scenario.p_tot_mw + tol_mw)) {
    throw std::invalid_argument("allocation: total budget exceeded");
  }
}

}  // namespace divopt
