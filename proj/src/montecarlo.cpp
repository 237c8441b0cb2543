// Copyright 2026 the divopt authors
// SPDX-License-Identifier: Apache-2.0

#include "divopt/montecarlo.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "divopt/divergence.hpp"

namespace divopt {

namespace {

double sample_mean(const std::vector<double>& xs) {
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

double sample_variance(const std::vector<double>& xs, double mean) {
  std::vector<double> sq(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - mean) * (xs[i] - mean);
  return pairwise_sum(sq) / static_cast<double>(xs.size() - 1);
}

// Precomputed pieces of y = H A u + L z shared by all replicates.
struct ReceivedSampler {
  Eigen::MatrixXd ha;      // N x K
  Eigen::MatrixXd chol_l;  // lower Cholesky factor of R

  ReceivedSampler(const Scenario& scenario, const Allocation& allocation) {
    ha = scenario.channel.h() * allocation.p_mw.cwiseMax(0.0).cwiseSqrt().asDiagonal();
    Eigen::LLT<Eigen::MatrixXd> llt(scenario.channel.r());
    if (llt.info() != Eigen::Success) {
      throw NumericError("draw_received: noise covariance is not positive definite");
    }
    chol_l = llt.matrixL();
  }

  Eigen::VectorXd sample(const std::vector<SensorProfile>& sensors, Hypothesis hypothesis,
                         RngStream& stream) const {
    const Eigen::VectorXd u = draw_decisions(sensors, hypothesis, stream);
    Eigen::VectorXd y = ha * u;
    for (Eigen::Index i = 0; i < chol_l.rows(); ++i) {
      const double z = stream.next_normal();
      for (Eigen::Index r = i; r < chol_l.rows(); ++r) y(r) += chol_l(r, i) * z;
    }
    return y;
  }
};

}  // namespace

Eigen::VectorXd draw_decisions(const std::vector<SensorProfile>& sensors, Hypothesis hypothesis,
                               RngStream& stream) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(sensors.size()));
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    const auto& s = sensors[static_cast<size_t>(k)];
    const double p = hypothesis == Hypothesis::H1 ? s.p_d : s.p_f;
    u(k) = stream.next_uniform() < p ? 1.0 : 0.0;
  }
  return u;
}

Eigen::VectorXd draw_received(const Scenario& scenario, const Allocation& allocation,
                              const Eigen::VectorXd& u, RngStream& stream) {
  if (u.size() != scenario.sensor_count()) {
    throw std::invalid_argument("draw_received: decision vector length mismatch");
  }
  const ReceivedSampler sampler(scenario, allocation);
  Eigen::VectorXd y = sampler.ha * u;
  for (Eigen::Index i = 0; i < sampler.chol_l.rows(); ++i) {
    const double z = stream.next_normal();
    for (Eigen::Index r = i; r < sampler.chol_l.rows(); ++r) y(r) += sampler.chol_l(r, i) * z;
  }
  return y;
}

FcLogLr::FcLogLr(const Scenario& scenario, const Allocation& allocation) {
  const Eigen::Index k = scenario.sensor_count();
  if (k > kMaxSensors) {
    throw CapabilityError("fc_log_lr: mixture enumeration capped at " +
                          std::to_string(kMaxSensors) + " sensors, got " + std::to_string(k));
  }
  if (allocation.p_mw.size() != k) {
    throw std::invalid_argument("fc_log_lr: allocation length mismatch");
  }
  const Eigen::MatrixXd ha =
      scenario.channel.h() * allocation.p_mw.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(scenario.channel.r());
  if (llt.info() != Eigen::Success) {
    throw NumericError("fc_log_lr: noise covariance is not positive definite");
  }
  chol_l_ = llt.matrixL();

  const Eigen::Index n = scenario.channel.receive_dim();
  const std::size_t patterns = std::size_t{1} << k;
  whitened_means_.resize(n, static_cast<Eigen::Index>(patterns));
  log_w0_.resize(static_cast<Eigen::Index>(patterns));
  log_w1_.resize(static_cast<Eigen::Index>(patterns));

  Eigen::VectorXd mean(n);
  for (std::size_t m = 0; m < patterns; ++m) {
    mean.setZero();
    double lw0 = 0.0, lw1 = 0.0;
    for (Eigen::Index bit = 0; bit < k; ++bit) {
      const auto& s = scenario.sensors[static_cast<size_t>(bit)];
      if (m & (std::size_t{1} << bit)) {
        mean += ha.col(bit);
        lw0 += std::log(s.p_f);
        lw1 += std::log(s.p_d);
      } else {
        lw0 += std::log1p(-s.p_f);
        lw1 += std::log1p(-s.p_d);
      }
    }
    whitened_means_.col(static_cast<Eigen::Index>(m)) =
        chol_l_.triangularView<Eigen::Lower>().solve(mean);
    log_w0_(static_cast<Eigen::Index>(m)) = lw0;
    log_w1_(static_cast<Eigen::Index>(m)) = lw1;
  }
}

double FcLogLr::operator()(const Eigen::VectorXd& y) const {
  const Eigen::VectorXd w = chol_l_.triangularView<Eigen::Lower>().solve(y);
  // Streaming log-sum-exp over both hypotheses; the shared Gaussian
  // normalization cancels in the ratio.
  double max0 = -std::numeric_limits<double>::infinity(), sum0 = 0.0;
  double max1 = -std::numeric_limits<double>::infinity(), sum1 = 0.0;
  for (Eigen::Index m = 0; m < whitened_means_.cols(); ++m) {
    const double e = -0.5 * (w - whitened_means_.col(m)).squaredNorm();
    const double t0 = log_w0_(m) + e;
    if (t0 > max0) {
      sum0 = sum0 * std::exp(max0 - t0) + 1.0;
      max0 = t0;
    } else {
      sum0 += std::exp(t0 - max0);
    }
    const double t1 = log_w1_(m) + e;
    if (t1 > max1) {
      sum1 = sum1 * std::exp(max1 - t1) + 1.0;
      max1 = t1;
    } else {
      sum1 += std::exp(t1 - max1);
    }
  }
  return (max1 + std::log(sum1)) - (max0 + std::log(sum0));
}

McEstimate estimate_pd_fc(const Scenario& scenario, const Allocation& allocation,
                          const McConfig& mc) {
  require_valid(scenario);
  check_allocation(scenario, allocation, 1e-6);
  if (mc.n_runs < 1) throw std::invalid_argument("estimate_pd_fc: n_runs must be positive");
  if (!(mc.pf_target > 0.0 && mc.pf_target < 1.0)) {
    throw std::invalid_argument("estimate_pd_fc: pf_target must lie in (0, 1)");
  }
  const FcLogLr llr(scenario, allocation);
  const ReceivedSampler sampler(scenario, allocation);
  const int n = mc.n_runs;

  std::vector<double> llr0(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    RngStream stream(mc.seed, "pdfc/threshold", static_cast<std::uint64_t>(i));
    llr0[static_cast<size_t>(i)] = llr(sampler.sample(scenario.sensors, Hypothesis::H0, stream));
  }

  // Empirical Neyman-Pearson threshold: the ceil((1-pf) n)-th order statistic
  // keeps the strictly-above fraction at or below pf; randomizing on ties
  // recovers pf exactly.
  std::vector<double> sorted = llr0;
  std::sort(sorted.begin(), sorted.end());
  const double want = (1.0 - mc.pf_target) * n;
  const size_t rank = static_cast<size_t>(std::max(1.0, std::ceil(want - 1e-9)));
  const double threshold = sorted[rank - 1];

  std::size_t above0 = 0, ties0 = 0;
  for (const double v : llr0) {
    if (v > threshold) ++above0;
    if (v == threshold) ++ties0;
  }
  const double gamma =
      ties0 == 0 ? 0.0
                 : std::clamp((mc.pf_target * n - static_cast<double>(above0)) /
                                  static_cast<double>(ties0),
                              0.0, 1.0);

  double hits = 0.0;
  for (int i = 0; i < n; ++i) {
    RngStream stream(mc.seed, "pdfc/evaluate", static_cast<std::uint64_t>(i));
    const double v = llr(sampler.sample(scenario.sensors, Hypothesis::H1, stream));
    if (v > threshold) {
      hits += 1.0;
    } else if (v == threshold) {
      hits += gamma;
    }
  }

  McEstimate est;
  est.value = hits / n;
  est.std_error = std::sqrt(std::max(0.0, est.value * (1.0 - est.value) / n));
  est.n_runs = n;
  est.seed = mc.seed;
  return est;
}

McEstimate estimate_j_mc(const Scenario& scenario, const Allocation& allocation,
                         const McConfig& mc) {
  require_valid(scenario);
  check_allocation(scenario, allocation, 1e-6);
  if (mc.n_runs < 2) throw std::invalid_argument("estimate_j_mc: n_runs must be at least 2");
  const FcLogLr llr(scenario, allocation);
  const ReceivedSampler sampler(scenario, allocation);
  const int n = mc.n_runs;

  std::vector<double> llr1(static_cast<size_t>(n)), llr0(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    RngStream s1(mc.seed, "jmc/h1", static_cast<std::uint64_t>(i));
    llr1[static_cast<size_t>(i)] = llr(sampler.sample(scenario.sensors, Hypothesis::H1, s1));
    RngStream s0(mc.seed, "jmc/h0", static_cast<std::uint64_t>(i));
    llr0[static_cast<size_t>(i)] = llr(sampler.sample(scenario.sensors, Hypothesis::H0, s0));
  }

  const double m1 = sample_mean(llr1);
  const double m0 = sample_mean(llr0);
  const double v1 = sample_variance(llr1, m1);
  const double v0 = sample_variance(llr0, m0);

  McEstimate est;
  est.value = m1 - m0;
  est.std_error = std::sqrt((v1 + v0) / n);
  est.n_runs = n;
  est.seed = mc.seed;
  return est;
}

GridOracleResult grid_oracle(const Scenario& scenario, OracleObjective objective,
                             double grid_step_mw, const std::optional<McConfig>& mc) {
  require_valid(scenario);
  if (scenario.sensor_count() != 2) {
    throw CapabilityError("grid_oracle: exhaustive search is limited to two sensors");
  }
  if (!(grid_step_mw > 0.0)) throw std::invalid_argument("grid_oracle: grid step must be positive");
  if (objective == OracleObjective::PdFc && !mc.has_value()) {
    throw std::invalid_argument("grid_oracle: PdFc objective needs a Monte Carlo config");
  }

  auto axis = [&](double cap) {
    std::vector<double> v;
    for (double p = 0.0; p <= cap + 1e-12; p += grid_step_mw) v.push_back(std::min(p, cap));
    if (cap - v.back() > 1e-9) v.push_back(cap);
    return v;
  };
  const std::vector<double> axis1 = axis(scenario.p_max_mw(0));
  const std::vector<double> axis2 = axis(scenario.p_max_mw(1));

  GridOracleResult result;
  result.best_value = -std::numeric_limits<double>::infinity();
  const bool orthogonal = scenario.channel.is_orthogonal();
  for (const double p1 : axis1) {
    for (const double p2 : axis2) {
      if (p1 + p2 > scenario.p_tot_mw + 1e-12) continue;
      const Allocation alloc{Eigen::Vector2d(p1, p2)};
      double value = 0.0;
      switch (objective) {
        case OracleObjective::ApproxJ:
          value = orthogonal ? j_orthogonal(scenario, alloc) : j_gaussian_mimo(scenario, alloc);
          break;
        case OracleObjective::PdFc:
          value = estimate_pd_fc(scenario, alloc, *mc).value;
          break;
      }
      result.surface.push_back({p1, p2, value});
      if (value > result.best_value) {
        result.best_value = value;
        result.best = alloc;
      }
    }
  }
  return result;
}

}  // namespace divopt
