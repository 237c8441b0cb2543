// Copyright 2026 the divopt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "divopt/scenario.hpp"

// Closed-form J-divergence machinery.
//
// The fusion-center J-divergence between the hypothesis-conditioned received
// densities is approximated by the J-divergence between two Gaussians with
// matched first and second moments. For orthogonal channels the objective
// decouples into per-sensor rational terms whose derivatives admit closed
// forms; those drive the waterfilling allocator. Everything here is a pure
// function of its inputs and reentrant.

namespace divopt {

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mean vectors of the local decision vector under each hypothesis:
/// beta1(j) = p_d(j), beta0(j) = p_f(j), beta = beta1 - beta0 (> 0).
struct BetaVectors {
  Eigen::VectorXd beta1;
  Eigen::VectorXd beta0;
  Eigen::VectorXd beta;
};

inline BetaVectors beta_vectors(const std::vector<SensorProfile>& sensors) {
  const Eigen::Index k = static_cast<Eigen::Index>(sensors.size());
  BetaVectors b{Eigen::VectorXd(k), Eigen::VectorXd(k), Eigen::VectorXd(k)};
  for (Eigen::Index j = 0; j < k; ++j) {
    b.beta1(j) = sensors[static_cast<size_t>(j)].p_d;
    b.beta0(j) = sensors[static_cast<size_t>(j)].p_f;
  }
  b.beta = b.beta1 - b.beta0;
  return b;
}

/// Per-decision Bernoulli variances, as the diagonals of the covariance
/// matrices of u under each hypothesis. Entries lie in [0, 1/4].
struct BernoulliVarMatrices {
  Eigen::VectorXd b1;  // p_d (1 - p_d) per sensor
  Eigen::VectorXd b0;  // p_f (1 - p_f) per sensor
};

inline BernoulliVarMatrices bernoulli_var_matrices(const std::vector<SensorProfile>& sensors) {
  const Eigen::Index k = static_cast<Eigen::Index>(sensors.size());
  BernoulliVarMatrices b{Eigen::VectorXd(k), Eigen::VectorXd(k)};
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& s = sensors[static_cast<size_t>(j)];
    b.b1(j) = s.p_d * (1.0 - s.p_d);
    b.b0(j) = s.p_f * (1.0 - s.p_f);
  }
  return b;
}

/// Moment-matched Gaussian surrogates of the received-signal densities.
struct GaussianMoments {
  Eigen::VectorXd mu0, mu1;
  Eigen::MatrixXd sigma0, sigma1;
};

/// mu_i = H A beta_i and sigma_i = R + H A B_i A^T H^T with A = diag(sqrt(P)).
inline GaussianMoments gaussian_moments(const Scenario& scenario, const Allocation& allocation) {
  if (allocation.p_mw.size() != scenario.sensor_count()) {
    throw std::invalid_argument("gaussian_moments: allocation length does not match sensor count");
  }
  const Eigen::MatrixXd& h = scenario.channel.h();
  const BetaVectors b = beta_vectors(scenario.sensors);
  const BernoulliVarMatrices v = bernoulli_var_matrices(scenario.sensors);
  const Eigen::VectorXd a = allocation.p_mw.cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd ha = h * a.asDiagonal();  // N x K

  GaussianMoments m;
  m.mu0 = ha * b.beta0;
  m.mu1 = ha * b.beta1;
  m.sigma0 = scenario.channel.r() + ha * v.b0.asDiagonal() * ha.transpose();
  m.sigma1 = scenario.channel.r() + ha * v.b1.asDiagonal() * ha.transpose();
  return m;
}

namespace detail {

template <typename Scalar>
Scalar ldlt_condition(const Eigen::LDLT<Eigen::MatrixX<Scalar>>& ldlt) {
  const auto d = ldlt.vectorD();
  Scalar lo = std::numeric_limits<Scalar>::infinity();
  Scalar hi = Scalar(0);
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const Scalar a = std::abs(d(i));
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  if (lo <= Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  return hi / lo;
}

}  // namespace detail

/// J-divergence between two Gaussians N(mu0, sigma0) and N(mu1, sigma1),
/// in nats:
///
///   J = 1/2 Tr[ S0 S1^-1 + S1 S0^-1 + (S1^-1 + S0^-1)(mu1-mu0)(mu1-mu0)^T ] - N.
///
/// Evaluated through symmetric LDLT solves; a factor with condition number
/// above cond_limit raises NumericError carrying the estimate.
template <typename Scalar>
Scalar j_gaussian(const Eigen::MatrixX<Scalar>& sigma0, const Eigen::MatrixX<Scalar>& sigma1,
                  const Eigen::VectorX<Scalar>& mu0, const Eigen::VectorX<Scalar>& mu1,
                  Scalar cond_limit = Scalar(1e12)) {
  const Eigen::Index n = sigma0.rows();
  const Eigen::LDLT<Eigen::MatrixX<Scalar>> ldlt0(sigma0);
  const Eigen::LDLT<Eigen::MatrixX<Scalar>> ldlt1(sigma1);
  const Scalar cond0 = detail::ldlt_condition(ldlt0);
  const Scalar cond1 = detail::ldlt_condition(ldlt1);
  if (!(cond0 <= cond_limit) || !(cond1 <= cond_limit)) {
    throw NumericError("j_gaussian: covariance condition number " +
                       std::to_string(static_cast<double>(std::max(cond0, cond1))) +
                       " exceeds limit " + std::to_string(static_cast<double>(cond_limit)));
  }
  const Eigen::VectorX<Scalar> d = mu1 - mu0;
  const Scalar tr01 = ldlt1.solve(sigma0).trace();
  const Scalar tr10 = ldlt0.solve(sigma1).trace();
  const Scalar quad = d.dot(ldlt1.solve(d)) + d.dot(ldlt0.solve(d));
  return Scalar(0.5) * (tr01 + tr10 + quad) - Scalar(n);
}

/// Gaussian-approximated J-divergence of the received signals, in nats.
inline double j_gaussian_mimo(const GaussianMoments& m) {
  return j_gaussian<double>(m.sigma0, m.sigma1, m.mu0, m.mu1);
}

inline double j_gaussian_mimo(const Scenario& scenario, const Allocation& allocation) {
  return j_gaussian_mimo(gaussian_moments(scenario, allocation));
}

/// Coefficients of the decoupled per-sensor objective term
///   (s2 + alpha_f g P)/(s2 + beta_f g P) + (s2 + alpha_d g P)/(s2 + beta_d g P).
///
/// Note the crossing: beta_f = p_d(1-p_d) and beta_d = p_f(1-p_f); it comes
/// from which hypothesis' covariance lands in each denominator.
template <typename Scalar>
struct OrthCoeffs {
  Scalar alpha_f, alpha_d, beta_f, beta_d;
};

template <typename Scalar>
OrthCoeffs<Scalar> orth_coeffs(Scalar p_d, Scalar p_f) {
  if (!(p_d > p_f)) throw std::invalid_argument("orth_coeffs: requires p_d > p_f");
  OrthCoeffs<Scalar> c;
  c.alpha_f = p_f * (1 - p_d) + p_d * (p_d - p_f);
  c.alpha_d = p_d * (1 - p_f) - p_f * (p_d - p_f);
  c.beta_f = p_d * (1 - p_d);
  c.beta_d = p_f * (1 - p_f);
  // Identity the derivative analysis rests on: the marginal value at zero
  // power is 2 (p_d - p_f)^2 g / s2.
  const Scalar gap = c.alpha_f - c.beta_f + c.alpha_d - c.beta_d;
  const Scalar expect = 2 * (p_d - p_f) * (p_d - p_f);
  if (std::abs(gap - expect) > Scalar(1e-12)) {
    throw NumericError("orth_coeffs: coefficient identity violated");
  }
  return c;
}

inline OrthCoeffs<double> orth_coeffs(const SensorProfile& s) {
  return orth_coeffs<double>(s.p_d, s.p_f);
}

/// One sensor's contribution to the decoupled orthogonal objective.
template <typename Scalar>
Scalar j_orthogonal_term(Scalar p, const OrthCoeffs<Scalar>& c, Scalar g, Scalar s2) {
  const Scalar gp = g * p;
  return (s2 + c.alpha_f * gp) / (s2 + c.beta_f * gp) +
         (s2 + c.alpha_d * gp) / (s2 + c.beta_d * gp);
}

/// Decoupled orthogonal objective (unshifted form): at zero power each term
/// equals 2, so the value at P = 0 is 2K. Related to the Gaussian J by
/// j_orthogonal = 2 (j_gaussian_mimo + K).
inline double j_orthogonal(const Eigen::VectorXd& p_mw, const std::vector<SensorProfile>& sensors,
                           const Eigen::VectorXd& gains, double sigma2_mw) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < p_mw.size(); ++j) {
    const auto c = orth_coeffs(sensors[static_cast<size_t>(j)]);
    total += j_orthogonal_term(p_mw(j), c, gains(j), sigma2_mw);
  }
  return total;
}

inline double j_orthogonal(const Scenario& scenario, const Allocation& allocation) {
  return j_orthogonal(allocation.p_mw, scenario.sensors, scenario.channel.gains(),
                      scenario.channel.sigma2_mw());
}

/// First partial derivative of the orthogonal objective in one sensor's
/// power. Nonnegative for every p >= 0, strictly positive when p_d > p_f.
template <typename Scalar>
Scalar dj_dp(Scalar p, const OrthCoeffs<Scalar>& c, Scalar g, Scalar s2) {
  const Scalar gp = g * p;
  const Scalar den_f = s2 + c.beta_f * gp;
  const Scalar den_d = s2 + c.beta_d * gp;
  return (c.alpha_f - c.beta_f) * s2 * g / (den_f * den_f) +
         (c.alpha_d - c.beta_d) * s2 * g / (den_d * den_d);
}

inline double dj_dp(double p, const SensorProfile& s, double g, double s2) {
  return dj_dp(p, orth_coeffs(s), g, s2);
}

/// Second partial derivative plus the sign-analysis coefficients of its
/// numerator polynomial c0 s2^3 + 3 c1 s2^2 gP + 3 c2 s2 (gP)^2 + c3 (gP)^3.
/// c1, c2, c3 are nonnegative whenever p_d > p_f, so the derivative is
/// nonpositive for all p >= 0 exactly when c0 >= 0.
template <typename Scalar>
struct SecondDerivative {
  Scalar value;
  std::array<Scalar, 4> c;  // c0 .. c3
};

template <typename Scalar>
SecondDerivative<Scalar> d2j_dp2(Scalar p, const OrthCoeffs<Scalar>& c, Scalar g, Scalar s2) {
  const Scalar gp = g * p;
  const Scalar den_f = s2 + c.beta_f * gp;
  const Scalar den_d = s2 + c.beta_d * gp;
  const Scalar df = c.alpha_f - c.beta_f;
  const Scalar dd = c.alpha_d - c.beta_d;
  SecondDerivative<Scalar> out;
  out.value = Scalar(-2) * s2 * g * g *
              (df * c.beta_f / (den_f * den_f * den_f) + dd * c.beta_d / (den_d * den_d * den_d));
  out.c[0] = c.beta_f * df + c.beta_d * dd;
  out.c[1] = c.beta_f * c.beta_d * (df + dd);
  out.c[2] = c.beta_f * c.beta_d * (c.beta_d * df + c.beta_f * dd);
  out.c[3] = c.beta_f * c.beta_d * (c.beta_d * c.beta_d * df + c.beta_f * c.beta_f * dd);
  return out;
}

inline SecondDerivative<double> d2j_dp2(double p, const SensorProfile& s, double g, double s2) {
  return d2j_dp2(p, orth_coeffs(s), g, s2);
}

/// Concavity region membership for one sensor's (p_d, p_f) operating point,
/// with the bracketing roots r1 <= p_d <= r2 of the quadratic behind it.
template <typename Scalar>
struct RegionS {
  bool inside;
  Scalar r1, r2;
};

/// The per-sensor objective term is concave in p over all p >= 0 exactly
/// when p_d lies between
///   r1,2 = 3/4 - p_f/2 -+ 1/4 sqrt(1 + 12 p_f - 12 p_f^2).
/// Boundary points count as inside.
template <typename Scalar>
RegionS<Scalar> in_region_s(Scalar p_d, Scalar p_f) {
  if (!(p_f >= 0 && p_f < p_d && p_d <= 1)) {
    throw std::invalid_argument("in_region_s: requires 0 <= p_f < p_d <= 1");
  }
  const Scalar rad = std::sqrt(1 + 12 * p_f - 12 * p_f * p_f);
  RegionS<Scalar> r;
  r.r1 = Scalar(0.75) - Scalar(0.5) * p_f - Scalar(0.25) * rad;
  r.r2 = Scalar(0.75) - Scalar(0.5) * p_f + Scalar(0.25) * rad;
  const Scalar tol = Scalar(1e-12);
  r.inside = (p_d >= r.r1 - tol) && (p_d <= r.r2 + tol);
  return r;
}

/// Closed-form J-divergence between the product-Bernoulli densities of the
/// local decision vector, in nats:
///   sum_k (p_d - p_f) ln[ p_d (1-p_f) / (p_f (1-p_d)) ].
/// This is the fusion performance that error-free transmission would reach;
/// the received-signal J can never exceed it. Infinite when some p_f = 0 or
/// p_d = 1 with p_d > p_f.
inline double bernoulli_j_upper_bound(const std::vector<SensorProfile>& sensors) {
  double total = 0.0;
  for (const auto& s : sensors) {
    if (s.p_d == s.p_f) continue;
    total += (s.p_d - s.p_f) * std::log(s.p_d * (1.0 - s.p_f) / (s.p_f * (1.0 - s.p_d)));
  }
  return total;
}

/// Detection error probability lower bound p(H0) p(H1) e^{-J/2}.
inline double pe_lower_bound(double j_nats, double prior0, double prior1) {
  if (!(prior0 >= 0.0) || !(prior1 >= 0.0) || std::abs(prior0 + prior1 - 1.0) > 1e-12) {
    throw std::invalid_argument("pe_lower_bound: priors must be nonnegative and sum to 1");
  }
  if (!(j_nats >= 0.0)) throw std::invalid_argument("pe_lower_bound: requires j >= 0");
  return prior0 * prior1 * std::exp(-0.5 * j_nats);
}

}  // namespace divopt
