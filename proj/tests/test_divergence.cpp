// Copyright 2026 the divopt authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "divopt/divergence.hpp"
#include "divopt/rng.hpp"
#include "support/cases.hpp"

using namespace divopt;

namespace {

// Random orthogonal scenario with a fresh feasible allocation.
struct RandomOrth {
  Scenario scenario;
  Allocation allocation;
};

RandomOrth random_orthogonal(RngStream& rng, int max_sensors = 8) {
  const int k = 1 + static_cast<int>(rng.next_uniform() * max_sensors);
  Scenario s;
  Eigen::VectorXd gains(k);
  for (int j = 0; j < k; ++j) {
    const double p_f = rng.next_uniform() * 0.5;
    const double p_d = std::min(0.995, p_f + 0.01 + rng.next_uniform() * (0.99 - p_f));
    s.sensors.emplace_back(p_d, p_f, 0.5 + 3.0 * rng.next_uniform());
    gains(j) = std::pow(10.0, -8.0 + 3.0 * rng.next_uniform());
  }
  s.channel = ChannelSpec::orthogonal(gains, std::pow(10.0, -8.0 + 2.0 * rng.next_uniform()));
  s.p_tot_mw = 0.1 + 3.0 * rng.next_uniform();
  Allocation a{Eigen::VectorXd(k)};
  for (int j = 0; j < k; ++j) a.p_mw(j) = rng.next_uniform() * s.sensors[j].p_max_mw;
  if (a.p_mw.sum() > s.p_tot_mw) a.p_mw *= s.p_tot_mw / a.p_mw.sum();
  return {std::move(s), std::move(a)};
}

// Operating-regime sampler for finite-difference checks: received SNR per mW
// between 0.5 and 80, decision gap at least 0.1. Outside this regime the
// objective is so flat that central differences of the O(K) objective cannot
// resolve the derivative to six digits at all.
RandomOrth random_operating_regime(RngStream& rng, int max_sensors = 6) {
  const int k = 1 + static_cast<int>(rng.next_uniform() * max_sensors);
  const double s2 = 1e-7;
  Scenario s;
  Eigen::VectorXd gains(k);
  for (int j = 0; j < k; ++j) {
    const double p_f = 0.01 + 0.14 * rng.next_uniform();
    const double p_d = std::min(0.99, p_f + 0.1 + rng.next_uniform() * (0.95 - p_f - 0.1));
    s.sensors.emplace_back(p_d, p_f, 2.0);
    gains(j) = s2 * 0.5 * std::pow(160.0, rng.next_uniform());  // 0.5 .. 80 per mW
  }
  s.channel = ChannelSpec::orthogonal(gains, s2);
  s.p_tot_mw = 2.0 * k;
  Allocation a{Eigen::VectorXd(k)};
  for (int j = 0; j < k; ++j) a.p_mw(j) = 2.0 * rng.next_uniform();
  return {std::move(s), std::move(a)};
}

}  // namespace

TEST_CASE("moments: zero allocation collapses to the noise distribution") {
  const Scenario s = cases::two_sensor_orthogonal(3, 1.0);
  const GaussianMoments m = gaussian_moments(s, {Eigen::Vector2d::Zero()});
  CHECK(m.mu0.norm() == 0.0);
  CHECK(m.mu1.norm() == 0.0);
  CHECK(m.sigma0.isApprox(s.channel.r()));
  CHECK(m.sigma1.isApprox(s.channel.r()));
}

TEST_CASE("moments: unit hand-evaluated case") {
  // One sensor, g = 1, sigma2 = 1, P = 1, p_d = 0.9, p_f = 0.04.
  Scenario s;
  s.sensors.emplace_back(0.9, 0.04, 2.0);
  s.channel = ChannelSpec::orthogonal(Eigen::VectorXd::Ones(1), 1.0);
  s.p_tot_mw = 2.0;
  const GaussianMoments m = gaussian_moments(s, {Eigen::VectorXd::Ones(1)});
  CHECK(m.mu1(0) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(m.mu0(0) == doctest::Approx(0.04).epsilon(1e-15));
  CHECK(m.sigma1(0, 0) == doctest::Approx(1.0 + 0.09).epsilon(1e-15));
  CHECK(m.sigma0(0, 0) == doctest::Approx(1.0 + 0.04 * 0.96).epsilon(1e-15));
}

TEST_CASE("moments: covariance shift away from R stays positive semidefinite") {
  RngStream rng(2024, "moments-psd", 0);
  for (int trial = 0; trial < 50; ++trial) {
    auto [s, a] = random_orthogonal(rng);
    const GaussianMoments m = gaussian_moments(s, a);
    const Eigen::MatrixXd d0 = m.sigma0 - s.channel.r();
    const Eigen::MatrixXd d1 = m.sigma1 - s.channel.r();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e0(d0), e1(d1);
    CHECK(e0.eigenvalues().minCoeff() >= -1e-12);
    CHECK(e1.eigenvalues().minCoeff() >= -1e-12);
  }
}

TEST_CASE("j_gaussian: trivial and symmetric cases") {
  SUBCASE("identical Gaussians give zero") {
    const Scenario s = cases::two_sensor_orthogonal(3, 1.0);
    CHECK(j_gaussian_mimo(s, {Eigen::Vector2d::Zero()}) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("equal covariances reduce to the Mahalanobis distance") {
    Eigen::MatrixXd sigma(2, 2);
    sigma << 2.0, 0.3, 0.3, 1.0;
    Eigen::VectorXd mu0(2), mu1(2);
    mu0 << 0.1, -0.4;
    mu1 << 0.7, 0.2;
    const Eigen::VectorXd d = mu1 - mu0;
    const double expect = d.dot(sigma.ldlt().solve(d));
    CHECK(j_gaussian<double>(sigma, sigma, mu0, mu1) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("1-D value agrees with the two-KL-terms route") {
    const double v0 = 1.0, v1 = 1.3, m = 0.3;
    Eigen::MatrixXd s0(1, 1), s1(1, 1);
    s0 << v0;
    s1 << v1;
    Eigen::VectorXd mu0(1), mu1(1);
    mu0 << 0.0;
    mu1 << m;
    const double kl10 = 0.5 * (std::log(v0 / v1) + v1 / v0 + m * m / v0 - 1.0);
    const double kl01 = 0.5 * (std::log(v1 / v0) + v0 / v1 + m * m / v1 - 1.0);
    CHECK(j_gaussian<double>(s0, s1, mu0, mu1) == doctest::Approx(kl10 + kl01).epsilon(1e-12));
  }
  SUBCASE("singular covariance raises a diagnostic error") {
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
    bad(0, 0) = 1.0;
    CHECK_THROWS_AS(
        j_gaussian<double>(bad, Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2),
                           Eigen::VectorXd::Zero(2)),
        NumericError);
  }
}

TEST_CASE("the expanded trace grouping equals the moment route") {
  RngStream rng(7, "expanded", 0);
  for (int trial = 0; trial < 30; ++trial) {
    auto [s, a] = random_orthogonal(rng, 5);
    const Eigen::MatrixXd& h = s.channel.h();
    const Eigen::MatrixXd& r = s.channel.r();
    const auto b = beta_vectors(s.sensors);
    const auto v = bernoulli_var_matrices(s.sensors);
    const Eigen::MatrixXd ha = h * a.p_mw.cwiseSqrt().asDiagonal();
    const Eigen::MatrixXd bb = b.beta * b.beta.transpose();
    const Eigen::MatrixXd s1 = r + ha * v.b1.asDiagonal() * ha.transpose();
    const Eigen::MatrixXd s0 = r + ha * v.b0.asDiagonal() * ha.transpose();
    const Eigen::MatrixXd num0 =
        r + ha * (Eigen::MatrixXd(v.b0.asDiagonal()) + bb) * ha.transpose();
    const Eigen::MatrixXd num1 =
        r + ha * (Eigen::MatrixXd(v.b1.asDiagonal()) + bb) * ha.transpose();
    const double n = static_cast<double>(h.rows());
    const double expanded = 0.5 * (s1.ldlt().solve(num0).trace()) +
                            0.5 * (s0.ldlt().solve(num1).trace()) - n;
    const double direct = j_gaussian_mimo(s, a);
    CHECK(expanded == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("rotation invariance of the Gaussian J") {
  RngStream rng(11, "rotation", 0);
  auto [s, a] = random_orthogonal(rng, 4);
  const Eigen::Index n = s.channel.receive_dim();
  Eigen::MatrixXd noise(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) noise(i, j) = rng.next_normal();
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(noise).householderQ();

  Scenario rotated = s;
  rotated.channel = ChannelSpec::general(q * s.channel.h(),
                                         q * s.channel.r() * q.transpose());
  CHECK(j_gaussian_mimo(rotated, a) == doctest::Approx(j_gaussian_mimo(s, a)).epsilon(1e-9));
}

TEST_CASE("orth_coeffs: frozen example and structure") {
  const OrthCoeffs<double> c = orth_coeffs<double>(0.9, 0.04);
  CHECK(c.beta_f == doctest::Approx(0.09).epsilon(1e-15));
  CHECK(c.beta_d == doctest::Approx(0.0384).epsilon(1e-15));
  CHECK(c.alpha_f == doctest::Approx(0.778).epsilon(1e-12));
  CHECK(c.alpha_d == doctest::Approx(0.8296).epsilon(1e-12));
  CHECK(c.alpha_f - c.beta_f + c.alpha_d - c.beta_d ==
        doctest::Approx(2.0 * 0.86 * 0.86).epsilon(1e-12));

  const OrthCoeffs<double> c2 = orth_coeffs<double>(0.7, 0.04);
  for (const double v : {c2.alpha_f, c2.alpha_d, c2.beta_f, c2.beta_d}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(orth_coeffs<double>(0.4, 0.4), std::invalid_argument);
}

TEST_CASE("j_orthogonal is 2K at zero power") {
  const Scenario s = cases::ten_sensor_orthogonal(3, 1.0);
  CHECK(j_orthogonal(s, {Eigen::VectorXd::Zero(10)}) == doctest::Approx(20.0).epsilon(1e-14));
}

TEST_CASE("affine identity links the decoupled and Gaussian forms") {
  RngStream rng(31, "affine", 0);
  for (int trial = 0; trial < 200; ++trial) {
    auto [s, a] = random_orthogonal(rng);
    const double k = static_cast<double>(s.sensor_count());
    const double lhs = j_orthogonal(s, a);
    const double rhs = 2.0 * (j_gaussian_mimo(s, a) + k);
    CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("dj_dp: closed form at zero power and frozen numeric value") {
  const SensorProfile sensor(0.9, 0.04, 2.0);
  const double g = std::pow(10.0, -6.1);
  const double s2 = 1e-7;
  // At zero power the derivative equals 2 g (p_d - p_f)^2 / sigma2.
  CHECK(dj_dp(0.0, sensor, g, s2) ==
        doctest::Approx(2.0 * g * 0.86 * 0.86 / s2).epsilon(1e-12));
  CHECK(dj_dp(0.0, sensor, g, s2) == doctest::Approx(11.7497).epsilon(1e-4));
}

TEST_CASE("dj_dp matches central finite differences of j_orthogonal") {
  RngStream rng(47, "fd", 0);
  int checked = 0;
  while (checked < 1000) {
    auto [s, a] = random_operating_regime(rng);
    const Eigen::VectorXd& gains = s.channel.gains();
    const double s2 = s.channel.sigma2_mw();
    for (Eigen::Index j = 0; j < s.sensor_count() && checked < 1000; ++j, ++checked) {
      const double h = 1e-6 * std::max(a.p_mw(j), 1.0);
      Eigen::VectorXd up = a.p_mw, down = a.p_mw;
      up(j) += h;
      down(j) = std::max(0.0, down(j) - h);
      const double fd = (j_orthogonal(up, s.sensors, gains, s2) -
                         j_orthogonal(down, s.sensors, gains, s2)) /
                        (up(j) - down(j));
      const double analytic = dj_dp(0.5 * (up(j) + down(j)), s.sensors[j], gains(j), s2);
      CHECK(std::abs(fd - analytic) <= 1e-6 * std::abs(analytic));
      CHECK(analytic > 0.0);  // strict positivity under p_d > p_f
    }
  }
}

TEST_CASE("dj_dp is nonnegative over the whole parameter domain") {
  RngStream rng(48, "monotone", 0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double p_f = rng.next_uniform() * 0.98;
    const double p_d = std::min(0.999, p_f + 1e-3 + rng.next_uniform() * (1.0 - p_f));
    const double g = std::pow(10.0, -9.0 + 5.0 * rng.next_uniform());
    const double p = rng.next_uniform() * 4.0;
    CHECK(dj_dp(p, orth_coeffs(p_d, p_f), g, 1e-7) >= 0.0);
  }
}

TEST_CASE("d2j_dp2 value matches finite differences of dj_dp") {
  RngStream rng(53, "fd2", 0);
  for (int trial = 0; trial < 200; ++trial) {
    const double p_f = rng.next_uniform() * 0.5;
    const double p_d = std::min(0.99, p_f + 0.05 + rng.next_uniform() * 0.5);
    const auto c = orth_coeffs<double>(p_d, p_f);
    const double g = std::pow(10.0, -7.0 + 2.0 * rng.next_uniform());
    const double s2 = 1e-7;
    const double p = rng.next_uniform() * 2.0;
    const double h = 1e-5 * std::max(p, 1.0);
    const double fd = (dj_dp(p + h, c, g, s2) - dj_dp(std::max(0.0, p - h), c, g, s2)) /
                      (p + h - std::max(0.0, p - h));
    const double analytic = d2j_dp2(0.5 * (p + h + std::max(0.0, p - h)), c, g, s2).value;
    CHECK(std::abs(fd - analytic) <= 2e-4 * std::max(std::abs(analytic), 1e-9));
  }
}

TEST_CASE("second derivative sign analysis") {
  SUBCASE("outside the region: convex at zero, c0 negative") {
    const auto r = d2j_dp2(0.0, SensorProfile(0.1, 0.04, 2.0), std::pow(10.0, -6.1), 1e-7);
    CHECK(r.c[0] < 0.0);
    CHECK(r.value > 0.0);
  }
  SUBCASE("c1..c3 nonnegative whenever p_d > p_f") {
    RngStream rng(59, "csign", 0);
    for (int trial = 0; trial < 500; ++trial) {
      const double p_f = rng.next_uniform() * 0.98;
      const double p_d = p_f + (1.0 - p_f) * (0.02 + 0.98 * rng.next_uniform());
      const auto r = d2j_dp2(rng.next_uniform(), orth_coeffs<double>(std::min(p_d, 0.999), p_f),
                             1e-6, 1e-7);
      CHECK(r.c[1] >= -1e-18);
      CHECK(r.c[2] >= -1e-18);
      CHECK(r.c[3] >= -1e-18);
    }
  }
}

TEST_CASE("region membership: frozen boundary values") {
  const auto at_zero = in_region_s<double>(0.9, 0.0);
  CHECK(at_zero.r1 == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(at_zero.r2 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(at_zero.inside);
  CHECK_FALSE(in_region_s<double>(0.4, 0.0).inside);

  CHECK_FALSE(in_region_s<double>(0.1, 0.04).inside);
  CHECK(in_region_s<double>(0.7, 0.04).inside);
  CHECK(in_region_s<double>(0.9, 0.04).inside);
  CHECK(in_region_s<double>(0.7, 0.04).r1 == doctest::Approx(0.42784110140523746).epsilon(1e-12));
  CHECK(in_region_s<double>(0.7, 0.04).r2 == doctest::Approx(1.0321588985947625).epsilon(1e-12));
}

TEST_CASE("region membership agrees with the sign of c0 on a grid") {
  for (int i = 1; i <= 99; ++i) {
    for (int j = 0; j < i; ++j) {
      const double p_d = i / 100.0;
      const double p_f = j / 100.0;
      const auto r = in_region_s(p_d, p_f);
      const double c0 = d2j_dp2(0.0, orth_coeffs(p_d, p_f), 1.0, 1.0).c[0];
      if (std::abs(c0) <= 1e-12) continue;  // boundary
      CHECK(r.inside == (c0 > 0.0));
    }
  }
}

TEST_CASE("appendix identities hold on a grid") {
  for (int i = 1; i <= 49; ++i) {
    for (int j = 0; j < i; ++j) {
      const double p_d = i / 50.0 * 0.99;
      const double p_f = j / 50.0 * 0.99;
      if (!(p_f < p_d)) continue;
      const auto c = orth_coeffs(p_d, p_f);
      const double beta = p_d - p_f;
      const double d0 = c.alpha_f - c.beta_f + c.alpha_d - c.beta_d;
      const double d1 = c.alpha_f * c.beta_d + c.alpha_d * c.beta_f - 2.0 * c.beta_f * c.beta_d;
      const double d2 = c.alpha_f * c.beta_d * c.beta_d + c.alpha_d * c.beta_f * c.beta_f -
                        c.beta_f * c.beta_f * c.beta_d - c.beta_f * c.beta_d * c.beta_d;
      CHECK(d0 == doctest::Approx(2.0 * beta * beta).epsilon(1e-12));
      CHECK(d1 >= -1e-15);
      CHECK(d1 == doctest::Approx(beta * beta * (p_d * p_f + (1.0 - p_d) * (1.0 - p_f)))
                      .epsilon(1e-9));
      CHECK(d2 >= -1e-15);
    }
  }
}

TEST_CASE("bernoulli J upper bound") {
  std::vector<SensorProfile> one{SensorProfile(0.9, 0.04, 2.0)};
  CHECK(bernoulli_j_upper_bound(one) == doctest::Approx(0.86 * std::log(216.0)).epsilon(1e-12));
  CHECK(bernoulli_j_upper_bound(one) == doctest::Approx(4.6226).epsilon(1e-4));

  // additivity over independent sensors
  std::vector<SensorProfile> many{SensorProfile(0.9, 0.04, 2.0), SensorProfile(0.7, 0.1, 2.0),
                                  SensorProfile(0.55, 0.2, 2.0)};
  double sum = 0.0;
  for (const auto& s : many) sum += bernoulli_j_upper_bound({s});
  CHECK(bernoulli_j_upper_bound(many) == doctest::Approx(sum).epsilon(1e-12));

  // perfect sensor has infinite divergence
  std::vector<SensorProfile> perfect{SensorProfile(1.0, 0.04, 2.0)};
  CHECK(std::isinf(bernoulli_j_upper_bound(perfect)));
}

TEST_CASE("pe lower bound") {
  CHECK(pe_lower_bound(0.0, 0.5, 0.5) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(pe_lower_bound(4.6226, 0.5, 0.5) == doctest::Approx(0.0248).epsilon(1e-3));
  CHECK(pe_lower_bound(1.0, 0.0, 1.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(pe_lower_bound(-1.0, 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(pe_lower_bound(1.0, 0.7, 0.7), std::invalid_argument);
}
