// Copyright 2026 the divopt authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "divopt/scenario.hpp"
#include "divopt/units.hpp"
#include "support/cases.hpp"

using namespace divopt;

TEST_CASE("pathloss matches the reference distances") {
  // 2 m and 5 m at pl0 = 55 dB, exponent 2: -61.02 and -68.98 dB.
  const auto near = pathloss_gain(2.0, 55.0, 2.0, 1.0);
  const auto far = pathloss_gain(5.0, 55.0, 2.0, 1.0);
  CHECK(near.pl_db == doctest::Approx(61.0206).epsilon(1e-4));
  CHECK(far.pl_db == doctest::Approx(68.9794).epsilon(1e-4));
  CHECK(near.gain == doctest::Approx(std::pow(10.0, -6.10206)).epsilon(1e-9));

  // log term vanishes at the reference distance
  CHECK(pathloss_gain(1.0, 55.0, 2.0, 1.0).pl_db == doctest::Approx(55.0));

  CHECK_THROWS_AS(pathloss_gain(0.0, 55.0, 2.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(pathloss_gain(-1.0, 55.0, 2.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(pathloss_gain(1.0, 55.0, 2.0, 0.0), std::domain_error);
}

TEST_CASE("pathloss is strictly decreasing in distance, affine in log10 d") {
  double prev = pathloss_gain(0.5, 55.0, 2.0, 1.0).gain;
  for (double d = 1.0; d < 30.0; d *= 1.3) {
    const double g = pathloss_gain(d, 55.0, 2.0, 1.0).gain;
    CHECK(g < prev);
    prev = g;
  }
  const double a = pathloss_gain(2.0, 55.0, 3.0, 1.0).pl_db;
  const double b = pathloss_gain(20.0, 55.0, 3.0, 1.0).pl_db;
  CHECK(b - a == doctest::Approx(10.0 * 3.0).epsilon(1e-12));  // one decade apart
}

TEST_CASE("sensor profile invariants") {
  CHECK_NOTHROW(SensorProfile(0.9, 0.04, 2.0));
  CHECK_THROWS_AS(SensorProfile(0.5, 0.5, 2.0), std::invalid_argument);  // uninformative
  CHECK_THROWS_AS(SensorProfile(0.3, 0.4, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(SensorProfile(1.1, 0.4, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(SensorProfile(0.9, -0.1, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(SensorProfile(0.9, 0.04, 0.0), std::invalid_argument);
}

TEST_CASE("orthogonal channel satisfies h^T h = diag(g) exactly") {
  Eigen::VectorXd g(3);
  g << 1e-6, 3e-7, 5e-8;
  const ChannelSpec c = ChannelSpec::orthogonal(g, 1e-7);
  const Eigen::MatrixXd hth = c.h().transpose() * c.h();
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      CHECK(hth(i, j) == (i == j ? doctest::Approx(g(i)).epsilon(1e-15) : doctest::Approx(0.0)));
    }
  }
  CHECK(c.r().isApprox(1e-7 * Eigen::MatrixXd::Identity(3, 3)));
}

TEST_CASE("cross channel reproduces the printed coupling") {
  SUBCASE("zero interference is diagonal") {
    const ChannelSpec c = build_cross_channel({0.3, 0.7}, 0.0, 1e-7);
    CHECK(c.h()(0, 0) == doctest::Approx(0.3));
    CHECK(c.h()(1, 1) == doctest::Approx(0.7));
    CHECK(c.h()(0, 1) == doctest::Approx(0.0));
    CHECK(c.h()(1, 0) == doctest::Approx(0.0));
  }
  SUBCASE("off-diagonals couple the other sensor's gain") {
    const double g1 = std::pow(10.0, -6.1), g2 = std::pow(10.0, -6.9);
    const ChannelSpec c = build_cross_channel({g1, g2}, 0.2, 1e-7);
    CHECK(c.h()(0, 1) == doctest::Approx(0.2 * g2).epsilon(1e-15));
    CHECK(c.h()(1, 0) == doctest::Approx(0.2 * g1).epsilon(1e-15));
    CHECK(c.kind() == ChannelKind::General);
  }
  SUBCASE("unit gains give the bare coupling matrix") {
    const ChannelSpec c = build_cross_channel({1.0, 1.0}, 0.2, 1e-7);
    CHECK(c.h()(0, 0) == doctest::Approx(1.0));
    CHECK(c.h()(0, 1) == doctest::Approx(0.2));
  }
  SUBCASE("power convention takes square roots") {
    const ChannelSpec c = build_cross_channel({0.25, 0.09}, 0.0, 1e-7,
                                              GainConvention::PowerSqrt);
    CHECK(c.h()(0, 0) == doctest::Approx(0.5));
    CHECK(c.h()(1, 1) == doctest::Approx(0.3));
  }
  CHECK_THROWS_AS(build_cross_channel({1.0, 1.0}, 1.0, 1e-7), std::invalid_argument);
}

TEST_CASE("validate flags region membership and the trivial case") {
  SUBCASE("reference two-sensor case 1: low-quality sensor outside the region") {
    const Scenario s = cases::two_sensor_orthogonal(1, 1.0);
    const ValidationReport r = validate(s);
    REQUIRE(r.ok());
    CHECK_FALSE(r.sensor_in_region_s[0]);  // p_d = 0.1
    CHECK(r.sensor_in_region_s[1]);        // p_d = 0.9
    CHECK_FALSE(r.trivial_full_power);
  }
  SUBCASE("budget above the caps raises the trivial flag") {
    Scenario s = cases::two_sensor_orthogonal(3, 100.0);
    const ValidationReport r = validate(s);
    REQUIRE(r.ok());
    CHECK(r.trivial_full_power);
  }
  SUBCASE("named errors") {
    Scenario s = cases::two_sensor_orthogonal(3, 1.0);
    s.p_tot_mw = 0.0;
    const ValidationReport r = validate(s);
    REQUIRE_FALSE(r.ok());
    CHECK(r.errors[0].code == "nonpositive_budget");
    CHECK_THROWS_AS(require_valid(s), std::invalid_argument);
  }
  SUBCASE("channel size mismatch") {
    Scenario s = cases::two_sensor_orthogonal(3, 1.0);
    s.sensors.emplace_back(0.9, 0.04, 2.0);
    const ValidationReport r = validate(s);
    REQUIRE_FALSE(r.ok());
    CHECK(r.errors[0].code == "channel_sensor_mismatch");
  }
}

TEST_CASE("allocation checking") {
  const Scenario s = cases::two_sensor_orthogonal(3, 1.0);
  CHECK_NOTHROW(check_allocation(s, {Eigen::Vector2d(0.5, 0.5)}));
  CHECK_THROWS(check_allocation(s, {Eigen::Vector2d(0.8, 0.5)}));   // budget
  CHECK_THROWS(check_allocation(s, {Eigen::Vector2d(-0.1, 0.5)}));  // sign
  Scenario roomy = cases::two_sensor_orthogonal(3, 10.0);
  CHECK_THROWS(check_allocation(roomy, {Eigen::Vector2d(2.5, 0.5)}));  // cap
}
