#include "oracles.hpp"

#include <quadtune/guidance.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace quadtune;

TEST(PlanDistance, TrapezoidClosedForms)
{
  const DistanceProfile p = plan_distance(10.0, 2.0, 1.0);
  EXPECT_EQ(p.shape, ProfileShape::trapezoid);
  EXPECT_NEAR(p.t1, 2.0, 1e-12);
  EXPECT_NEAR(p.t2, 5.0, 1e-12);
  EXPECT_NEAR(p.tf, 7.0, 1e-12);
  EXPECT_NEAR(distance_at(p, 2.0), 2.0, 1e-12);
  EXPECT_NEAR(distance_at(p, 7.0), 10.0, 1e-12);
  EXPECT_NEAR(speed_at(p, 4.0), 2.0, 1e-12);
}

TEST(PlanDistance, TriangleClosedForms)
{
  const DistanceProfile p = plan_distance(1.0, 2.0, 1.0);
  EXPECT_EQ(p.shape, ProfileShape::triangle);
  EXPECT_NEAR(p.v_peak, 1.0, 1e-12);
  EXPECT_NEAR(p.t1, 1.0, 1e-12);
  EXPECT_NEAR(p.tf, 2.0, 1e-12);
  EXPECT_NEAR(distance_at(p, 1.0), 0.5, 1e-12);
}

TEST(PlanDistance, ZeroDistanceIsDegenerate)
{
  const DistanceProfile p = plan_distance(0.0, 2.0, 1.0);
  EXPECT_EQ(p.tf, 0.0);
  EXPECT_EQ(distance_at(p, 0.0), 0.0);
  EXPECT_EQ(distance_at(p, 3.0), 0.0);
}

TEST(PlanDistance, ClampsOutsideProfile)
{
  const DistanceProfile p = plan_distance(10.0, 2.0, 1.0);
  EXPECT_EQ(distance_at(p, -1.0), 0.0);
  EXPECT_EQ(distance_at(p, 100.0), 10.0);
  EXPECT_EQ(speed_at(p, 100.0), 0.0);
}

TEST(PlanDistance, InvalidLimitsThrow)
{
  EXPECT_THROW(plan_distance(1.0, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(plan_distance(1.0, 1.0, -1.0), std::invalid_argument);
  EXPECT_THROW(plan_distance(-1.0, 1.0, 1.0), std::invalid_argument);
}

TEST(PlanDistance, RandomDrawsSatisfyKinematicLimits)
{
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> log_u(std::log(1e-3), std::log(1e3));
  for (int i = 0; i < 300; ++i) {
    const double d = std::exp(log_u(rng));
    const double v = std::exp(log_u(rng));
    const double a = std::exp(log_u(rng));
    const auto c = oracle::check_guidance(d, v, a);
    EXPECT_LE(c.endpoint_error, 1e-9) << d << " " << v << " " << a;
    EXPECT_LE(c.speed_excess, 1e-5) << d << " " << v << " " << a;
    EXPECT_LE(c.accel_excess, 1e-5) << d << " " << v << " " << a;
    EXPECT_LE(c.oracle_error, 1e-9) << d << " " << v << " " << a;
    EXPECT_LE(c.tf_error, 1e-12) << d << " " << v << " " << a;
    EXPECT_LE(c.monotonic_violation, 0.0);
  }
}

TEST(PlanDistance, BranchesAgreeAtBoundary)
{
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> log_u(std::log(1e-2), std::log(1e2));
  for (int i = 0; i < 100; ++i) {
    EXPECT_LE(oracle::branch_boundary_error(std::exp(log_u(rng)), std::exp(log_u(rng))), 1e-9);
  }
}

TEST(SetpointAt, LegEndsAtRest)
{
  const GuidanceProfile leg = plan_leg(Vector3(1, 2, 3), Vector3(7, 10, 3), {2.0, 1.0, 1.0, 1.0});
  EXPECT_NEAR(leg.distance(), 10.0, 1e-12);
  const PositionSetpoint start = setpoint_at(leg, 0.0);
  EXPECT_TRUE(start.position.isApprox(Vector3(1, 2, 3)));
  EXPECT_TRUE(start.velocity.isZero(0.0));
  const PositionSetpoint end = setpoint_at(leg, leg.duration() + 1.0);
  EXPECT_TRUE(end.position.isApprox(Vector3(7, 10, 3)));
  EXPECT_TRUE(end.velocity.isZero(1e-12));
}

TEST(SetpointAt, CruiseVelocityAlongLeg)
{
  const GuidanceProfile leg = plan_leg(Vector3::Zero(), Vector3(6, 8, 0), {2.0, 1.0, 1.0, 1.0});
  const PositionSetpoint mid = setpoint_at(leg, 4.0);
  EXPECT_NEAR(mid.velocity.norm(), 2.0, 1e-12);
  EXPECT_NEAR(mid.velocity.normalized().dot(Vector3(0.6, 0.8, 0.0)), 1.0, 1e-12);
}

TEST(SetpointAt, DegenerateLegHolds)
{
  const GuidanceProfile leg = plan_leg(Vector3(1, 1, 1), Vector3(1, 1, 1), {2.0, 1.0, 1.0, 1.0});
  EXPECT_EQ(leg.duration(), 0.0);
  EXPECT_TRUE(setpoint_at(leg, 0.5).position.isApprox(Vector3(1, 1, 1)));
}

TEST(PlanLeg, RejectsNonFiniteWaypoints)
{
  EXPECT_THROW(plan_leg(Vector3(std::nan(""), 0, 0), Vector3::Zero(), {}), std::invalid_argument);
}

TEST(Azimuth, ConstantWhenNoTurn)
{
  const AzimuthSetpoint s = azimuth_setpoint_at(0.4, 0.4, {2.0, 1.0, 2.0, 0.5}, 1.0);
  EXPECT_DOUBLE_EQ(s.azimuth, 0.4);
  EXPECT_EQ(s.rate, 0.0);
}

TEST(Azimuth, QuarterTurnIsTriangle)
{
  const GuidanceLimits limits{2.0, 1.0, 2.0, 0.5};
  const AzimuthProfile p = plan_azimuth(0.0, std::numbers::pi / 2, limits);
  EXPECT_EQ(p.motion.shape, ProfileShape::triangle);
  EXPECT_NEAR(p.duration(), 2.0 * std::sqrt(std::numbers::pi / (2.0 * 0.5)), 1e-12);
  EXPECT_NEAR(p.duration(), 3.5449, 1e-4);
  EXPECT_NEAR(azimuth_setpoint_at(p, p.duration()).azimuth, std::numbers::pi / 2, 1e-12);
}

TEST(Azimuth, HalfTurnsGoOppositeWays)
{
  const GuidanceLimits limits{2.0, 1.0, 2.0, 0.5};
  const AzimuthProfile out = plan_azimuth(0.0, std::numbers::pi, limits);
  const AzimuthProfile back = plan_azimuth(std::numbers::pi, 0.0, limits);
  EXPECT_EQ(out.direction, -back.direction);
  EXPECT_GT(azimuth_setpoint_at(out, 1.0).rate * azimuth_setpoint_at(back, 1.0).rate * -1.0, 0.0);
  EXPECT_NEAR(std::abs(wrap_angle(azimuth_setpoint_at(back, back.duration()).azimuth)), 0.0, 1e-12);
}

TEST(Azimuth, ShortestWayAcrossWrap)
{
  EXPECT_NEAR(azimuth_delta(3.0, -3.0), 2.0 * std::numbers::pi - 6.0, 1e-12);
  EXPECT_NEAR(azimuth_delta(-3.0, 3.0), -(2.0 * std::numbers::pi - 6.0), 1e-12);
  EXPECT_NEAR(wrap_angle(3.0 * std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(wrap_angle(-std::numbers::pi), std::numbers::pi, 1e-12);
}
