#include <quadtune/autopilot.hpp>
#include <quadtune/vehicle.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace quadtune;

namespace
{
VehicleParameters no_drag()
{
  VehicleParameters p;
  p.drag_coeff = 0.0;
  return p;
}

ActuatorCommand hover_command(const VehicleParameters& p)
{
  ActuatorCommand c;
  c.rotor_speeds.setConstant(p.hover_rotor_speed());
  return c;
}

VehicleState hovering(const VehicleParameters& p, double z)
{
  VehicleState s = VehicleState::at_rest(Vector3(0, 0, z), 0.0);
  s.rotor_speeds.setConstant(p.hover_rotor_speed());
  return s;
}
}  // namespace

TEST(Derivatives, FreeFallAcceleration)
{
  const VehicleParameters p = no_drag();
  const VehicleState s = VehicleState::at_rest(Vector3(0, 0, 10), 0.0);
  const PackedState dx = derivatives(s, ActuatorCommand{}, p);
  EXPECT_NEAR(dx(3), 0.0, 1e-15);
  EXPECT_NEAR(dx(4), 0.0, 1e-15);
  EXPECT_NEAR(dx(5), -kGravity, 1e-12);
  EXPECT_TRUE(dx.segment<3>(10).isZero(1e-15));
}

TEST(Derivatives, HoverIsEquilibrium)
{
  const VehicleParameters p;
  const PackedState dx = derivatives(hovering(p, 5.0), hover_command(p), p);
  EXPECT_TRUE(dx.segment<3>(3).isZero(1e-12));
  EXPECT_TRUE(dx.segment<3>(10).isZero(1e-12));
  EXPECT_NEAR(4.0 * p.thrust_coeff * std::pow(p.hover_rotor_speed(), 2), p.effective_mass() * kGravity, 1e-12);
}

TEST(Derivatives, YawSplitOnlyTurnsAboutBodyZ)
{
  const VehicleParameters p;
  const ActuatorCommand cmd = mix(p.effective_mass() * kGravity, Vector3(0, 0, 0.05), p);
  VehicleState s = hovering(p, 5.0);
  s.rotor_speeds = cmd.rotor_speeds;
  const PackedState dx = derivatives(s, cmd, p);
  EXPECT_NEAR(dx(10), 0.0, 1e-12);
  EXPECT_NEAR(dx(11), 0.0, 1e-12);
  EXPECT_GT(dx(12), 0.0);
}

TEST(IntegrateStep, FreeFallMatchesClosedForm)
{
  const VehicleParameters p = no_drag();
  VehicleState s = VehicleState::at_rest(Vector3(0, 0, 10), 0.0);
  for (int i = 0; i < 1000; ++i) {
    s = integrate_step(s, ActuatorCommand{}, p, 1e-3);
  }
  EXPECT_NEAR(s.position.z(), 10.0 - 0.5 * kGravity, 1e-6);
  EXPECT_NEAR(s.velocity.z(), -kGravity, 1e-6);
}

TEST(IntegrateStep, HoverDriftBelowMicrometer)
{
  const VehicleParameters p;
  VehicleState s = hovering(p, 5.0);
  const ActuatorCommand cmd = hover_command(p);
  for (int i = 0; i < 10000; ++i) {
    s = integrate_step(s, cmd, p, 1e-3);
  }
  EXPECT_LT((s.position - Vector3(0, 0, 5)).norm(), 1e-6);
}

TEST(IntegrateStep, RestsOnGround)
{
  const VehicleParameters p;
  VehicleState s = VehicleState::at_rest(Vector3(1, 2, 0), 0.3);
  for (int i = 0; i < 1000; ++i) {
    s = integrate_step(s, ActuatorCommand{}, p, 1e-3);
  }
  EXPECT_TRUE(s.position.isApprox(Vector3(1, 2, 0)));
  EXPECT_TRUE(s.velocity.isZero(0.0));
}

TEST(IntegrateStep, RejectsBadStep)
{
  const VehicleParameters p;
  const VehicleState s = VehicleState::at_rest(Vector3::Zero(), 0.0);
  EXPECT_THROW(integrate_step(s, ActuatorCommand{}, p, 0.0), std::invalid_argument);
  EXPECT_THROW(integrate_step(s, ActuatorCommand{}, p, 0.01), std::invalid_argument);
}

TEST(IntegrateStep, EnergyConservedWithoutRotorsOrDrag)
{
  VehicleParameters p = no_drag();
  p.ground_contact = false;
  VehicleState s = VehicleState::at_rest(Vector3(0, 0, 1000), 0.0);
  s.angular_rate = Vector3(1.0, -0.5, 2.0);
  s.velocity = Vector3(0.5, 0.0, 3.0);
  const double e0 = total_energy(s, p);
  for (int i = 0; i < 10000; ++i) {
    s = integrate_step(s, ActuatorCommand{}, p, 1e-3);
    ASSERT_NEAR(s.attitude.norm(), 1.0, 1e-9);
  }
  EXPECT_LT(std::abs(total_energy(s, p) - e0) / std::abs(e0), 1e-6);
}

TEST(IntegrateStep, SphericalBodyKeepsItsSpin)
{
  VehicleParameters p = no_drag();
  p.ground_contact = false;
  p.inertia = Vector3::Constant(0.03);
  VehicleState s = VehicleState::at_rest(Vector3(0, 0, 1000), 0.0);
  const Vector3 w0(0.7, -1.3, 2.1);
  s.angular_rate = w0;
  for (int i = 0; i < 10000; ++i) {
    s = integrate_step(s, ActuatorCommand{}, p, 1e-3);
  }
  EXPECT_LT((s.angular_rate - w0).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(VehicleParameters, HoverSpeedScalesWithSquareRootOfMass)
{
  VehicleParameters p;
  const double w1 = p.hover_rotor_speed();
  for (double alpha : {0.5, 0.75, 1.0, 1.25, 1.5}) {
    p.mass_scale = alpha;
    EXPECT_NEAR(p.hover_rotor_speed() / w1, std::sqrt(alpha), 1e-12) << alpha;
    EXPECT_NEAR(rotor_wrench(Vector4::Constant(p.hover_rotor_speed()), p)(0), alpha * p.mass * kGravity, 1e-9);
  }
}

TEST(VehicleParameters, ValidationRejectsNonPositive)
{
  VehicleParameters p;
  p.mass = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = VehicleParameters{};
  p.mass_scale = -1.0;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(RotorLayout, InverseIsInverse)
{
  const VehicleParameters p;
  EXPECT_TRUE((RotorLayout::allocation(p) * RotorLayout::allocation_inverse(p)).isIdentity(1e-12));
}

TEST(Measure, NoiseOffReturnsState)
{
  VehicleState s = VehicleState::at_rest(Vector3(1, 2, 3), 0.4);
  s.velocity = Vector3(0.1, 0.2, 0.3);
  s.angular_rate = Vector3(-0.1, 0.0, 0.2);
  std::mt19937_64 rng(1);
  const Measurement m = measure(s, MeasurementNoise{}, rng);
  EXPECT_TRUE(m.position == s.position);
  EXPECT_TRUE(m.velocity == s.velocity);
  EXPECT_TRUE(m.angular_rate == s.angular_rate);
  EXPECT_TRUE(m.attitude.coeffs() == s.attitude.coeffs());
}

TEST(Measure, SeededStreamsRepeat)
{
  const VehicleState s = VehicleState::at_rest(Vector3(1, 2, 3), 0.0);
  const MeasurementNoise noise{true, 0.01, 0.02, 0.001, 0.003};
  std::mt19937_64 a(42);
  std::mt19937_64 b(42);
  for (int i = 0; i < 100; ++i) {
    const Measurement ma = measure(s, noise, a);
    const Measurement mb = measure(s, noise, b);
    ASSERT_TRUE(ma.position == mb.position);
    ASSERT_TRUE(ma.attitude.coeffs() == mb.attitude.coeffs());
  }
}

TEST(Measure, PositionNoiseHasConfiguredSpread)
{
  const VehicleState s = VehicleState::at_rest(Vector3::Zero(), 0.0);
  const MeasurementNoise noise{true, 1e-3, 0.0, 0.0, 0.0};
  std::mt19937_64 rng(5);
  double sum = 0.0;
  double sum_sq = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double x = measure(s, noise, rng).position.x();
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double std_dev = std::sqrt(sum_sq / n - mean * mean);
  EXPECT_NEAR(std_dev, 1e-3, 0.05e-3);
}
