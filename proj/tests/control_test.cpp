// Copyright 2026 The softarm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "softarm/control.hpp"
#include "softarm/sysid.hpp"

namespace softarm {
namespace {

using Cplx = std::complex<double>;

constexpr double kDeg = std::numbers::pi / 180.0;

ControllerConfig DefaultController() {
  ControllerConfig cfg;
  cfg.kappa = default_kappa(default_joint_parameters());
  return cfg;
}

TEST(ControllerStep, ZeroErrorGivesZeroOutput) {
  const ControllerConfig cfg = DefaultController();
  ControllerState state;
  for (int i = 0; i < 10; ++i) {
    const auto out = controller_step({0.0, 0.0}, Schedule{1.1, 0.1}, state,
                                     MechanicalParams{}, default_joint_parameters(), cfg);
    EXPECT_EQ(out.dp.alpha, 0.0);
    EXPECT_EQ(out.dp.beta, 0.0);
    EXPECT_FALSE(out.fault);
  }
}

TEST(ControllerStep, ConstantErrorRampsThroughIntegralChannel) {
  const ControllerConfig cfg = DefaultController();
  const JointParameters joint = default_joint_parameters();
  const Schedule sched{1.1, 0.0};
  const double e = 0.01;
  ControllerState state;
  std::vector<PerAxis<double>> out;
  for (int i = 0; i < 60; ++i) {
    out.push_back(controller_step({e, -e}, sched, state, MechanicalParams{}, joint, cfg).dp);
  }
  for (Axis axis : kAxes) {
    const double sign = axis == Axis::kAlpha ? 1.0 : -1.0;
    const double growth = cfg.kappa[axis] * joint.at(axis, 1.1).k * e * cfg.ts;
    EXPECT_NEAR(out[59][axis] - out[58][axis], sign * growth, 1e-12);
  }
}

TEST(ControllerStep, NonFiniteErrorFaults) {
  const ControllerConfig cfg = DefaultController();
  ControllerState state;
  controller_step({0.01, 0.02}, Schedule{}, state, MechanicalParams{},
                  default_joint_parameters(), cfg);
  const double integral = state.axes.alpha.integral;
  const auto out = controller_step({std::numeric_limits<double>::quiet_NaN(), 0.0},
                                   Schedule{}, state, MechanicalParams{},
                                   default_joint_parameters(), cfg);
  EXPECT_TRUE(out.fault);
  EXPECT_EQ(out.dp.alpha, 0.0);
  EXPECT_EQ(out.dp.beta, 0.0);
  EXPECT_EQ(state.axes.alpha.integral, integral);
}

TEST(ControllerStep, IntegratorIsBounded) {
  const ControllerConfig cfg = DefaultController();
  const JointParameters joint = default_joint_parameters();
  ControllerState state;
  for (int i = 0; i < 1000; ++i) {
    controller_step({1.0, 1.0}, Schedule{}, state, MechanicalParams{}, joint, cfg);
  }
  const double limit = cfg.integrator_limit / (cfg.kappa.alpha * joint.at(Axis::kAlpha, 1.1).k);
  EXPECT_NEAR(state.axes.alpha.integral, limit, 1e-12);
}

// Tustin image of C(s) at the prewarped frequency.
TEST(ControllerStep, SinusoidalResponseMatchesBilinearImage) {
  const ControllerConfig cfg = DefaultController();
  const JointParameters joint = default_joint_parameters();
  const MechanicalParams mech;
  const Schedule sched{1.05, 0.2};
  const double f = 1.0;
  const int per_period = 50;
  const int periods = 20;
  ControllerState state;
  std::vector<double> in;
  std::vector<double> out;
  for (int k = 0; k < per_period * periods; ++k) {
    const double e = 0.01 * std::sin(2.0 * std::numbers::pi * f * k * cfg.ts);
    in.push_back(e);
    out.push_back(controller_step({e, 0.0}, sched, state, mech, joint, cfg).dp.alpha);
  }
  const std::size_t begin = static_cast<std::size_t>(per_period * (periods - 5));
  const auto ci = sine_correlate(std::span<const double>(in).subspan(begin), f, cfg.ts);
  const auto co = sine_correlate(std::span<const double>(out).subspan(begin), f, cfg.ts);
  const Cplx measured = co.phasor() / ci.phasor();

  const double w = 2.0 / cfg.ts * std::tan(std::numbers::pi * f * cfg.ts);
  const Cplx s(0.0, w);
  const AxisValues v = joint.at(Axis::kAlpha, sched.p_bar);
  const double inertia = mech.inertia(sched.mass);
  const Cplx want = cfg.kappa.alpha * (inertia * s * s + v.d * s + v.k) /
                    (s * (cfg.derivative_filter * s + 1.0));
  EXPECT_NEAR(std::abs(measured - want) / std::abs(want), 0.0, 1e-9);
}

TEST(ClosedLoopRoots, HandExample) {
  const auto [slow, fast] = closed_loop_roots(0.05, 1.0);
  EXPECT_NEAR(slow.real(), -1.0557280900008, 1e-12);
  EXPECT_NEAR(fast.real(), -18.944271909999, 1e-12);
  EXPECT_EQ(slow.imag(), 0.0);
  EXPECT_NEAR(slow.real(), -1.06, 5e-3);
  EXPECT_NEAR(fast.real(), -18.94, 5e-3);
}

TEST(ClosedLoopRoots, StableOverTheWholeGrid) {
  const JointParameters joint = default_joint_parameters();
  for (double m : {0.0, 0.1, 0.2}) {
    SCOPED_TRACE(m);
    for (double p_bar : {1.0, 1.1, 1.2}) {
      for (double kappa_eta : {0.5, 1.0, 2.0, 5.0, 10.0}) {
        for (Axis axis : kAxes) {
          const auto [r1, r2] = closed_loop_roots(joint.at(axis, p_bar).t, kappa_eta);
          EXPECT_LT(r1.real(), 0.0);
          EXPECT_LT(r2.real(), 0.0);
        }
      }
    }
  }
}

TEST(ClosedLoopRoots, FilteredLoopStableOverTheGrid) {
  // s (τ s + 1)(T s + 1) + κη once the derivative filter is kept.
  const JointParameters joint = default_joint_parameters();
  const double tau = ControllerConfig{}.derivative_filter;
  for (double p_bar : {1.0, 1.1, 1.2}) {
    for (double kappa_eta : {0.5, 1.0, 2.0, 5.0, 10.0}) {
      const double t = joint.at(Axis::kBeta, p_bar).t;
      Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
      companion(1, 0) = 1.0;
      companion(2, 1) = 1.0;
      companion(0, 2) = -kappa_eta / (tau * t);
      companion(1, 2) = -1.0 / (tau * t);
      companion(2, 2) = -(tau + t) / (tau * t);
      const Eigen::Vector3cd roots = companion.eigenvalues();
      for (int i = 0; i < 3; ++i) EXPECT_LT(roots(i).real(), 0.0);
    }
  }
}

TEST(KappaForSlowPole, PlacesSlowRoot) {
  const JointParameters joint = default_joint_parameters();
  const AxisValues a = joint.at(Axis::kAlpha, 1.1);
  const double kappa = kappa_for_slow_pole(a, 2.0);
  const auto [slow, fast] = closed_loop_roots(a.t, kappa * a.eta);
  EXPECT_NEAR(slow.real(), -4.0 * std::numbers::pi, 1e-9);
  EXPECT_LT(fast.real(), slow.real());
  EXPECT_NEAR(kappa, 6.501, 1e-3);
  EXPECT_THROW(kappa_for_slow_pole(a, 0.0), InvalidInput);
}

TEST(KappaForSlowPole, FallsBackToDoubleRoot) {
  const AxisValues b = default_joint_parameters().at(Axis::kBeta, 1.1);
  const double kappa = kappa_for_slow_pole(b, 2.0);
  EXPECT_NEAR(4.0 * b.t * kappa * b.eta, 1.0, 1e-12);
  const auto [r1, r2] = closed_loop_roots(b.t, kappa * b.eta);
  EXPECT_NEAR(r1.real(), r2.real(), 1e-6);
  EXPECT_NEAR(-r1.real() / (2.0 * std::numbers::pi), 2.0, 0.02);
}

TEST(FeedforwardBeta, Examples) {
  MechanicalParams mech;
  JointParameters joint = default_joint_parameters();
  joint.axes.beta.eta = Polynomial{{1.0}};
  EXPECT_NEAR(feedforward_beta(0.0, Schedule{1.1, 0.0}, mech, joint), 0.34130, 5e-5);
  EXPECT_NEAR(feedforward_beta(0.0, Schedule{1.1, 0.0}, mech, joint),
              0.5 * 0.2 * 9.81 * 0.3479, 1e-12);
  EXPECT_NEAR(feedforward_beta(std::numbers::pi / 2.0, Schedule{1.1, 0.2}, mech, joint), 0.0,
              1e-15);
  // M/2 + m doubles from 0.1 to 0.2.
  EXPECT_NEAR(feedforward_beta(0.3, Schedule{1.1, 0.1}, mech, joint),
              2.0 * feedforward_beta(0.3, Schedule{1.1, 0.0}, mech, joint), 1e-12);
}

class Cascade : public ::testing::Test {
 protected:
  PlantConfig plant_;
  CascadeController ctrl_{DefaultController(), plant_.mech, plant_.joint, plant_.pressure};
};

TEST_F(Cascade, ZeroErrorAtVerticalGivesFloorPressures) {
  const CascadeSetpoint sp{0.0, std::numbers::pi / 2.0, 1.15, 0.1};
  const auto out = ctrl_.step(sp, {0.0, 0.0}, {sp.alpha, sp.beta});
  EXPECT_EQ(out.pressures, xi({1.15, 0.0, 0.0}));
  EXPECT_FALSE(out.saturated);
}

TEST_F(Cascade, FloorAlwaysEqualsPBarSetpoint) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> angle(-0.5, 0.5);
  std::uniform_real_distribution<double> level(1.0, 1.2);
  for (int i = 0; i < 500; ++i) {
    const CascadeSetpoint sp{angle(rng), angle(rng), level(rng), 0.0};
    const auto out = ctrl_.step(sp, {0.0, 0.0}, {angle(rng), angle(rng)});
    ASSERT_EQ(out.pressures.min(), sp.p_bar);
    ASSERT_EQ(out.delta.p_bar, sp.p_bar);
  }
}

TEST_F(Cascade, FlagsSaturation) {
  const CascadeSetpoint sp{1.2, 0.0, 1.1, 0.0};
  const auto out = ctrl_.step(sp, {0.0, 0.0}, {-1.2, 0.0});
  EXPECT_TRUE(out.saturated);
  const double held = ctrl_.state().axes.alpha.integral;
  ctrl_.step(sp, {0.0, 0.0}, {-1.2, 0.0});
  EXPECT_EQ(ctrl_.state().axes.alpha.integral, held);
}

// Closed loop of the cascade on the plant at 50 Hz.
double SettledError(PlantConfig plant_cfg, const CascadeSetpoint& sp, double seconds,
                    bool check_passthrough) {
  CascadeController ctrl(DefaultController(), plant_cfg.mech, plant_cfg.joint,
                         plant_cfg.pressure);
  ctrl.initialize_at_rest(CascadeSetpoint{0.0, 0.0, sp.p_bar, sp.mass}, plant_cfg);
  Plant plant(plant_cfg);
  plant.reset(equilibrium_state(plant_cfg, {}, sp.p_bar, sp.mass));
  const int steps = static_cast<int>(std::lround(seconds / 0.02));
  for (int k = 0; k < steps; ++k) {
    const auto out = ctrl.step(sp, {0.0, 0.0}, plant.measure());
    if (check_passthrough) {
      EXPECT_EQ(out.delta.p_bar, sp.p_bar);
      EXPECT_NEAR(plant.state().p_bar, sp.p_bar, 1e-12);
    }
    plant.advance(PlantInputs{out.pressures, sp.mass, 0.0}, 0.02);
  }
  return std::max(std::abs(plant.state().angle.alpha - sp.alpha),
                  std::abs(plant.state().angle.beta - sp.beta));
}

TEST(CascadeLoop, NoSteadyStateErrorOnNominalPlant) {
  const CascadeSetpoint sp{20.0 * kDeg, -10.0 * kDeg, 1.1, 0.0};
  EXPECT_LT(SettledError(PlantConfig{}, sp, 5.0, true), 0.05 * kDeg);
}

TEST(CascadeLoop, NoSteadyStateErrorUnderGravityWithLoad) {
  PlantConfig cfg;
  cfg.disturbance.gravity = true;
  const CascadeSetpoint sp{-10.0 * kDeg, 10.0 * kDeg, 1.15, 0.2};
  EXPECT_LT(SettledError(cfg, sp, 5.0, true), 0.05 * kDeg);
}

TEST(CascadeLoop, UnreachableSetpointStaysSaturated) {
  PlantConfig cfg;
  cfg.disturbance.gravity = true;
  const CascadeSetpoint sp{-15.0 * kDeg, 25.0 * kDeg, 1.2, 0.2};
  EXPECT_GT(SettledError(cfg, sp, 5.0, false), 1.0 * kDeg);
}

TEST(CascadeLoop, InitializedAtRestNeedsNoCorrection) {
  PlantConfig cfg;
  cfg.disturbance.gravity = true;
  const CascadeSetpoint sp{0.2, -0.3, 1.1, 0.2};
  CascadeController ctrl(DefaultController(), cfg.mech, cfg.joint, cfg.pressure);
  ctrl.initialize_at_rest(sp, cfg);
  const auto out = ctrl.step(sp, {0.0, 0.0}, {sp.alpha, sp.beta});
  const PlantState rest = equilibrium_state(cfg, {sp.alpha, sp.beta}, sp.p_bar, sp.mass);
  const DeltaRepresentation need = actual_delta(rest);
  EXPECT_NEAR(out.delta.dp_alpha, need.dp_alpha, 1e-12);
  EXPECT_NEAR(out.delta.dp_beta, need.dp_beta, 1e-12);
}

// Continuous closed loop C P / (1 + C P) with the controller in its
// parallel-channel form and the plant scheduled on the same mass.
Cplx ClosedLoop(double m, double p_bar, double f, Axis axis) {
  const ControllerConfig cfg = DefaultController();
  const JointParameters joint = default_joint_parameters();
  const MechanicalParams mech;
  const AxisValues v = joint.at(axis, p_bar);
  const double inertia = mech.inertia(m);
  const double tau = cfg.derivative_filter;
  const Cplx s(0.0, 2.0 * std::numbers::pi * f);
  const Cplx c = cfg.kappa[axis] *
                 (v.k / s + inertia / tau + (v.d - v.k * tau - inertia / tau) / (tau * s + 1.0));
  const Cplx p = physical_model(v, inertia)(s);
  return c * p / (1.0 + c * p);
}

TEST(CascadeLoop, ClosedLoopIsMassInvariant) {
  for (Axis axis : kAxes) {
    for (double p_bar : {1.0, 1.1, 1.2}) {
      for (double f : log_grid(0.05, 20.0, 30)) {
        const Cplx light = ClosedLoop(0.0, p_bar, f, axis);
        const Cplx heavy = ClosedLoop(0.2, p_bar, f, axis);
        EXPECT_LE(std::abs(light - heavy), 1e-9 * std::max(1.0, std::abs(light)));
      }
    }
  }
}

}  // namespace
}  // namespace softarm
