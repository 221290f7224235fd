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

/**
 * @file plant.hpp
 *
 * Ground-truth simulator of the two-axis soft arm.
 *
 * Per axis i the link is a linearized pendulum driven by a first-order
 * torque lag,
 *
 *   (m + M/4) R0² θ̈ + d θ̇ + k θ = τ + τ_dist
 *   T τ̇ = η Δp − τ
 *
 * where k, d, η, T are polynomials in the stiffness level p̄. The pressures
 * follow their setpoints through the closed inner pressure loop, abstracted
 * as a first-order lag, and Δp is computed from those pressure states. The
 * stiffness level follows the commanded lower bound through the same lag;
 * taking the minimum of the lagged pressures instead would ripple whenever
 * the lowest actuator changes. Extra torques (gravity on β, axis coupling, p̄-rate
 * kick, eject impulse) are switched on through DisturbanceConfig.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "softarm/allocation.hpp"
#include "softarm/errors.hpp"
#include "softarm/parameters.hpp"

namespace softarm {

struct PlantConfig {
  MechanicalParams mech{};
  JointParameters joint = default_joint_parameters();
  DisturbanceConfig disturbance{};
  PressureConfig pressure{};
  ElongationMap elongation{};
  double dt = 1e-3;                // s, integration step
  double angle_limit = 1.309;      // rad, mechanical end stop (75°)
  double divergence_bound = 1e6;

  void validate() const {
    mech.validate();
    joint.validate(pressure.p_bar);
    disturbance.validate();
    if (!(dt > 0.0) || dt > 1e-3 + 1e-15) {
      throw InvalidInput("integration step must satisfy 0 < dt <= 1 ms");
    }
    if (!(pressure.lag_time_constant >= 0.0) || !(pressure.max > 0.0)) {
      throw InvalidInput("pressure lag must be >= 0 and limit > 0");
    }
  }
};

struct PlantState {
  PerAxis<double> angle{};
  PerAxis<double> rate{};
  PerAxis<double> torque{};
  AbsolutePressures pressure{};
  double p_bar = 0.0;  // stiffness level, bar

  bool operator==(const PlantState&) const = default;
};

/// Time derivative of every PlantState field.
using StateDerivative = PlantState;

/// Exogenous quantities held constant over one integration step.
struct PlantInputs {
  AbsolutePressures setpoint{};
  double load_mass = 0.0;
  double beta_torque = 0.0;  // external torque on β (eject window), N·m
};

struct SaturatedSetpoint {
  AbsolutePressures setpoint{};
  bool saturated = false;
};

/// Clamps each actuator setpoint into [floor, max].
inline SaturatedSetpoint saturate_setpoint(const AbsolutePressures& setpoint,
                                           const PressureConfig& cfg) {
  SaturatedSetpoint out{setpoint, false};
  for (double* p : {&out.setpoint.p_a, &out.setpoint.p_b, &out.setpoint.p_c}) {
    const double c = std::clamp(*p, cfg.floor, cfg.max);
    if (c != *p) out.saturated = true;
    *p = c;
  }
  return out;
}

struct PressureLoopResult {
  AbsolutePressures pressure{};
  bool saturated = false;
};

/// Exact response of the three closed pressure loops after `elapsed`
/// seconds with a constant setpoint. A zero lag means ideal tracking.
inline PressureLoopResult inner_pressure_loop(const AbsolutePressures& setpoint,
                                              const AbsolutePressures& current,
                                              double elapsed,
                                              const PressureConfig& cfg) {
  const auto [sp, saturated] = saturate_setpoint(setpoint, cfg);
  if (cfg.lag_time_constant <= 0.0) return {sp, saturated};
  const double decay = std::exp(-elapsed / cfg.lag_time_constant);
  auto follow = [decay](double target, double now) {
    return target + (now - target) * decay;
  };
  return {AbsolutePressures{follow(sp.p_a, current.p_a),
                            follow(sp.p_b, current.p_b),
                            follow(sp.p_c, current.p_c)},
          saturated};
}

/// Stiffness level after `elapsed` seconds with the commanded lower bound.
inline double lagged_p_bar(const AbsolutePressures& setpoint, double current,
                           double elapsed, const PressureConfig& cfg) {
  const double target = saturate_setpoint(setpoint, cfg).setpoint.min();
  if (cfg.lag_time_constant <= 0.0) return target;
  return target +
         (current - target) * std::exp(-elapsed / cfg.lag_time_constant);
}

/// Decoupled pressure differences and lower bound of the actual pressures.
inline DeltaRepresentation actual_delta(const PlantState& state) {
  return xi_inverse(state.pressure);
}

/// Parameters are evaluated at p̄ clamped into the admissible interval.
inline AxisValues plant_axis_values(const PlantConfig& cfg, Axis axis,
                                    double p_bar) {
  const auto& iv = cfg.pressure.p_bar;
  return cfg.joint.at(axis, std::clamp(p_bar, iv.min, iv.max));
}

inline void require_finite_state(const PlantState& s, double bound) {
  const double values[] = {s.angle.alpha,  s.angle.beta,   s.rate.alpha,
                           s.rate.beta,    s.torque.alpha, s.torque.beta,
                           s.pressure.p_a, s.pressure.p_b, s.pressure.p_c,
                           s.p_bar};
  for (double v : values) {
    if (!std::isfinite(v) || std::abs(v) > bound) {
      throw SimulationDiverged("plant state diverged");
    }
  }
}

inline StateDerivative eval_dynamics(const PlantState& state,
                                     const PlantInputs& in,
                                     const PlantConfig& cfg) {
  require_finite_state(state, cfg.divergence_bound);
  const DisturbanceConfig& dist = cfg.disturbance;
  const DeltaRepresentation actual = actual_delta(state);
  const double tau_p = cfg.pressure.lag_time_constant;

  StateDerivative der{};
  double p_bar_rate = 0.0;
  if (tau_p > 0.0) {
    const auto sp = saturate_setpoint(in.setpoint, cfg.pressure).setpoint;
    der.pressure = AbsolutePressures{(sp.p_a - state.pressure.p_a) / tau_p,
                                     (sp.p_b - state.pressure.p_b) / tau_p,
                                     (sp.p_c - state.pressure.p_c) / tau_p};
    p_bar_rate = (sp.min() - state.p_bar) / tau_p;
    der.p_bar = p_bar_rate;
  }

  const PerAxis<double> dp_eff{
      actual.dp_alpha + dist.cross_coupling * actual.dp_beta,
      actual.dp_beta + dist.cross_coupling * actual.dp_alpha};
  const double inertia = cfg.mech.inertia(in.load_mass);

  for (Axis axis : kAxes) {
    const AxisValues v = plant_axis_values(cfg, axis, state.p_bar);
    double torque = state.torque[axis] - v.d * state.rate[axis] -
                    v.k * state.angle[axis];
    torque += dist.pbar_kick_gain * v.k * p_bar_rate;
    if (axis == Axis::kBeta) {
      if (dist.gravity) {
        torque -= cfg.mech.gravity_torque_amplitude(in.load_mass) *
                  std::cos(state.angle.beta);
      }
      torque += in.beta_torque;
    }
    der.angle[axis] = state.rate[axis];
    der.rate[axis] = torque / inertia;
    der.torque[axis] = (v.eta * dp_eff[axis] - state.torque[axis]) / v.t;
  }
  return der;
}

namespace detail {

inline PlantState add_scaled(const PlantState& s, const StateDerivative& d,
                             double h) {
  PlantState out = s;
  for (Axis axis : kAxes) {
    out.angle[axis] += h * d.angle[axis];
    out.rate[axis] += h * d.rate[axis];
    out.torque[axis] += h * d.torque[axis];
  }
  return out;
}

}  // namespace detail

struct StepResult {
  PlantState state{};
  bool saturated = false;
  bool limit_hit = false;
};

/// Fourth-order Runge-Kutta step of the mechanical and torque states. The
/// pressure states use the exact lag solution at every stage.
inline StepResult step(const PlantState& state, const PlantInputs& in,
                       const PlantConfig& cfg, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("step requires dt > 0");
  auto stage = [&](const PlantState& mech, double elapsed) {
    PlantState s = mech;
    s.pressure = inner_pressure_loop(in.setpoint, state.pressure, elapsed,
                                     cfg.pressure)
                     .pressure;
    s.p_bar = lagged_p_bar(in.setpoint, state.p_bar, elapsed, cfg.pressure);
    return s;
  };
  const PlantState s1 = stage(state, 0.0);
  const StateDerivative k1 = eval_dynamics(s1, in, cfg);
  const PlantState s2 = stage(detail::add_scaled(state, k1, 0.5 * dt), 0.5 * dt);
  const StateDerivative k2 = eval_dynamics(s2, in, cfg);
  const PlantState s3 = stage(detail::add_scaled(state, k2, 0.5 * dt), 0.5 * dt);
  const StateDerivative k3 = eval_dynamics(s3, in, cfg);
  const PlantState s4 = stage(detail::add_scaled(state, k3, dt), dt);
  const StateDerivative k4 = eval_dynamics(s4, in, cfg);

  StepResult out;
  out.state = state;
  for (Axis axis : kAxes) {
    auto combine = [&](double x, double a, double b, double c, double d) {
      return x + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d);
    };
    out.state.angle[axis] = combine(state.angle[axis], k1.angle[axis],
                                    k2.angle[axis], k3.angle[axis],
                                    k4.angle[axis]);
    out.state.rate[axis] = combine(state.rate[axis], k1.rate[axis],
                                   k2.rate[axis], k3.rate[axis], k4.rate[axis]);
    out.state.torque[axis] = combine(state.torque[axis], k1.torque[axis],
                                     k2.torque[axis], k3.torque[axis],
                                     k4.torque[axis]);
  }
  const auto pressures =
      inner_pressure_loop(in.setpoint, state.pressure, dt, cfg.pressure);
  out.state.pressure = pressures.pressure;
  out.state.p_bar = lagged_p_bar(in.setpoint, state.p_bar, dt, cfg.pressure);
  out.saturated = pressures.saturated;

  // End stop: the angle is held at the limit and outward motion is removed.
  for (Axis axis : kAxes) {
    double& a = out.state.angle[axis];
    if (std::abs(a) > cfg.angle_limit) {
      a = std::copysign(cfg.angle_limit, a);
      if (out.state.rate[axis] * a > 0.0) out.state.rate[axis] = 0.0;
      out.limit_hit = true;
    }
  }
  require_finite_state(out.state, cfg.divergence_bound);
  return out;
}

/// Stateful simulator: owns the state, clock and measurement-noise stream.
class Plant {
 public:
  explicit Plant(PlantConfig cfg, std::uint64_t seed = 1)
      : cfg_(std::move(cfg)), rng_(seed) {}

  const PlantConfig& config() const { return cfg_; }
  PlantConfig& mutable_config() { return cfg_; }
  const PlantState& state() const { return state_; }
  double time() const { return time_; }

  void reset(const PlantState& state, double time = 0.0) {
    state_ = state;
    time_ = time;
  }

  /// Advances by `duration` in steps of the configured dt. Returns true if
  /// any step saturated a pressure setpoint.
  bool advance(const PlantInputs& in, double duration) {
    const auto steps =
        static_cast<long>(std::llround(duration / cfg_.dt));
    bool saturated = false;
    for (long i = 0; i < steps; ++i) {
      const StepResult r = step(state_, in, cfg_, cfg_.dt);
      state_ = r.state;
      saturated = saturated || r.saturated;
      limit_hit_ = limit_hit_ || r.limit_hit;
    }
    time_ += static_cast<double>(steps) * cfg_.dt;
    return saturated;
  }

  /// Angle measurement with additive Gaussian noise.
  PerAxis<double> measure() {
    PerAxis<double> y = state_.angle;
    if (cfg_.disturbance.noise_std > 0.0) {
      std::normal_distribution<double> noise(0.0, cfg_.disturbance.noise_std);
      y.alpha += noise(rng_);
      y.beta += noise(rng_);
    }
    return y;
  }

  bool limit_hit() const { return limit_hit_; }

 private:
  PlantConfig cfg_;
  PlantState state_{};
  double time_ = 0.0;
  bool limit_hit_ = false;
  std::mt19937_64 rng_;
};

/// Plant state at rest with both angles held at `angles` under constant
/// pressures: torques balance stiffness (and gravity when enabled).
inline PlantState equilibrium_state(const PlantConfig& cfg,
                                    const PerAxis<double>& angles,
                                    double p_bar, double load_mass) {
  PlantState s{};
  s.angle = angles;
  PerAxis<double> dp{};
  for (Axis axis : kAxes) {
    const AxisValues v = plant_axis_values(cfg, axis, p_bar);
    double torque = v.k * angles[axis];
    if (axis == Axis::kBeta && cfg.disturbance.gravity) {
      torque += cfg.mech.gravity_torque_amplitude(load_mass) *
                std::cos(angles.beta);
    }
    s.torque[axis] = torque;
    dp[axis] = torque / v.eta;
  }
  // Invert the cross coupling so the effective differences match.
  const double c = cfg.disturbance.cross_coupling;
  const double det = 1.0 - c * c;
  const DeltaRepresentation cmd{p_bar, (dp.alpha - c * dp.beta) / det,
                                (dp.beta - c * dp.alpha) / det};
  s.pressure = xi(cmd);
  s.p_bar = p_bar;
  return s;
}

}  // namespace softarm
