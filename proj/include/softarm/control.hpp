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
 * @file control.hpp
 *
 * Gain-scheduled angle controller and the outer level of the cascade.
 *
 * Per axis the controller inverts the mechanical part of the model,
 *
 *   C(s) = κ (J s² + d s + k) / (s (τ s + 1)),   J = (m + M/4) R0²,
 *
 * so the loop collapses to κη / (s (T s + 1)) independent of the load mass.
 * The filter τ makes the law proper. It is realized as three parallel
 * channels
 *
 *   C(s) = κ [ k/s + J/τ + (d − k τ − J/τ) / (τ s + 1) ],
 *
 * each discretized with the bilinear transform. The channel states hold the
 * integrated and filtered error, so the scheduled gains (k, d, J at the
 * current p̄ and m) are applied at the output every step.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>

#include "softarm/allocation.hpp"
#include "softarm/errors.hpp"
#include "softarm/parameters.hpp"
#include "softarm/plant.hpp"

namespace softarm {

enum class MassSource { kTrue, kUser };

struct ControllerConfig {
  PerAxis<double> kappa{6.5, 6.5};
  double ts = 0.02;                 // s, outer sample time
  double derivative_filter = 0.02;  // s
  double integrator_limit = 3.0;    // bar, bound on the integral channel
  bool gravity_feedforward = true;
  MassSource mass_source = MassSource::kTrue;
  double user_mass = 0.0;  // kg, used when mass_source == kUser

  void validate() const {
    if (!(kappa.alpha > 0.0) || !(kappa.beta > 0.0)) {
      throw InvalidInput("kappa must be positive");
    }
    if (!(ts > 0.0) || !(derivative_filter > 0.0)) {
      throw InvalidInput("sample time and derivative filter must be positive");
    }
    if (!(integrator_limit > 0.0)) {
      throw InvalidInput("integrator limit must be positive");
    }
  }
};

/// κ placing the slower root of T s² + s + κη at `pole_hz`. A pole beyond
/// the critically damped limit 1/(2T) falls back to the double root there.
inline double kappa_for_slow_pole(const AxisValues& v, double pole_hz) {
  if (!(pole_hz > 0.0)) throw InvalidInput("pole frequency must be positive");
  const double w = 2.0 * std::numbers::pi * pole_hz;
  if (w * v.t >= 0.5) return 1.0 / (4.0 * v.t * v.eta);
  return w * (1.0 - w * v.t) / v.eta;
}

/// Default κ per axis: slow closed-loop pole at 2 Hz for p̄ = 1.1 bar.
inline PerAxis<double> default_kappa(const JointParameters& joint,
                                     double p_bar = 1.1, double pole_hz = 2.0) {
  return {kappa_for_slow_pole(joint.at(Axis::kAlpha, p_bar), pole_hz),
          kappa_for_slow_pole(joint.at(Axis::kBeta, p_bar), pole_hz)};
}

/// Roots of T s² + s + κη, the nominal closed-loop characteristic polynomial.
inline std::pair<std::complex<double>, std::complex<double>>
closed_loop_roots(double t, double kappa_eta) {
  const std::complex<double> disc = std::sqrt(std::complex<double>(1.0 - 4.0 * t * kappa_eta));
  return {(-1.0 + disc) / (2.0 * t), (-1.0 - disc) / (2.0 * t)};
}

struct AxisControllerState {
  double integral = 0.0;  // ∫e dt
  double filtered = 0.0;  // e through 1/(τ s + 1)
  double last_error = 0.0;
};

struct ControllerState {
  PerAxis<AxisControllerState> axes;
};

struct ControllerOutput {
  PerAxis<double> dp{};
  bool fault = false;
};

/// Scheduling point: stiffness level and the mass the controller assumes.
struct Schedule {
  double p_bar = 1.1;
  double mass = 0.0;
};

/// One sample of the discrete gain-scheduled law on both axes.
/// `hold_integrator` freezes the integral channel (anti-windup while the
/// pressure setpoints saturate). A non-finite error yields a fault with
/// zero output and the state left untouched.
inline ControllerOutput controller_step(const PerAxis<double>& error,
                                        const Schedule& sched,
                                        ControllerState& state,
                                        const MechanicalParams& mech,
                                        const JointParameters& joint,
                                        const ControllerConfig& cfg,
                                        bool hold_integrator = false) {
  if (!std::isfinite(error.alpha) || !std::isfinite(error.beta)) {
    return ControllerOutput{{0.0, 0.0}, true};
  }
  const double ts = cfg.ts;
  const double tau = cfg.derivative_filter;
  const double inertia = mech.inertia(sched.mass);
  const double a = (2.0 * tau - ts) / (2.0 * tau + ts);
  const double b = ts / (2.0 * tau + ts);

  ControllerOutput out;
  for (Axis axis : kAxes) {
    AxisControllerState& s = state.axes[axis];
    const AxisValues v = joint.at(axis, sched.p_bar);
    const double kappa = cfg.kappa[axis];
    const double e = error[axis];

    if (!hold_integrator) s.integral += 0.5 * ts * (e + s.last_error);
    const double limit = cfg.integrator_limit / (kappa * v.k);
    s.integral = std::clamp(s.integral, -limit, limit);
    s.filtered = a * s.filtered + b * (e + s.last_error);
    s.last_error = e;

    const double proportional = inertia / tau;
    const double lowpass = v.d - v.k * tau - inertia / tau;
    out.dp[axis] = kappa * (v.k * s.integral + proportional * e + lowpass * s.filtered);
  }
  return out;
}

/// Δp_β that balances gravity at the β setpoint.
inline double feedforward_beta(double beta_setpoint, const Schedule& sched,
                               const MechanicalParams& mech,
                               const JointParameters& joint) {
  const double eta = joint.at(Axis::kBeta, sched.p_bar).eta;
  return mech.gravity_torque_amplitude(sched.mass) * std::cos(beta_setpoint) / eta;
}

struct CascadeSetpoint {
  double alpha = 0.0;
  double beta = 0.0;
  double p_bar = 1.1;
  double mass = 0.0;  // true load mass carried at this sample
};

struct CascadeOutput {
  DeltaRepresentation delta{};
  AbsolutePressures pressures{};
  bool saturated = false;
  bool fault = false;
};

/// Outer loop of the cascade: feedback on (reference + correction), gravity
/// feedforward on β, composition into absolute pressure setpoints. p̄ passes
/// through from the setpoint untouched.
class CascadeController {
 public:
  CascadeController(ControllerConfig cfg, MechanicalParams mech,
                    JointParameters joint, PressureConfig pressure)
      : cfg_(std::move(cfg)),
        mech_(mech),
        joint_(std::move(joint)),
        pressure_(pressure) {
    cfg_.validate();
  }

  const ControllerConfig& config() const { return cfg_; }
  const ControllerState& state() const { return state_; }

  Schedule schedule_for(const CascadeSetpoint& sp) const {
    return Schedule{sp.p_bar, cfg_.mass_source == MassSource::kTrue
                                  ? sp.mass
                                  : cfg_.user_mass};
  }

  /// Presets the integrators so a plant at rest on `sp` needs no correction.
  void initialize_at_rest(const CascadeSetpoint& sp, const PlantConfig& plant) {
    state_ = ControllerState{};
    const Schedule sched = schedule_for(sp);
    const PlantState rest = equilibrium_state(plant, {sp.alpha, sp.beta},
                                              sp.p_bar, sp.mass);
    const DeltaRepresentation need = actual_delta(rest);
    const PerAxis<double> dp{need.dp_alpha,
                             need.dp_beta - beta_feedforward(sp.beta, sched)};
    for (Axis axis : kAxes) {
      const AxisValues v = joint_.at(axis, sched.p_bar);
      state_.axes[axis].integral = dp[axis] / (cfg_.kappa[axis] * v.k);
    }
    saturated_ = false;
  }

  CascadeOutput step(const CascadeSetpoint& sp, const PerAxis<double>& correction,
                     const PerAxis<double>& measured) {
    const Schedule sched = schedule_for(sp);
    const PerAxis<double> error{sp.alpha + correction.alpha - measured.alpha,
                                sp.beta + correction.beta - measured.beta};
    const ControllerOutput fb =
        controller_step(error, sched, state_, mech_, joint_, cfg_, saturated_);
    CascadeOutput out;
    out.fault = fb.fault;
    out.delta = DeltaRepresentation{
        sp.p_bar, fb.dp.alpha,
        fb.dp.beta + beta_feedforward(sp.beta, sched)};
    out.pressures = xi(out.delta);
    out.saturated = saturate_setpoint(out.pressures, pressure_).saturated;
    saturated_ = out.saturated;
    return out;
  }

 private:
  double beta_feedforward(double beta_sp, const Schedule& sched) const {
    return cfg_.gravity_feedforward ? feedforward_beta(beta_sp, sched, mech_, joint_)
                                    : 0.0;
  }

  ControllerConfig cfg_;
  MechanicalParams mech_;
  JointParameters joint_;
  PressureConfig pressure_;
  ControllerState state_{};
  bool saturated_ = false;
};

}  // namespace softarm
