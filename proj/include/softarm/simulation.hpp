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
 * @file simulation.hpp
 *
 * Closed-loop rollouts of the cascade on the plant, and the nominal
 * closed-loop model the learning law is built on.
 */
#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "softarm/control.hpp"
#include "softarm/ilc.hpp"
#include "softarm/plant.hpp"
#include "softarm/trajectory.hpp"

namespace softarm {

struct LoopConfig {
  PlantConfig plant{};
  ControllerConfig controller{};
  /// Joint parameters the controller schedules with; the plant's own set
  /// when empty.
  std::optional<JointParameters> controller_joint;

  const JointParameters& model_joint() const {
    return controller_joint ? *controller_joint : plant.joint;
  }
};

/// Default loop: disturbed plant, κ from the 2 Hz slow-pole rule.
inline LoopConfig default_loop(bool disturbed = true) {
  LoopConfig cfg;
  if (disturbed) cfg.plant.disturbance = DisturbanceConfig::default_disturbed();
  cfg.controller.kappa = default_kappa(cfg.plant.joint);
  return cfg;
}

/// Per-sample record of a rollout, one row per outer sample k = 0..N.
struct TraceSample {
  double time = 0.0;
  PerAxis<double> reference{};
  PerAxis<double> angle{};     // true
  PerAxis<double> measured{};  // with noise
  DeltaRepresentation delta{};  // actual pressures, decoupled
  AbsolutePressures pressure{};
  double radius = 0.0;
  double mass = 0.0;
  bool eject = false;
};

struct Rollout {
  std::vector<TraceSample> trace;
  Eigen::VectorXd error;       // lifted r(k+1) − y_measured(k+1)
  Eigen::VectorXd true_error;  // lifted r(k+1) − y(k+1)
  bool saturated = false;
  bool limit_hit = false;
};

/// Runs the plan once with reference correction `correction` (lifted, may be
/// empty for none). The plant starts at rest on the first setpoint.
inline Rollout simulate(const SetpointPlan& plan, const LoopConfig& cfg,
                        const Eigen::VectorXd& correction, std::uint64_t seed) {
  const int n = plan.size();
  if (n == 0) throw InvalidInput("empty plan");
  if (correction.size() != 0 && correction.size() != 2 * n) {
    throw InvalidInput("correction length must be 2N");
  }
  if (std::abs(plan.ts - cfg.controller.ts) > 1e-12) {
    throw InvalidInput("plan sample time differs from the controller's");
  }
  Plant plant(cfg.plant, seed);
  CascadeController ctrl(cfg.controller, cfg.plant.mech, cfg.model_joint(),
                         cfg.plant.pressure);
  const auto at = [&](int k) {
    return CascadeSetpoint{plan.alpha[static_cast<std::size_t>(k)],
                           plan.beta[static_cast<std::size_t>(k)],
                           plan.p_bar[static_cast<std::size_t>(k)],
                           plan.mass[static_cast<std::size_t>(k)]};
  };
  const CascadeSetpoint first = at(0);
  plant.reset(equilibrium_state(cfg.plant, {first.alpha, first.beta}, first.p_bar,
                                first.mass));
  ctrl.initialize_at_rest(first, cfg.plant);

  const int window = sample_count(0.1, plan.ts);
  const double eject_torque =
      cfg.plant.disturbance.deposit_impulse / (window * plan.ts);

  Rollout out;
  out.trace.reserve(static_cast<std::size_t>(n + 1));
  out.error = Eigen::VectorXd::Zero(2 * n);
  out.true_error = Eigen::VectorXd::Zero(2 * n);

  auto record = [&](int k, const PerAxis<double>& measured, const CascadeSetpoint& sp,
                    bool eject) {
    const PlantState& s = plant.state();
    TraceSample t;
    t.time = k * plan.ts;
    t.reference = {sp.alpha, sp.beta};
    t.angle = s.angle;
    t.measured = measured;
    t.delta = actual_delta(s);
    t.pressure = s.pressure;
    t.radius = radius_from_pbar(s.p_bar, cfg.plant.elongation,
                                cfg.plant.pressure.p_bar).radius;
    t.mass = sp.mass;
    t.eject = eject;
    out.trace.push_back(t);
  };

  PerAxis<double> y = plant.measure();
  record(0, y, first, plan.eject[0] != 0);
  for (int k = 0; k < n; ++k) {
    const CascadeSetpoint sp = at(k);
    PerAxis<double> u{};
    if (correction.size() != 0) u = {correction(2 * k), correction(2 * k + 1)};
    const CascadeOutput cmd = ctrl.step(sp, u, y);
    if (cmd.fault) throw SimulationDiverged("controller fault at sample " + std::to_string(k));
    out.saturated = out.saturated || cmd.saturated;
    const bool eject = plan.eject[static_cast<std::size_t>(k)] != 0;
    PlantInputs in{cmd.pressures, sp.mass, eject ? eject_torque : 0.0};
    plant.advance(in, plan.ts);
    y = plant.measure();

    const CascadeSetpoint next = at(std::min(k + 1, n - 1));
    out.error(2 * k) = next.alpha - y.alpha;
    out.error(2 * k + 1) = next.beta - y.beta;
    out.true_error(2 * k) = next.alpha - plant.state().angle.alpha;
    out.true_error(2 * k + 1) = next.beta - plant.state().angle.beta;
    CascadeSetpoint shown = next;
    if (k + 1 == n) shown.mass = sp.mass;
    record(k + 1, y, shown, k + 1 < n && plan.eject[static_cast<std::size_t>(k + 1)] != 0);
  }
  out.limit_hit = plant.limit_hit();
  return out;
}

/// Per-axis nominal closed loop κη/(T s² + s + κη) at `p_bar`.
inline PerAxis<AxisModel> nominal_models(const JointParameters& joint,
                                         const PerAxis<double>& kappa,
                                         double p_bar = 1.1) {
  PerAxis<AxisModel> out;
  for (Axis axis : kAxes) {
    const AxisValues v = joint.at(axis, p_bar);
    out[axis] = nominal_closed_loop(kappa[axis] * v.eta, v.t);
  }
  return out;
}

struct IlcDesign {
  double model_p_bar = 1.1;
  double error_weight = 1.0;
  double change_weight = 1e-2;
  double rate_weight = 1e-6;
};

inline IlcGains design_gains(const JointParameters& joint,
                             const ControllerConfig& ctrl, int horizon,
                             const IlcDesign& design = {}) {
  const DiscreteModel model = discretize_axes(
      nominal_models(joint, ctrl.kappa, design.model_p_bar), ctrl.ts);
  const LiftedSystem sys = build_lifted_matrix(model, horizon, ctrl.ts);
  const Eigen::MatrixXd d = build_derivative_operator(horizon, ctrl.ts);
  return compute_gains(sys.p, d,
                       IlcWeights::scaled_identity(horizon, design.error_weight,
                                                   design.change_weight,
                                                   design.rate_weight));
}

/// Learning loop on `plan`. Every iteration draws fresh measurement noise
/// from a seed derived from `seed` and the iteration index.
inline IlcHistory train(const SetpointPlan& plan, const LoopConfig& cfg,
                        const IlcGains& gains, const Eigen::VectorXd& initial,
                        const IlcOptions& opt, std::uint64_t seed) {
  std::uint64_t iteration = 0;
  auto rollout = [&](const Eigen::VectorXd& u) {
    const Rollout r = simulate(plan, cfg, u, seed + 1000003ULL * iteration++);
    return RolloutOutcome{r.error, r.true_error};
  };
  const Eigen::VectorXd u0 =
      initial.size() ? initial : Eigen::VectorXd::Zero(2 * plan.size());
  return run_ilc(rollout, gains, u0, opt);
}

}  // namespace softarm
