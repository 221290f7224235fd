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
 * @file experiments.hpp
 *
 * End-to-end experiments: allocation checks with the open-loop Lissajous
 * replay, the identification campaign, feedback-only tracking across load
 * masses, learning on a single plan and the pick-and-place workflow.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "softarm/allocation.hpp"
#include "softarm/config.hpp"
#include "softarm/ilc.hpp"
#include "softarm/plant.hpp"
#include "softarm/simulation.hpp"
#include "softarm/sysid.hpp"
#include "softarm/trajectory.hpp"

namespace softarm {

// ---------------------------------------------------------------------------
// Allocation

struct RoundTripReport {
  int samples = 0;
  double max_error = 0.0;         // ‖xi_inverse(xi(x)) − x‖∞
  double max_difference_error = 0.0;
  int floor_violations = 0;       // min(xi(x)) != p̄
  int difference_violations = 0;  // recovered differences off by > tolerance
  std::optional<DeltaRepresentation> first_offender;
};

/// Round trip over uniformly drawn points, p̄ ∈ [0, 3] bar, Δp ∈ [−3, 3] bar.
inline RoundTripReport allocation_round_trip(int samples, std::uint64_t seed,
                                             double tolerance = 1e-12) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> level(0.0, 3.0);
  std::uniform_real_distribution<double> diff(-3.0, 3.0);
  RoundTripReport r;
  r.samples = samples;
  for (int i = 0; i < samples; ++i) {
    const DeltaRepresentation x{level(rng), diff(rng), diff(rng)};
    const AbsolutePressures p = xi(x);
    const DeltaRepresentation back = xi_inverse(p);
    const double err = std::max({std::abs(back.p_bar - x.p_bar),
                                 std::abs(back.dp_alpha - x.dp_alpha),
                                 std::abs(back.dp_beta - x.dp_beta)});
    r.max_error = std::max(r.max_error, err);
    bool bad = err > tolerance;
    if (p.min() != x.p_bar) {
      ++r.floor_violations;
      bad = true;
    }
    const PairwiseDifferences want = recouple({x.dp_alpha, x.dp_beta});
    const double derr = std::max(std::abs((p.p_a - p.p_b) - want.dp_ab),
                                 std::abs((p.p_b - p.p_c) - want.dp_bc));
    r.max_difference_error = std::max(r.max_difference_error, derr);
    if (derr > tolerance) {
      ++r.difference_violations;
      bad = true;
    }
    if (bad && !r.first_offender) r.first_offender = x;
  }
  return r;
}

/// Largest normalized cross-correlation of `output` against `input` over
/// output lags 0..max_lag.
inline double max_lag_correlation(const std::vector<double>& input,
                                  const std::vector<double>& output, int max_lag) {
  const auto n = static_cast<int>(std::min(input.size(), output.size()));
  double best = -1.0;
  for (int lag = 0; lag <= max_lag && lag < n - 1; ++lag) {
    const int m = n - lag;
    double mx = 0.0, my = 0.0;
    for (int k = 0; k < m; ++k) {
      mx += input[static_cast<std::size_t>(k)];
      my += output[static_cast<std::size_t>(k + lag)];
    }
    mx /= m;
    my /= m;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (int k = 0; k < m; ++k) {
      const double a = input[static_cast<std::size_t>(k)] - mx;
      const double b = output[static_cast<std::size_t>(k + lag)] - my;
      sxy += a * b;
      sxx += a * a;
      syy += b * b;
    }
    if (sxx > 0.0 && syy > 0.0) best = std::max(best, sxy / std::sqrt(sxx * syy));
  }
  return best;
}

struct LissajousRun {
  double coupling = 0.0;
  double similarity = 0.0;   // min over axes
  double closure_gap = 0.0;  // rad, angle distance one full period apart
  std::vector<double> time, dp_alpha, dp_beta, alpha, beta;
};

/// Open-loop replay of Δp_α = A sin(ωt), Δp_β = A sin(2ωt) at constant p̄
/// on the plant with every disturbance off except the axis coupling.
inline LissajousRun lissajous_replay(const PlantConfig& base,
                                     const AllocationCheckConfig& c,
                                     double coupling, double sample_time = 0.02) {
  PlantConfig cfg = base;
  cfg.disturbance = DisturbanceConfig{};
  cfg.disturbance.cross_coupling = coupling;
  Plant plant(cfg);
  plant.reset(equilibrium_state(cfg, {}, c.p_bar, 0.0));
  const int sub = sample_count(sample_time, cfg.dt);
  const int n = sample_count(c.duration, sample_time);
  const double w = 2.0 * std::numbers::pi * c.frequency;
  LissajousRun run;
  run.coupling = coupling;
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < sub; ++i) {
      const double t = plant.time();
      const DeltaRepresentation cmd{c.p_bar, c.amplitude * std::sin(w * t),
                                    c.amplitude * std::sin(2.0 * w * t)};
      plant.advance(PlantInputs{xi(cmd), 0.0, 0.0}, cfg.dt);
    }
    const double t = plant.time();
    run.time.push_back(t);
    run.dp_alpha.push_back(c.amplitude * std::sin(w * t));
    run.dp_beta.push_back(c.amplitude * std::sin(2.0 * w * t));
    run.alpha.push_back(plant.state().angle.alpha);
    run.beta.push_back(plant.state().angle.beta);
  }
  // Correlate over the last full period, after the start-up transient.
  const int period = sample_count(1.0 / c.frequency, sample_time);
  const int first = std::max(0, n - period);
  auto tail = [first](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + first, v.end());
  };
  const int max_lag = period / 4;
  run.similarity = std::min(
      max_lag_correlation(tail(run.dp_alpha), tail(run.alpha), max_lag),
      max_lag_correlation(tail(run.dp_beta), tail(run.beta), max_lag));
  if (n > period) {
    const auto last = static_cast<std::size_t>(n - 1);
    const auto prev = static_cast<std::size_t>(n - 1 - period);
    run.closure_gap = std::hypot(run.alpha[last] - run.alpha[prev],
                                 run.beta[last] - run.beta[prev]);
  }
  return run;
}

struct AllocationReport {
  RoundTripReport round_trip;
  std::vector<LissajousRun> sweep;  // first entry is the decoupled plant
  bool monotonic = true;
  bool closed = true;

  bool similarity_ok(double min_similarity) const {
    return !sweep.empty() && sweep.front().similarity >= min_similarity;
  }
  bool passed(double min_similarity) const {
    return round_trip.max_error <= 1e-12 && round_trip.floor_violations == 0 &&
           round_trip.difference_violations == 0 && similarity_ok(min_similarity) &&
           monotonic && closed;
  }
};

inline AllocationReport allocation_check(const ExperimentConfig& cfg) {
  const AllocationCheckConfig& c = cfg.allocation;
  AllocationReport r;
  r.round_trip = allocation_round_trip(c.samples, cfg.seed);
  std::vector<double> gains = c.coupling_sweep;
  if (gains.empty() || gains.front() != 0.0) gains.insert(gains.begin(), 0.0);
  std::sort(gains.begin(), gains.end());
  gains.erase(std::unique(gains.begin(), gains.end()), gains.end());
  for (double g : gains) r.sweep.push_back(lissajous_replay(cfg.loop.plant, c, g));
  for (std::size_t i = 1; i < r.sweep.size(); ++i) {
    if (!(r.sweep[i].similarity < r.sweep[i - 1].similarity)) r.monotonic = false;
  }
  r.closed = r.sweep.front().closure_gap < 1e-3;
  return r;
}

// ---------------------------------------------------------------------------
// Identification

struct IdentificationReport {
  PerAxis<AxisIdentification> axes;
  JointParameters fitted;
  PerAxis<AxisValues> sup_error{};  // relative, per parameter function
  double worst = 0.0;
};

inline AxisValues sup_errors(const AxisPolynomials& est, const AxisPolynomials& truth,
                             const PBarInterval& iv) {
  return {sup_relative_error(est.k, truth.k, iv), sup_relative_error(est.d, truth.d, iv),
          sup_relative_error(est.eta, truth.eta, iv), sup_relative_error(est.t, truth.t, iv)};
}

inline double worst_of(const AxisValues& v) { return std::max({v.k, v.d, v.eta, v.t}); }

/// Campaign on both axes. With a noise level, the measured responses are
/// perturbed multiplicatively (seeded by `seed`) before fitting.
inline IdentificationReport identify_from_levels(
    const PerAxis<std::vector<LevelResult>>& measured, const ExperimentConfig& cfg,
    double noise, std::uint64_t seed) {
  IdentificationReport r;
  const PlantConfig& plant = cfg.loop.plant;
  std::mt19937_64 rng(seed);
  for (Axis axis : kAxes) {
    std::vector<LevelResult> levels = measured[axis];
    if (noise > 0.0) {
      for (LevelResult& l : levels) l.data = perturb_response(l.data, noise, rng);
    }
    r.axes[axis] = fit_levels(std::move(levels), plant.mech.inertia(0.0), cfg.identification);
    r.fitted.axes[axis] = r.axes[axis].polynomials;
    r.sup_error[axis] = sup_errors(r.fitted.axes[axis], plant.joint.axes[axis],
                                   plant.pressure.p_bar);
    r.worst = std::max(r.worst, worst_of(r.sup_error[axis]));
  }
  return r;
}

inline PerAxis<std::vector<LevelResult>> measure_campaign(const ExperimentConfig& cfg) {
  PerAxis<std::vector<LevelResult>> out;
  for (Axis axis : kAxes) {
    out[axis] = measure_levels(cfg.loop.plant, axis, cfg.identification, cfg.seed);
  }
  return out;
}

inline IdentificationReport identify(const ExperimentConfig& cfg) {
  return identify_from_levels(measure_campaign(cfg), cfg, cfg.identification_noise,
                              cfg.seed);
}

// ---------------------------------------------------------------------------
// Feedback-only tracking

inline SetpointPlan build_track_plan(const TrackConfig& c, double ts,
                                     double mass, double lead_in = 0.2) {
  if (c.alpha_steps.size() != c.beta_steps.size() || c.alpha_steps.empty()) {
    throw InvalidInput("track steps need equal, non-zero length per axis");
  }
  SetpointPlan plan = build_phase(
      PhaseSpec{PhaseId::kFree, lead_in, Move::hold(c.alpha_steps[0]),
                Move::hold(c.beta_steps[0]), Move::hold(c.p_bar), mass},
      ts);
  for (std::size_t i = 1; i < c.alpha_steps.size(); ++i) {
    plan.append(build_phase(
        PhaseSpec{PhaseId::kFree, c.transition + c.hold,
                  Move{c.alpha_steps[i - 1], c.alpha_steps[i], 0.0, c.transition, 0.0},
                  Move{c.beta_steps[i - 1], c.beta_steps[i], 0.0, c.transition, 0.0},
                  Move::hold(c.p_bar), mass},
        ts));
  }
  return plan;
}

struct TrackRun {
  double mass = 0.0;
  ErrorMetrics metrics;
  Rollout rollout;
};

struct TrackReport {
  std::vector<TrackRun> runs;
  PerAxis<double> rms_ratio{1.0, 1.0};  // last mass over first mass

  double worst_ratio_deviation() const {
    return std::max(std::abs(rms_ratio.alpha - 1.0), std::abs(rms_ratio.beta - 1.0));
  }
};

/// Nominal linear plant: every disturbance and the measurement noise off.
inline LoopConfig nominal_loop(const LoopConfig& loop) {
  LoopConfig out = loop;
  out.plant.disturbance = DisturbanceConfig{};
  return out;
}

inline TrackReport track(const ExperimentConfig& cfg) {
  TrackReport r;
  const LoopConfig loop = nominal_loop(cfg.loop);
  for (double m : cfg.track.masses) {
    const SetpointPlan plan = build_track_plan(cfg.track, loop.controller.ts, m);
    TrackRun run;
    run.mass = m;
    run.rollout = simulate(plan, loop, {}, cfg.seed);
    run.metrics = error_metrics(run.rollout.true_error);
    r.runs.push_back(std::move(run));
  }
  if (r.runs.size() >= 2) {
    const auto& a = r.runs.front().metrics.rms;
    const auto& b = r.runs.back().metrics.rms;
    r.rms_ratio = {a.alpha > 0.0 ? b.alpha / a.alpha : 1.0,
                   a.beta > 0.0 ? b.beta / a.beta : 1.0};
  }
  return r;
}

// ---------------------------------------------------------------------------
// Learning

struct LearningRun {
  SetpointPlan plan;
  IlcHistory history;
};

inline IlcOptions ilc_options(const ExperimentConfig& cfg, int iterations) {
  IlcOptions o;
  o.iterations = iterations;
  o.plateau_stop = cfg.plateau_stop;
  return o;
}

inline LearningRun learn(const ExperimentConfig& cfg, const SetpointPlan& plan,
                         int iterations, const Eigen::VectorXd& initial = {},
                         std::uint64_t seed_offset = 0) {
  LearningRun run;
  run.plan = plan;
  const IlcGains gains =
      design_gains(cfg.loop.model_joint(), cfg.loop.controller, plan.size(), cfg.ilc);
  run.history = train(plan, cfg.loop, gains, initial, ilc_options(cfg, iterations),
                      cfg.seed + seed_offset);
  return run;
}

/// Largest absolute true error per axis over trace samples [first, last).
inline PerAxis<double> window_max_error(const Rollout& r, int first, int last) {
  PerAxis<double> out{};
  for (int k = std::max(first, 0); k < last && k < static_cast<int>(r.trace.size()); ++k) {
    const TraceSample& s = r.trace[static_cast<std::size_t>(k)];
    out.alpha = std::max(out.alpha, std::abs(s.reference.alpha - s.angle.alpha));
    out.beta = std::max(out.beta, std::abs(s.reference.beta - s.angle.beta));
  }
  return out;
}

/// Window of the deposit impulse, [eject_index, eject_index + flagged).
inline std::pair<int, int> eject_window(const SetpointPlan& plan) {
  if (!plan.eject_index) throw InvalidInput("plan has no eject marker");
  int last = *plan.eject_index;
  while (last < plan.size() && plan.eject[static_cast<std::size_t>(last)]) ++last;
  if (last == *plan.eject_index) last = std::min(plan.size(), last + 1);
  return {*plan.eject_index, last};
}

/// From the start of the p̄ rise to the end of the pick phase.
inline std::pair<int, int> pick_ramp_window(const PickPlaceConfig& c) {
  return {sample_count(c.pick_rise_start, c.ts), sample_count(c.pick_duration, c.ts)};
}

/// Phase-local plan of pick-and-place phase `index`, events removed except
/// the deposit impulse flags at the start of the return.
inline SetpointPlan phase_plan(const PickPlaceConfig& c, int index) {
  const SetpointPlan full = build_pick_place_plan(c);
  const auto windows = phase_windows(c);
  const auto [first, count] = windows.at(static_cast<std::size_t>(index));
  return slice_plan(full, first, count);
}

struct TrialResult {
  std::uint64_t seed = 0;
  PerAxis<double> eject_error{};
  bool success = false;
  Rollout rollout;
};

struct PickPlaceReport {
  SetpointPlan plan;
  std::vector<LearningRun> phases;  // empty when the warm start was supplied
  Eigen::VectorXd warm_start;
  PerAxis<double> cold_eject_error{};  // iteration 0 without any correction
  PerAxis<double> warm_eject_error{};  // iteration 0 with the warm start
  LearningRun joint;
  std::vector<TrialResult> trials;
  int successes = 0;
};

struct PickPlaceOptions {
  std::optional<Eigen::VectorXd> warm_start;  // full-length correction
  bool cold_start = false;
  std::optional<int> trials;
  std::optional<int> joint_iterations;
  bool keep_traces = false;
};

inline Eigen::VectorXd train_phases(const ExperimentConfig& cfg,
                                    std::vector<LearningRun>& runs) {
  std::vector<Eigen::VectorXd> corrections;
  std::vector<std::pair<int, int>> windows;
  int total = 0;
  for (int i = 0; i < 3; ++i) {
    const SetpointPlan plan = phase_plan(cfg.pickplace, i);
    runs.push_back(learn(cfg, plan,
                         cfg.pickplace_training.phase_iterations[static_cast<std::size_t>(i)],
                         {}, 100 + static_cast<std::uint64_t>(i)));
    if (runs.back().history.failed) {
      throw SimulationDiverged("phase " + std::string(phase_name(static_cast<PhaseId>(i))) +
                               " training failed: " + runs.back().history.failure);
    }
    corrections.push_back(runs.back().history.last().correction);
    windows.emplace_back(0, plan.size());
    total += plan.size();
  }
  return warm_start_concatenate(corrections, windows, total);
}

inline PickPlaceReport pickplace(const ExperimentConfig& cfg,
                                 const PickPlaceOptions& opt = {}) {
  PickPlaceReport r;
  r.plan = build_pick_place_plan(cfg.pickplace);
  const int n = r.plan.size();
  if (opt.warm_start) {
    if (opt.warm_start->size() != 2 * n) {
      throw InvalidInput("warm start has " + std::to_string(opt.warm_start->size() / 2) +
                         " samples, plan has " + std::to_string(n));
    }
    r.warm_start = *opt.warm_start;
  } else if (opt.cold_start) {
    r.warm_start = Eigen::VectorXd::Zero(2 * n);
  } else {
    r.warm_start = train_phases(cfg, r.phases);
  }
  const auto [e0, e1] = eject_window(r.plan);
  r.cold_eject_error = window_max_error(simulate(r.plan, cfg.loop, {}, cfg.seed), e0, e1);
  r.warm_eject_error =
      window_max_error(simulate(r.plan, cfg.loop, r.warm_start, cfg.seed), e0, e1);

  r.joint = learn(cfg, r.plan,
                  opt.joint_iterations.value_or(cfg.pickplace_training.joint_iterations),
                  r.warm_start, 200);
  if (r.joint.history.failed) {
    throw SimulationDiverged("joint training failed: " + r.joint.history.failure);
  }
  const Eigen::VectorXd& u = r.joint.history.last().correction;
  const int trials = opt.trials.value_or(cfg.pickplace_training.trials);
  for (int t = 0; t < trials; ++t) {
    TrialResult trial;
    trial.seed = cfg.seed + 10000 + static_cast<std::uint64_t>(t);
    Rollout roll = simulate(r.plan, cfg.loop, u, trial.seed);
    trial.eject_error = window_max_error(roll, e0, e1);
    trial.success = trial.eject_error.alpha <= cfg.pickplace_training.threshold &&
                    trial.eject_error.beta <= cfg.pickplace_training.threshold;
    if (opt.keep_traces || !trial.success) trial.rollout = std::move(roll);
    r.successes += trial.success ? 1 : 0;
    r.trials.push_back(std::move(trial));
  }
  return r;
}

}  // namespace softarm
