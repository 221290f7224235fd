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
 * @file trajectory.hpp
 *
 * Setpoint generation: minimum-jerk transitions, single-transition plans
 * and the three-phase pick-and-place period (pick with elongation, carry,
 * return) with its mass schedule and grip/eject events.
 *
 * Every segment is sampled at t = k·Ts, k = 0..round(duration/Ts)-1, in
 * phase-local time, so phases concatenate sample for sample.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "softarm/errors.hpp"
#include "softarm/parameters.hpp"

namespace softarm {

inline constexpr double deg(double degrees) {
  return degrees * std::numbers::pi / 180.0;
}
inline constexpr double to_deg(double radians) {
  return radians * 180.0 / std::numbers::pi;
}

/// Minimum-jerk blend 10s³ − 15s⁴ + 6s⁵ on s ∈ [0, 1], clamped outside.
inline double quintic_blend(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

/// Clearance bump 64 s³ (1 − s)³: zero value, slope and curvature at both
/// ends, unit peak at s = 1/2.
inline double clearance_bump(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double c = s * (1.0 - s);
  return 64.0 * c * c * c;
}

inline int sample_count(double duration, double ts) {
  return static_cast<int>(std::lround(duration / ts));
}

/// Quintic segment from `start` to `end`, sampled over [0, duration).
inline std::vector<double> smooth_transition(double start, double end,
                                             double duration, double ts) {
  if (!(ts > 0.0) || !(duration >= 2.0 * ts)) {
    throw InvalidInput("transition needs duration >= 2 Ts");
  }
  const int n = sample_count(duration, ts);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    out[static_cast<std::size_t>(k)] =
        start + (end - start) * quintic_blend(k * ts / duration);
  }
  return out;
}

/// Peak rate of a quintic transition, reached at its midpoint.
inline double quintic_peak_rate(double start, double end, double duration) {
  return 15.0 / 8.0 * (end - start) / duration;
}

/// Hold, quintic move, hold.
struct Move {
  double start = 0.0;
  double end = 0.0;
  double begin = 0.0;     // s, phase-local start of the move
  double duration = 0.0;  // s, zero means constant at `start`
  double bump = 0.0;      // added clearance bump amplitude during the move

  double at(double t) const {
    if (duration <= 0.0) return start;
    const double s = (t - begin) / duration;
    return start + (end - start) * quintic_blend(s) + bump * clearance_bump(s);
  }

  static Move hold(double value) { return Move{value, value, 0.0, 0.0, 0.0}; }
};

enum class PhaseId { kPick, kCarry, kReturn, kFree };

inline const char* phase_name(PhaseId id) {
  switch (id) {
    case PhaseId::kPick: return "I";
    case PhaseId::kCarry: return "II";
    case PhaseId::kReturn: return "III";
    case PhaseId::kFree: return "free";
  }
  return "?";
}

struct PhaseSpec {
  PhaseId id = PhaseId::kFree;
  double duration = 1.0;  // s
  Move alpha;
  Move beta;
  Move p_bar = Move::hold(1.1);
  double mass = 0.0;  // kg carried during the phase
};

/// Sampled setpoints at Ts with the mass schedule and event markers.
struct SetpointPlan {
  double ts = 0.02;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> p_bar;
  std::vector<double> mass;
  std::vector<std::uint8_t> eject;  // 1 while the deposit impulse is on
  std::optional<int> grip_index;    // first sample carrying the load
  std::optional<int> eject_index;   // first sample after the deposit

  int size() const { return static_cast<int>(alpha.size()); }
  double duration() const { return size() * ts; }
  double time(int k) const { return k * ts; }

  void append(const SetpointPlan& other) {
    const int offset = size();
    auto cat = [](auto& a, const auto& b) { a.insert(a.end(), b.begin(), b.end()); };
    cat(alpha, other.alpha);
    cat(beta, other.beta);
    cat(p_bar, other.p_bar);
    cat(mass, other.mass);
    cat(eject, other.eject);
    if (!grip_index && other.grip_index) grip_index = *other.grip_index + offset;
    if (!eject_index && other.eject_index) eject_index = *other.eject_index + offset;
  }

  bool operator==(const SetpointPlan&) const = default;
};

inline SetpointPlan build_phase(const PhaseSpec& spec, double ts) {
  if (!(spec.duration > 0.0) || !(ts > 0.0)) {
    throw InvalidInput("phase duration and sample time must be positive");
  }
  for (const Move* m : {&spec.alpha, &spec.beta, &spec.p_bar}) {
    if (m->duration > 0.0 && m->duration < 2.0 * ts) {
      throw InvalidInput("transition needs duration >= 2 Ts");
    }
  }
  const int n = sample_count(spec.duration, ts);
  SetpointPlan plan;
  plan.ts = ts;
  for (int k = 0; k < n; ++k) {
    const double t = k * ts;
    plan.alpha.push_back(spec.alpha.at(t));
    plan.beta.push_back(spec.beta.at(t));
    plan.p_bar.push_back(spec.p_bar.at(t));
    plan.mass.push_back(spec.mass);
    plan.eject.push_back(0);
  }
  return plan;
}

/// Pick: orientation held, p̄ raised to elongate towards the object.
inline SetpointPlan build_pick_phase(const PhaseSpec& spec, double ts) {
  if (spec.alpha.start != spec.alpha.end || spec.beta.start != spec.beta.end ||
      spec.alpha.bump != 0.0 || spec.beta.bump != 0.0) {
    throw InvalidInput("pick phase holds the orientation");
  }
  return build_phase(spec, ts);
}

struct PickPlaceConfig {
  double ts = 0.02;
  double period = 2.78;  // s
  double alpha_pick = deg(-30.0);
  double alpha_place = deg(30.0);
  double beta_base = deg(-10.0);
  double beta_clearance = deg(8.0);  // bump amplitude during the carry move
  double p_bar_low = 1.0;
  double p_bar_high = 1.2;
  double load_mass = 0.2;  // kg

  double pick_duration = 1.0;
  double pick_rise_start = 0.3;
  double pick_rise_time = 0.3;

  double carry_transition = 0.6;
  double carry_dwell = 0.28;

  double eject_window = 0.1;  // deposit impulse, at the start of the return
  double return_transition = 0.3;
  double return_dwell = 0.5;  // after the transition

  double return_duration() const {
    return eject_window + return_transition + return_dwell;
  }
};

inline std::vector<PhaseSpec> pick_place_phases(const PickPlaceConfig& c) {
  PhaseSpec pick{PhaseId::kPick, c.pick_duration, Move::hold(c.alpha_pick),
                 Move::hold(c.beta_base),
                 Move{c.p_bar_low, c.p_bar_high, c.pick_rise_start,
                      c.pick_rise_time, 0.0},
                 0.0};
  PhaseSpec carry{PhaseId::kCarry, c.carry_transition + c.carry_dwell,
                  Move{c.alpha_pick, c.alpha_place, 0.0, c.carry_transition, 0.0},
                  Move{c.beta_base, c.beta_base, 0.0, c.carry_transition,
                       c.beta_clearance},
                  Move::hold(c.p_bar_high), c.load_mass};
  PhaseSpec ret{PhaseId::kReturn, c.return_duration(),
                Move{c.alpha_place, c.alpha_pick, c.eject_window,
                     c.return_transition, 0.0},
                Move::hold(c.beta_base), Move::hold(c.p_bar_high), 0.0};
  return {pick, carry, ret};
}

/// Sample index ranges [first, first + count) of each phase in the period.
inline std::vector<std::pair<int, int>> phase_windows(const PickPlaceConfig& c) {
  std::vector<std::pair<int, int>> out;
  int at = 0;
  for (const PhaseSpec& p : pick_place_phases(c)) {
    const int n = sample_count(p.duration, c.ts);
    out.emplace_back(at, n);
    at += n;
  }
  return out;
}

inline void validate_plan(const SetpointPlan& plan,
                          const PBarInterval& interval = {},
                          double angle_range = deg(75.0),
                          double max_angle_jump = deg(10.0),
                          double max_p_bar_jump = 0.05);

inline SetpointPlan build_pick_place_plan(const PickPlaceConfig& c) {
  const double total =
      c.pick_duration + c.carry_transition + c.carry_dwell + c.return_duration();
  if (std::abs(total - c.period) > 1e-9) {
    std::ostringstream msg;
    msg << "phase durations sum to " << total << " s, period is " << c.period << " s";
    throw InvalidInput(msg.str());
  }
  const auto phases = pick_place_phases(c);
  SetpointPlan plan = build_pick_phase(phases[0], c.ts);
  const SetpointPlan carry = build_phase(phases[1], c.ts);
  SetpointPlan ret = build_phase(phases[2], c.ts);
  const int window = sample_count(c.eject_window, c.ts);
  for (int k = 0; k < window && k < ret.size(); ++k) {
    ret.eject[static_cast<std::size_t>(k)] = 1;
  }
  plan.grip_index = plan.size();
  plan.append(carry);
  plan.eject_index = plan.size();
  plan.append(ret);
  validate_plan(plan, {c.p_bar_low, c.p_bar_high});
  return plan;
}

/// One aggressive move: lead-in, quintic transition, hold.
struct TransitionConfig {
  double ts = 0.02;
  double alpha_start = deg(-30.0);
  double alpha_end = deg(30.0);
  double beta = deg(-10.0);
  double beta_bump = 0.0;
  double lead_in = 0.2;
  double transition = 0.3;
  double hold = 0.6;
  double p_bar = 1.1;
  double mass = 0.0;
};

inline SetpointPlan build_transition_plan(const TransitionConfig& c) {
  PhaseSpec spec{PhaseId::kFree, c.lead_in + c.transition + c.hold,
                 Move{c.alpha_start, c.alpha_end, c.lead_in, c.transition, 0.0},
                 Move{c.beta, c.beta, c.lead_in, c.transition, c.beta_bump},
                 Move::hold(c.p_bar), c.mass};
  return build_phase(spec, c.ts);
}

inline void validate_plan(const SetpointPlan& plan, const PBarInterval& interval,
                          double angle_range, double max_angle_jump,
                          double max_p_bar_jump) {
  const auto n = static_cast<std::size_t>(plan.size());
  if (n == 0) throw InvalidInput("empty plan");
  if (plan.beta.size() != n || plan.p_bar.size() != n || plan.mass.size() != n ||
      plan.eject.size() != n) {
    throw InvalidInput("plan columns differ in length");
  }
  std::ostringstream bad;
  int count = 0;
  auto flag = [&](std::size_t k, const char* what) {
    if (count++ < 20) bad << " [" << k << "] " << what << ";";
  };
  constexpr double kTol = 1e-12;
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(plan.alpha[k]) || std::abs(plan.alpha[k]) > angle_range) {
      flag(k, "alpha out of range");
    }
    if (!std::isfinite(plan.beta[k]) || std::abs(plan.beta[k]) > angle_range) {
      flag(k, "beta out of range");
    }
    if (!(plan.p_bar[k] >= interval.min - kTol && plan.p_bar[k] <= interval.max + kTol)) {
      flag(k, "p_bar out of range");
    }
    if (!(plan.mass[k] >= 0.0)) flag(k, "negative mass");
    if (k == 0) continue;
    if (std::abs(plan.alpha[k] - plan.alpha[k - 1]) > max_angle_jump ||
        std::abs(plan.beta[k] - plan.beta[k - 1]) > max_angle_jump) {
      flag(k, "angle jump");
    }
    if (std::abs(plan.p_bar[k] - plan.p_bar[k - 1]) > max_p_bar_jump) {
      flag(k, "p_bar jump");
    }
    if (plan.mass[k] != plan.mass[k - 1]) {
      const int i = static_cast<int>(k);
      if (i != plan.grip_index.value_or(-1) && i != plan.eject_index.value_or(-1)) {
        flag(k, "mass change without event");
      }
    }
  }
  if (plan.grip_index && plan.eject_index && !(*plan.grip_index < *plan.eject_index)) {
    flag(static_cast<std::size_t>(*plan.eject_index), "eject not after grip");
  }
  if (count > 0) {
    throw InvalidInput("plan validation failed (" + std::to_string(count) +
                       " issues):" + bad.str());
  }
}

/// Slice [first, first + count) of a plan; events outside are dropped.
inline SetpointPlan slice_plan(const SetpointPlan& plan, int first, int count) {
  if (first < 0 || count < 0 || first + count > plan.size()) {
    throw InvalidInput("slice exceeds plan");
  }
  SetpointPlan out;
  out.ts = plan.ts;
  auto cut = [&](const auto& v) {
    using V = std::decay_t<decltype(v)>;
    return V(v.begin() + first, v.begin() + first + count);
  };
  out.alpha = cut(plan.alpha);
  out.beta = cut(plan.beta);
  out.p_bar = cut(plan.p_bar);
  out.mass = cut(plan.mass);
  out.eject = cut(plan.eject);
  auto shift = [&](const std::optional<int>& idx) -> std::optional<int> {
    if (idx && *idx > first && *idx < first + count) return *idx - first;
    return std::nullopt;
  };
  out.grip_index = shift(plan.grip_index);
  out.eject_index = shift(plan.eject_index);
  return out;
}

}  // namespace softarm
