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

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "softarm/csv.hpp"
#include "softarm/trajectory.hpp"

namespace softarm {
namespace {

constexpr double kTs = 0.02;

TEST(QuinticBlend, BoundaryConditions) {
  EXPECT_EQ(quintic_blend(0.0), 0.0);
  EXPECT_EQ(quintic_blend(1.0), 1.0);
  EXPECT_EQ(quintic_blend(-0.5), 0.0);
  EXPECT_EQ(quintic_blend(1.5), 1.0);
  const double h = 1e-6;
  EXPECT_NEAR((quintic_blend(h) - quintic_blend(0.0)) / h, 0.0, 1e-8);
  EXPECT_NEAR((quintic_blend(1.0) - quintic_blend(1.0 - h)) / h, 0.0, 1e-8);
  for (double s = 0.0; s <= 0.5; s += 0.05) {
    EXPECT_NEAR(quintic_blend(s) + quintic_blend(1.0 - s), 1.0, 1e-15);
  }
}

TEST(SmoothTransition, ConstantWhenStartEqualsEnd) {
  for (double v : smooth_transition(0.3, 0.3, 0.5, kTs)) EXPECT_EQ(v, 0.3);
}

TEST(SmoothTransition, MidpointAndSampling) {
  const auto seg = smooth_transition(deg(-30.0), deg(30.0), 0.4, kTs);
  ASSERT_EQ(seg.size(), 20u);
  EXPECT_EQ(seg.front(), deg(-30.0));
  EXPECT_NEAR(seg[10], 0.0, 1e-15);
  EXPECT_TRUE(std::is_sorted(seg.begin(), seg.end()));
}

TEST(SmoothTransition, PeakRateOfSixtyDegreesInPointThreeSeconds) {
  EXPECT_NEAR(to_deg(quintic_peak_rate(deg(-30.0), deg(30.0), 0.3)), 375.0, 1e-9);
  const double dt = 1e-5;
  const auto fine = smooth_transition(deg(-30.0), deg(30.0), 0.3, dt);
  double peak = 0.0;
  for (std::size_t k = 1; k < fine.size(); ++k) {
    peak = std::max(peak, (fine[k] - fine[k - 1]) / dt);
  }
  EXPECT_NEAR(to_deg(peak), 375.0, 1e-3);
}

TEST(SmoothTransition, RejectsShortDurations) {
  EXPECT_THROW(smooth_transition(0.0, 1.0, 0.03, kTs), InvalidInput);
  EXPECT_THROW(smooth_transition(0.0, 1.0, 0.3, 0.0), InvalidInput);
  EXPECT_NO_THROW(smooth_transition(0.0, 1.0, 0.04, kTs));
}

TEST(ClearanceBump, UnitPeakFlatEnds) {
  EXPECT_EQ(clearance_bump(0.0), 0.0);
  EXPECT_EQ(clearance_bump(1.0), 0.0);
  EXPECT_NEAR(clearance_bump(0.5), 1.0, 1e-15);
  EXPECT_LT(clearance_bump(0.01), 1e-4);
}

TEST(PickPlacePlan, SampleCountAndPhaseWindows) {
  const PickPlaceConfig c;
  const SetpointPlan plan = build_pick_place_plan(c);
  EXPECT_EQ(plan.size(), 139);
  EXPECT_NEAR(plan.duration(), 2.78, 1e-12);
  const auto w = phase_windows(c);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0], std::make_pair(0, 50));
  EXPECT_EQ(w[1], std::make_pair(50, 44));
  EXPECT_EQ(w[2], std::make_pair(94, 45));
  EXPECT_EQ(plan.grip_index, 50);
  EXPECT_EQ(plan.eject_index, 94);
}

TEST(PickPlacePlan, MassScheduleFollowsEvents) {
  const PickPlaceConfig c;
  const SetpointPlan plan = build_pick_place_plan(c);
  for (int k = 0; k < plan.size(); ++k) {
    const double want = (k >= 50 && k < 94) ? c.load_mass : 0.0;
    EXPECT_EQ(plan.mass[static_cast<std::size_t>(k)], want) << k;
    const bool ejecting = k >= 94 && k < 99;
    EXPECT_EQ(plan.eject[static_cast<std::size_t>(k)] != 0, ejecting) << k;
  }
}

TEST(PickPlacePlan, PickPhaseHoldsOrientationAndElongates) {
  const PickPlaceConfig c;
  const SetpointPlan plan = build_pick_place_plan(c);
  for (int k = 0; k < 50; ++k) {
    EXPECT_EQ(plan.alpha[static_cast<std::size_t>(k)], c.alpha_pick);
    EXPECT_EQ(plan.beta[static_cast<std::size_t>(k)], c.beta_base);
  }
  EXPECT_EQ(plan.p_bar.front(), 1.0);
  EXPECT_EQ(plan.p_bar[49], 1.2);
  const ElongationMap map;
  const PBarInterval iv;
  EXPECT_NEAR(radius_from_pbar(plan.p_bar.front(), map, iv).radius * 1e3, 347.9, 1e-9);
  EXPECT_NEAR(radius_from_pbar(plan.p_bar[49], map, iv).radius * 1e3, 353.9, 1e-9);
  for (int k = 50; k < plan.size(); ++k) EXPECT_EQ(plan.p_bar[static_cast<std::size_t>(k)], 1.2);
}

TEST(PickPlacePlan, CarryAndReturnSpanSixtyDegrees) {
  const PickPlaceConfig c;
  const SetpointPlan plan = build_pick_place_plan(c);
  const auto carry = std::minmax_element(plan.alpha.begin() + 50, plan.alpha.begin() + 94);
  EXPECT_NEAR(to_deg(*carry.second - *carry.first), 60.0, 0.5);
  const auto back = std::minmax_element(plan.alpha.begin() + 94, plan.alpha.end());
  EXPECT_NEAR(to_deg(*back.second - *back.first), 60.0, 1e-9);
  EXPECT_EQ(plan.alpha.back(), c.alpha_pick);
  const double beta_peak = *std::max_element(plan.beta.begin() + 50, plan.beta.begin() + 94);
  EXPECT_NEAR(beta_peak, c.beta_base + c.beta_clearance, 1e-12);
}

TEST(PickPlacePlan, RejectsInconsistentPeriod) {
  PickPlaceConfig c;
  c.period = 3.0;
  EXPECT_THROW(build_pick_place_plan(c), InvalidInput);
}

TEST(PickPlacePlan, RejectsMovingPickPhase) {
  PickPlaceConfig c;
  auto phases = pick_place_phases(c);
  phases[0].alpha = Move{0.0, 0.1, 0.0, 0.5, 0.0};
  EXPECT_THROW(build_pick_phase(phases[0], kTs), InvalidInput);
}

TEST(PickPlacePlan, IsDeterministic) {
  EXPECT_EQ(build_pick_place_plan(PickPlaceConfig{}), build_pick_place_plan(PickPlaceConfig{}));
}

TEST(PickPlacePlan, EqualsConcatenatedPhases) {
  const PickPlaceConfig c;
  const SetpointPlan plan = build_pick_place_plan(c);
  const auto phases = pick_place_phases(c);
  SetpointPlan joined = build_pick_phase(phases[0], c.ts);
  joined.append(build_phase(phases[1], c.ts));
  joined.append(build_phase(phases[2], c.ts));
  EXPECT_EQ(joined.alpha, plan.alpha);
  EXPECT_EQ(joined.beta, plan.beta);
  EXPECT_EQ(joined.p_bar, plan.p_bar);
  EXPECT_EQ(joined.mass, plan.mass);
}

TEST(PickPlacePlan, SliceKeepsInteriorEventsOnly) {
  const PickPlaceConfig c;
  const SetpointPlan plan = build_pick_place_plan(c);
  const SetpointPlan carry = slice_plan(plan, 50, 44);
  EXPECT_FALSE(carry.grip_index.has_value());
  EXPECT_FALSE(carry.eject_index.has_value());
  const SetpointPlan around = slice_plan(plan, 40, 80);
  EXPECT_EQ(around.grip_index, 10);
  EXPECT_EQ(around.eject_index, 54);
  EXPECT_NO_THROW(validate_plan(around));
  EXPECT_THROW(slice_plan(plan, 100, 40), InvalidInput);
}

TEST(ValidatePlan, AcceptsGeneratedPlans) {
  EXPECT_NO_THROW(validate_plan(build_pick_place_plan(PickPlaceConfig{})));
  EXPECT_NO_THROW(validate_plan(build_transition_plan(TransitionConfig{})));
  TransitionConfig loaded;
  loaded.mass = 0.2;
  loaded.transition = 0.6;
  EXPECT_NO_THROW(validate_plan(build_transition_plan(loaded)));
}

TEST(ValidatePlan, ListsOffendingSamples) {
  SetpointPlan plan = build_pick_place_plan(PickPlaceConfig{});
  plan.alpha[7] = deg(80.0);
  plan.p_bar[20] = 1.3;
  try {
    validate_plan(plan);
    FAIL() << "expected a validation error";
  } catch (const InvalidInput& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("[7] alpha out of range"), std::string::npos);
    EXPECT_NE(what.find("[8] angle jump"), std::string::npos);
    EXPECT_NE(what.find("[20] p_bar out of range"), std::string::npos);
  }
}

TEST(ValidatePlan, MassChangesOnlyAtEvents) {
  SetpointPlan plan = build_pick_place_plan(PickPlaceConfig{});
  plan.mass[30] = 0.1;
  EXPECT_THROW(validate_plan(plan), InvalidInput);
  SetpointPlan swapped = build_pick_place_plan(PickPlaceConfig{});
  std::swap(swapped.grip_index, swapped.eject_index);
  EXPECT_THROW(validate_plan(swapped), InvalidInput);
}

TEST(TransitionPlan, LayoutAndLoad) {
  TransitionConfig c;
  const SetpointPlan plan = build_transition_plan(c);
  EXPECT_EQ(plan.size(), 55);
  EXPECT_EQ(plan.alpha[10], c.alpha_start);
  EXPECT_NEAR(plan.alpha[25], c.alpha_end, 1e-15);
  EXPECT_EQ(plan.alpha.back(), c.alpha_end);
  for (double b : plan.beta) EXPECT_EQ(b, c.beta);
  c.mass = 0.2;
  for (double m : build_transition_plan(c).mass) EXPECT_EQ(m, 0.2);
}

TEST(PlanCsv, RoundTripsThroughTraceSchema) {
  const PickPlaceConfig c;
  const SetpointPlan plan = build_pick_place_plan(c);
  std::stringstream buf;
  csv::write_plan(buf, plan, ElongationMap{}, PBarInterval{}, "softarm test seed=1");
  const csv::Table table = csv::read(buf);
  EXPECT_EQ(table.header, csv::trace_header());
  const SetpointPlan back = csv::read_plan(table);
  EXPECT_EQ(back, plan);
}

}  // namespace
}  // namespace softarm
