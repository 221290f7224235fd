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
 * @file config.hpp
 *
 * Experiment configuration and its JSON form. Every key is optional and
 * falls back to the built-in default; unknown keys are rejected so typos
 * do not silently run the default. Angles are given in degrees in the file
 * (keys ending in `_deg`) and held in radians in memory.
 */
#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "softarm/control.hpp"
#include "softarm/errors.hpp"
#include "softarm/parameters.hpp"
#include "softarm/plant.hpp"
#include "softarm/simulation.hpp"
#include "softarm/sysid.hpp"
#include "softarm/trajectory.hpp"

namespace softarm {

struct TrackConfig {
  std::vector<double> alpha_steps{0.0, deg(20.0), deg(-20.0), 0.0};
  std::vector<double> beta_steps{0.0, deg(-15.0), deg(10.0), 0.0};
  double transition = 0.4;  // s
  double hold = 1.6;        // s, after each transition
  double p_bar = 1.1;
  std::vector<double> masses{0.0, 0.2};
};

struct PickPlaceTraining {
  std::vector<int> phase_iterations{25, 24, 24};
  int joint_iterations = 33;
  int trials = 50;
  double threshold = deg(1.0);
};

struct AllocationCheckConfig {
  int samples = 100000;
  double p_bar = 1.05;
  double amplitude = 0.3;     // bar
  double frequency = 0.25;    // Hz of Δp_α; Δp_β runs at twice this
  double duration = 8.0;      // s
  std::vector<double> coupling_sweep{0.0, 0.05, 0.1, 0.2, 0.4};
  double min_similarity = 0.95;
};

struct ExperimentConfig {
  LoopConfig loop = default_loop(true);
  std::optional<PerAxis<double>> kappa;  // explicit κ; else from the pole rule
  double slow_pole_hz = 2.0;
  double kappa_p_bar = 1.1;

  IlcDesign ilc{};
  int ilc_iterations = 24;
  bool plateau_stop = false;

  TransitionConfig transition{};
  PickPlaceConfig pickplace{};
  PickPlaceTraining pickplace_training{};
  TrackConfig track{};
  IdentificationOptions identification{};
  double identification_noise = 0.0;  // relative, on the frequency response
  AllocationCheckConfig allocation{};
  std::uint64_t seed = 1;

  /// Recomputes κ from the pole rule unless it was given explicitly.
  void resolve() {
    loop.controller.kappa =
        kappa ? *kappa
              : default_kappa(loop.model_joint(), kappa_p_bar, slow_pole_hz);
    transition.ts = loop.controller.ts;
    pickplace.ts = loop.controller.ts;
  }

  void validate() const {
    loop.plant.validate();
    loop.controller.validate();
    if (loop.controller_joint) loop.controller_joint->validate(loop.plant.pressure.p_bar);
    if (ilc_iterations < 0) throw ConfigError("ilc.iterations must be >= 0");
    if (!(ilc.change_weight > 0.0) || !(ilc.error_weight >= 0.0) ||
        !(ilc.rate_weight >= 0.0)) {
      throw ConfigError("ilc weights need W_e >= 0, W_du > 0, W_udot >= 0");
    }
    if (pickplace_training.phase_iterations.size() != 3) {
      throw ConfigError("pickplace.phase_iterations needs one entry per phase");
    }
  }
};

namespace detail {

using nlohmann::json;

/// Reads optional keys of one JSON object and reports unknown ones.
class Section {
 public:
  Section(const json* node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_->is_object()) {
      throw ConfigError(path_ + " must be an object");
    }
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  void read_deg(const char* key, double& radians) {
    double degrees = to_deg(radians);
    read(key, degrees);
    radians = deg(degrees);
  }

  void read_deg(const char* key, std::vector<double>& radians) {
    std::vector<double> degrees;
    for (double r : radians) degrees.push_back(to_deg(r));
    read(key, degrees);
    radians.clear();
    for (double d : degrees) radians.push_back(deg(d));
  }

  Section child(const char* key) {
    seen_.insert(key);
    const json* sub = node_ && node_->contains(key) ? &node_->at(key) : nullptr;
    return Section(sub, path_ + "." + key);
  }

  bool has(const char* key) const { return node_ && node_->contains(key); }

  void finish() const {
    if (!node_) return;
    for (const auto& [key, value] : node_->items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key " + path_ + "." + key);
    }
  }

 private:
  const json* node_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_axis_polynomials(Section s, AxisPolynomials& p) {
  s.read("k", p.k.coefficients);
  s.read("d", p.d.coefficients);
  s.read("eta", p.eta.coefficients);
  s.read("t", p.t.coefficients);
  s.finish();
}

inline void read_joint(Section s, JointParameters& joint) {
  read_axis_polynomials(s.child("alpha"), joint.axes.alpha);
  read_axis_polynomials(s.child("beta"), joint.axes.beta);
  s.finish();
}

inline json axis_polynomials_json(const AxisPolynomials& p) {
  return json{{"k", p.k.coefficients},
              {"d", p.d.coefficients},
              {"eta", p.eta.coefficients},
              {"t", p.t.coefficients}};
}

inline json joint_json(const JointParameters& joint) {
  return json{{"alpha", axis_polynomials_json(joint.axes.alpha)},
              {"beta", axis_polynomials_json(joint.axes.beta)}};
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& root) {
  using detail::Section;
  ExperimentConfig c;
  Section top(&root, "config");
  top.read("seed", c.seed);

  {
    Section s = top.child("mechanical");
    s.read("r0", c.loop.plant.mech.r0);
    s.read("link_mass", c.loop.plant.mech.link_mass);
    s.read("g", c.loop.plant.mech.g);
    s.finish();
  }
  detail::read_joint(top.child("joint"), c.loop.plant.joint);
  if (top.has("controller_joint")) {
    JointParameters model = c.loop.plant.joint;
    detail::read_joint(top.child("controller_joint"), model);
    c.loop.controller_joint = model;
  }
  top.child("controller_joint");
  {
    Section s = top.child("pressure");
    PressureConfig& p = c.loop.plant.pressure;
    s.read("lag_time_constant", p.lag_time_constant);
    s.read("max", p.max);
    s.read("floor", p.floor);
    s.read("p_bar_min", p.p_bar.min);
    s.read("p_bar_max", p.p_bar.max);
    s.finish();
  }
  {
    Section s = top.child("elongation");
    s.read("r_at_min", c.loop.plant.elongation.r_at_min);
    s.read("span", c.loop.plant.elongation.span);
    s.finish();
  }
  {
    Section s = top.child("disturbance");
    DisturbanceConfig& d = c.loop.plant.disturbance;
    s.read("cross_coupling", d.cross_coupling);
    s.read("gravity", d.gravity);
    s.read("pbar_kick_gain", d.pbar_kick_gain);
    s.read("deposit_impulse", d.deposit_impulse);
    s.read_deg("noise_std_deg", d.noise_std);
    s.finish();
  }
  {
    Section s = top.child("simulation");
    s.read("dt", c.loop.plant.dt);
    s.read_deg("angle_limit_deg", c.loop.plant.angle_limit);
    s.read("divergence_bound", c.loop.plant.divergence_bound);
    s.finish();
  }
  {
    Section s = top.child("controller");
    ControllerConfig& k = c.loop.controller;
    if (s.has("kappa")) {
      Section ks = s.child("kappa");
      PerAxis<double> kappa{};
      ks.read("alpha", kappa.alpha);
      ks.read("beta", kappa.beta);
      ks.finish();
      c.kappa = kappa;
    }
    s.child("kappa");
    s.read("slow_pole_hz", c.slow_pole_hz);
    s.read("kappa_p_bar", c.kappa_p_bar);
    s.read("ts", k.ts);
    s.read("derivative_filter", k.derivative_filter);
    s.read("integrator_limit", k.integrator_limit);
    s.read("gravity_feedforward", k.gravity_feedforward);
    std::string source = k.mass_source == MassSource::kTrue ? "true" : "user";
    s.read("mass_source", source);
    if (source == "true") k.mass_source = MassSource::kTrue;
    else if (source == "user") k.mass_source = MassSource::kUser;
    else throw ConfigError("controller.mass_source must be \"true\" or \"user\"");
    s.read("user_mass", k.user_mass);
    s.finish();
  }
  {
    Section s = top.child("ilc");
    s.read("model_p_bar", c.ilc.model_p_bar);
    s.read("error_weight", c.ilc.error_weight);
    s.read("change_weight", c.ilc.change_weight);
    s.read("rate_weight", c.ilc.rate_weight);
    s.read("iterations", c.ilc_iterations);
    s.read("plateau_stop", c.plateau_stop);
    s.finish();
  }
  {
    Section s = top.child("transition");
    TransitionConfig& t = c.transition;
    s.read_deg("alpha_start_deg", t.alpha_start);
    s.read_deg("alpha_end_deg", t.alpha_end);
    s.read_deg("beta_deg", t.beta);
    s.read_deg("beta_bump_deg", t.beta_bump);
    s.read("lead_in", t.lead_in);
    s.read("transition", t.transition);
    s.read("hold", t.hold);
    s.read("p_bar", t.p_bar);
    s.read("mass", t.mass);
    s.finish();
  }
  {
    Section s = top.child("pickplace");
    PickPlaceConfig& p = c.pickplace;
    s.read("period", p.period);
    s.read_deg("alpha_pick_deg", p.alpha_pick);
    s.read_deg("alpha_place_deg", p.alpha_place);
    s.read_deg("beta_base_deg", p.beta_base);
    s.read_deg("beta_clearance_deg", p.beta_clearance);
    s.read("p_bar_low", p.p_bar_low);
    s.read("p_bar_high", p.p_bar_high);
    s.read("load_mass", p.load_mass);
    s.read("pick_duration", p.pick_duration);
    s.read("pick_rise_start", p.pick_rise_start);
    s.read("pick_rise_time", p.pick_rise_time);
    s.read("carry_transition", p.carry_transition);
    s.read("carry_dwell", p.carry_dwell);
    s.read("eject_window", p.eject_window);
    s.read("return_transition", p.return_transition);
    s.read("return_dwell", p.return_dwell);
    PickPlaceTraining& t = c.pickplace_training;
    s.read("phase_iterations", t.phase_iterations);
    s.read("joint_iterations", t.joint_iterations);
    s.read("trials", t.trials);
    s.read_deg("threshold_deg", t.threshold);
    s.finish();
  }
  {
    Section s = top.child("track");
    TrackConfig& t = c.track;
    s.read_deg("alpha_steps_deg", t.alpha_steps);
    s.read_deg("beta_steps_deg", t.beta_steps);
    s.read("transition", t.transition);
    s.read("hold", t.hold);
    s.read("p_bar", t.p_bar);
    s.read("masses", t.masses);
    s.finish();
  }
  {
    Section s = top.child("identification");
    IdentificationOptions& i = c.identification;
    s.read("p_bar_levels", i.p_bar_levels);
    s.read("frequencies_hz", i.experiment.frequencies_hz);
    s.read("amplitude", i.experiment.amplitude);
    s.read("periods", i.experiment.periods);
    s.read("discard", i.experiment.discard);
    s.read("linear_plant", i.linear_plant);
    s.read("noise_relative", c.identification_noise);
    Section deg_s = s.child("degrees");
    deg_s.read("k", i.degrees.k);
    deg_s.read("d", i.degrees.d);
    deg_s.read("eta", i.degrees.eta);
    deg_s.read("t", i.degrees.t);
    deg_s.finish();
    s.finish();
  }
  {
    Section s = top.child("allocation");
    AllocationCheckConfig& a = c.allocation;
    s.read("samples", a.samples);
    s.read("p_bar", a.p_bar);
    s.read("amplitude", a.amplitude);
    s.read("frequency", a.frequency);
    s.read("duration", a.duration);
    s.read("coupling_sweep", a.coupling_sweep);
    s.read("min_similarity", a.min_similarity);
    s.finish();
  }
  top.finish();
  c.resolve();
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(root);
}

/// Full resolved configuration, readable back by config_from_json.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  const auto& plant = c.loop.plant;
  const auto& k = c.loop.controller;
  const auto& t = c.transition;
  const auto& p = c.pickplace;
  const auto& i = c.identification;
  auto degs = [](const std::vector<double>& r) {
    std::vector<double> out;
    for (double v : r) out.push_back(to_deg(v));
    return out;
  };
  json j;
  j["seed"] = c.seed;
  j["mechanical"] = {{"r0", plant.mech.r0},
                     {"link_mass", plant.mech.link_mass},
                     {"g", plant.mech.g}};
  j["joint"] = detail::joint_json(plant.joint);
  if (c.loop.controller_joint) {
    j["controller_joint"] = detail::joint_json(*c.loop.controller_joint);
  }
  j["pressure"] = {{"lag_time_constant", plant.pressure.lag_time_constant},
                   {"max", plant.pressure.max},
                   {"floor", plant.pressure.floor},
                   {"p_bar_min", plant.pressure.p_bar.min},
                   {"p_bar_max", plant.pressure.p_bar.max}};
  j["elongation"] = {{"r_at_min", plant.elongation.r_at_min},
                     {"span", plant.elongation.span}};
  j["disturbance"] = {{"cross_coupling", plant.disturbance.cross_coupling},
                      {"gravity", plant.disturbance.gravity},
                      {"pbar_kick_gain", plant.disturbance.pbar_kick_gain},
                      {"deposit_impulse", plant.disturbance.deposit_impulse},
                      {"noise_std_deg", to_deg(plant.disturbance.noise_std)}};
  j["simulation"] = {{"dt", plant.dt},
                     {"angle_limit_deg", to_deg(plant.angle_limit)},
                     {"divergence_bound", plant.divergence_bound}};
  j["controller"] = {{"kappa", {{"alpha", k.kappa.alpha}, {"beta", k.kappa.beta}}},
                     {"slow_pole_hz", c.slow_pole_hz},
                     {"kappa_p_bar", c.kappa_p_bar},
                     {"ts", k.ts},
                     {"derivative_filter", k.derivative_filter},
                     {"integrator_limit", k.integrator_limit},
                     {"gravity_feedforward", k.gravity_feedforward},
                     {"mass_source", k.mass_source == MassSource::kTrue ? "true" : "user"},
                     {"user_mass", k.user_mass}};
  j["ilc"] = {{"model_p_bar", c.ilc.model_p_bar},
              {"error_weight", c.ilc.error_weight},
              {"change_weight", c.ilc.change_weight},
              {"rate_weight", c.ilc.rate_weight},
              {"iterations", c.ilc_iterations},
              {"plateau_stop", c.plateau_stop}};
  j["transition"] = {{"alpha_start_deg", to_deg(t.alpha_start)},
                     {"alpha_end_deg", to_deg(t.alpha_end)},
                     {"beta_deg", to_deg(t.beta)},
                     {"beta_bump_deg", to_deg(t.beta_bump)},
                     {"lead_in", t.lead_in},
                     {"transition", t.transition},
                     {"hold", t.hold},
                     {"p_bar", t.p_bar},
                     {"mass", t.mass}};
  j["pickplace"] = {{"period", p.period},
                    {"alpha_pick_deg", to_deg(p.alpha_pick)},
                    {"alpha_place_deg", to_deg(p.alpha_place)},
                    {"beta_base_deg", to_deg(p.beta_base)},
                    {"beta_clearance_deg", to_deg(p.beta_clearance)},
                    {"p_bar_low", p.p_bar_low},
                    {"p_bar_high", p.p_bar_high},
                    {"load_mass", p.load_mass},
                    {"pick_duration", p.pick_duration},
                    {"pick_rise_start", p.pick_rise_start},
                    {"pick_rise_time", p.pick_rise_time},
                    {"carry_transition", p.carry_transition},
                    {"carry_dwell", p.carry_dwell},
                    {"eject_window", p.eject_window},
                    {"return_transition", p.return_transition},
                    {"return_dwell", p.return_dwell},
                    {"phase_iterations", c.pickplace_training.phase_iterations},
                    {"joint_iterations", c.pickplace_training.joint_iterations},
                    {"trials", c.pickplace_training.trials},
                    {"threshold_deg", to_deg(c.pickplace_training.threshold)}};
  j["track"] = {{"alpha_steps_deg", degs(c.track.alpha_steps)},
                {"beta_steps_deg", degs(c.track.beta_steps)},
                {"transition", c.track.transition},
                {"hold", c.track.hold},
                {"p_bar", c.track.p_bar},
                {"masses", c.track.masses}};
  j["identification"] = {{"p_bar_levels", i.p_bar_levels},
                         {"frequencies_hz", i.experiment.frequencies_hz},
                         {"amplitude", i.experiment.amplitude},
                         {"periods", i.experiment.periods},
                         {"discard", i.experiment.discard},
                         {"linear_plant", i.linear_plant},
                         {"noise_relative", c.identification_noise},
                         {"degrees", {{"k", i.degrees.k},
                                      {"d", i.degrees.d},
                                      {"eta", i.degrees.eta},
                                      {"t", i.degrees.t}}}};
  j["allocation"] = {{"samples", c.allocation.samples},
                     {"p_bar", c.allocation.p_bar},
                     {"amplitude", c.allocation.amplitude},
                     {"frequency", c.allocation.frequency},
                     {"duration", c.allocation.duration},
                     {"coupling_sweep", c.allocation.coupling_sweep},
                     {"min_similarity", c.allocation.min_similarity}};
  return j;
}

inline ExperimentConfig default_config() {
  ExperimentConfig c;
  c.resolve();
  return c;
}

}  // namespace softarm
