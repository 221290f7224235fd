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

// Command-line driver for the soft-arm experiments.
//
//   softarm allocation-check [--samples N]
//   softarm identify
//   softarm track
//   softarm ilc-train [--task transition|pick|carry|return|pickplace] [--plan CSV]
//   softarm pickplace [--warm-start CSV...] [--cold-start] [--trials N]
//
// Shared flags: --config, --seed, --out, --iterations, --emit-plot-data.
// Exit codes: 0 success, 2 usage or configuration error, 3 numerical
// failure, 4 property violation.

#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "softarm/config.hpp"
#include "softarm/csv.hpp"
#include "softarm/experiments.hpp"

namespace fs = std::filesystem;
using namespace softarm;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kNumerical = 3;
constexpr int kViolation = 4;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::optional<int> iterations;
  bool plot = false;
};

class Output {
 public:
  Output(const std::string& dir, std::string command, std::uint64_t seed)
      : dir_(dir), command_(std::move(command)), seed_(seed) {
    fs::create_directories(dir_);
  }

  std::ofstream open(const std::string& name) const {
    const fs::path p = dir_ / name;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write " + p.string());
    return out;
  }

  std::string comment() const {
    return "softarm " + command_ + " seed=" + std::to_string(seed_);
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

 private:
  fs::path dir_;
  std::string command_;
  std::uint64_t seed_;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? default_config() : load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

void write_config(const Output& out, const ExperimentConfig& cfg) {
  out.open("config_used.json") << config_to_json(cfg).dump(2) << "\n";
}

std::string fmt(double v, int precision = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

std::string level_tag(double p_bar) { return fmt(p_bar, 2); }

void print_metrics(const std::string& label, const ErrorMetrics& m) {
  std::cout << label << ": rms " << fmt(to_deg(m.rms.alpha)) << "/"
            << fmt(to_deg(m.rms.beta)) << " deg, max " << fmt(to_deg(m.max.alpha))
            << "/" << fmt(to_deg(m.max.beta)) << " deg (alpha/beta)\n";
}

/// Downsampled angle traces in degrees for external plotting.
void write_plot_trace(const Output& out, const std::string& name,
                      const std::vector<TraceSample>& trace, int stride = 1) {
  std::ofstream f = out.open("plot/" + name);
  csv::Writer w(f,
                {"time", "alpha_ref_deg", "beta_ref_deg", "alpha_deg", "beta_deg",
                 "radius_mm", "mass"},
                out.comment());
  for (std::size_t k = 0; k < trace.size(); k += static_cast<std::size_t>(stride)) {
    const TraceSample& s = trace[k];
    w.row({s.time, to_deg(s.reference.alpha), to_deg(s.reference.beta),
           to_deg(s.angle.alpha), to_deg(s.angle.beta), s.radius * 1000.0, s.mass});
  }
}

void write_learning(const Output& out, const std::string& prefix,
                    const LearningRun& run, const ExperimentConfig& cfg, bool plot) {
  {
    std::ofstream f = out.open(prefix + "_history.csv");
    csv::write_history(f, run.history, out.comment());
  }
  {
    std::ofstream f = out.open(prefix + "_correction.csv");
    csv::write_correction(f, run.history.last().correction, run.plan.ts, out.comment());
  }
  if (plot) {
    const Rollout first = simulate(run.plan, cfg.loop, run.history.first().correction, cfg.seed);
    const Rollout last = simulate(run.plan, cfg.loop, run.history.last().correction, cfg.seed);
    write_plot_trace(out, prefix + "_iteration0.csv", first.trace);
    write_plot_trace(out, prefix + "_final.csv", last.trace);
  }
}

void print_history(const std::string& label, const IlcHistory& h) {
  const auto& a = h.first().metrics;
  const auto& b = h.last().metrics;
  std::cout << label << ": iteration 0 rms " << fmt(to_deg(a.rms.alpha)) << "/"
            << fmt(to_deg(a.rms.beta)) << " max " << fmt(to_deg(a.max.alpha)) << "/"
            << fmt(to_deg(a.max.beta)) << " deg -> iteration " << h.last().iteration
            << " rms " << fmt(to_deg(b.rms.alpha)) << "/" << fmt(to_deg(b.rms.beta))
            << " max " << fmt(to_deg(b.max.alpha)) << "/" << fmt(to_deg(b.max.beta))
            << " deg" << (h.stopped_on_plateau ? " (plateau stop)" : "") << "\n";
}

// ---------------------------------------------------------------------------

int run_allocation_check(const Common& c, std::optional<int> samples) {
  ExperimentConfig cfg = load(c);
  if (samples) cfg.allocation.samples = *samples;
  Output out(c.out_dir, "allocation-check", cfg.seed);
  write_config(out, cfg);
  const AllocationReport r = allocation_check(cfg);
  const auto& rt = r.round_trip;
  std::cout << "round trip: " << rt.samples << " samples, max error " << rt.max_error
            << ", floor violations " << rt.floor_violations
            << ", difference violations " << rt.difference_violations << "\n";
  if (rt.first_offender) {
    const auto& x = *rt.first_offender;
    std::cout << "first offending sample: p_bar=" << x.p_bar << " dp_alpha=" << x.dp_alpha
              << " dp_beta=" << x.dp_beta << "\n";
  }
  {
    std::ofstream f = out.open("allocation.csv");
    csv::Writer w(f, {"coupling", "similarity", "closure_gap"}, out.comment());
    for (const auto& run : r.sweep) {
      w.row({run.coupling, run.similarity, run.closure_gap});
      std::cout << "lissajous coupling " << fmt(run.coupling, 2) << ": similarity "
                << fmt(run.similarity, 4) << "\n";
    }
  }
  if (c.plot && !r.sweep.empty()) {
    const auto& run = r.sweep.front();
    std::ofstream f = out.open("plot/lissajous.csv");
    csv::Writer w(f, {"time", "dp_alpha", "dp_beta", "alpha_deg", "beta_deg"}, out.comment());
    for (std::size_t k = 0; k < run.time.size(); ++k) {
      w.row({run.time[k], run.dp_alpha[k], run.dp_beta[k], to_deg(run.alpha[k]),
             to_deg(run.beta[k])});
    }
  }
  const bool ok = r.passed(cfg.allocation.min_similarity);
  std::cout << "decoupled similarity >= " << cfg.allocation.min_similarity << ": "
            << (r.similarity_ok(cfg.allocation.min_similarity) ? "yes" : "no")
            << ", monotone in coupling: " << (r.monotonic ? "yes" : "no")
            << ", closed curve: " << (r.closed ? "yes" : "no") << "\n";
  std::cout << (ok ? "allocation-check passed" : "allocation-check FAILED") << "\n";
  return ok ? kOk : kViolation;
}

int run_identify(const Common& c) {
  const ExperimentConfig cfg = load(c);
  Output out(c.out_dir, "identify", cfg.seed);
  write_config(out, cfg);
  const auto measured = measure_campaign(cfg);
  IdentificationReport r;
  try {
    r = identify_from_levels(measured, cfg, cfg.identification_noise, cfg.seed);
  } catch (const Error&) {
    // Report which levels fail before propagating.
    for (Axis axis : kAxes) {
      for (const LevelResult& l : measured[axis]) {
        try {
          extract_physical_parameters(
              fit_transfer_function(l.data, 0, 3, cfg.identification.fit).model,
              cfg.loop.plant.mech.inertia(0.0));
        } catch (const Error& e) {
          std::cerr << "fit failed: axis " << axis_name(axis) << " p_bar "
                    << level_tag(l.p_bar) << ": " << e.what() << "\n";
        }
      }
    }
    throw;
  }
  const auto& levels = r.axes.alpha.levels;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    std::ofstream f = out.open("bode_pbar_" + level_tag(levels[i].p_bar) + ".csv");
    csv::write_bode(f, {r.axes.alpha.levels[i].data, r.axes.beta.levels[i].data},
                    out.comment() + " p_bar=" + level_tag(levels[i].p_bar));
  }
  {
    std::ofstream f = out.open("identification.csv");
    csv::Writer w(f, {"axis", "p_bar", "k", "d", "eta", "t", "weighted_residual", "condition"},
                  out.comment() + " axis 0=alpha 1=beta");
    for (Axis axis : kAxes) {
      for (const LevelResult& l : r.axes[axis].levels) {
        w.row({static_cast<double>(axis), l.p_bar, l.values.k, l.values.d, l.values.eta,
               l.values.t, l.fit.weighted_residual, l.fit.condition});
      }
    }
  }
  ExperimentConfig fitted = cfg;
  fitted.loop.plant.joint = r.fitted;
  fitted.kappa.reset();
  fitted.resolve();
  out.open("fitted_config.json") << config_to_json(fitted).dump(2) << "\n";
  if (c.plot) {
    for (Axis axis : kAxes) {
      std::ofstream f = out.open(std::string("plot/bode_") + axis_name(axis) + ".csv");
      csv::Writer w(f, {"p_bar", "frequency_hz", "gain_db", "phase_deg", "model_gain_db",
                        "model_phase_deg"},
                    out.comment());
      for (const LevelResult& l : r.axes[axis].levels) {
        for (const FrequencyPoint& p : l.data) {
          const Complex m = l.fit.model.at_frequency(p.frequency_hz);
          w.row({l.p_bar, p.frequency_hz, 20.0 * std::log10(std::abs(p.response)),
                 to_deg(std::arg(p.response)), 20.0 * std::log10(std::abs(m)),
                 to_deg(std::arg(m))});
        }
      }
    }
  }
  for (Axis axis : kAxes) {
    const AxisValues& e = r.sup_error[axis];
    std::cout << axis_name(axis) << " sup relative error vs configured: k "
              << fmt(100 * e.k) << "%, d " << fmt(100 * e.d) << "%, eta "
              << fmt(100 * e.eta) << "%, T " << fmt(100 * e.t) << "%\n";
  }
  std::cout << "wrote " << levels.size() << " Bode CSVs and fitted_config.json to "
            << c.out_dir << "\n";
  return kOk;
}

int run_track(const Common& c) {
  const ExperimentConfig cfg = load(c);
  Output out(c.out_dir, "track", cfg.seed);
  write_config(out, cfg);
  const TrackReport r = track(cfg);
  std::ofstream summary = out.open("track_summary.csv");
  csv::Writer w(summary, {"mass", "rms_alpha", "rms_beta", "max_alpha", "max_beta"},
                out.comment());
  for (const TrackRun& run : r.runs) {
    const std::string tag = fmt(run.mass, 2);
    std::ofstream f = out.open("track_m" + tag + ".csv");
    csv::write_trace(f, run.rollout.trace, out.comment() + " mass=" + tag);
    w.row({run.mass, run.metrics.rms.alpha, run.metrics.rms.beta, run.metrics.max.alpha,
           run.metrics.max.beta});
    print_metrics("m = " + tag + " kg", run.metrics);
    if (c.plot) write_plot_trace(out, "track_m" + tag + ".csv", run.rollout.trace);
  }
  std::cout << "rms ratio across masses: " << fmt(r.rms_ratio.alpha, 4) << "/"
            << fmt(r.rms_ratio.beta, 4) << " (alpha/beta)\n";
  return kOk;
}

SetpointPlan task_plan(const ExperimentConfig& cfg, const std::string& task) {
  if (task == "transition") return build_transition_plan(cfg.transition);
  if (task == "pick") return phase_plan(cfg.pickplace, 0);
  if (task == "carry") return phase_plan(cfg.pickplace, 1);
  if (task == "return") return phase_plan(cfg.pickplace, 2);
  if (task == "pickplace") return build_pick_place_plan(cfg.pickplace);
  throw ConfigError("unknown task '" + task + "'");
}

int run_ilc_train(const Common& c, const std::string& task, const std::string& plan_path,
                  const std::vector<std::string>& warm) {
  const ExperimentConfig cfg = load(c);
  Output out(c.out_dir, "ilc-train", cfg.seed);
  write_config(out, cfg);
  SetpointPlan plan;
  if (!plan_path.empty()) {
    plan = csv::read_plan(csv::read_file(plan_path));
    validate_plan(plan, cfg.loop.plant.pressure.p_bar);
  } else {
    plan = task_plan(cfg, task);
  }
  Eigen::VectorXd initial;
  if (!warm.empty()) {
    std::vector<Eigen::VectorXd> parts;
    std::vector<std::pair<int, int>> windows;
    for (const auto& p : warm) {
      parts.push_back(csv::read_correction(csv::read_file(p)));
      windows.emplace_back(0, static_cast<int>(parts.back().size() / 2));
    }
    initial = warm_start_concatenate(parts, windows, plan.size());
  }
  {
    std::ofstream f = out.open("plan.csv");
    csv::write_plan(f, plan, cfg.loop.plant.elongation, cfg.loop.plant.pressure.p_bar,
                    out.comment());
  }
  const LearningRun run = learn(cfg, plan, c.iterations.value_or(cfg.ilc_iterations), initial);
  write_learning(out, "ilc", run, cfg, c.plot);
  print_history("ilc " + (plan_path.empty() ? task : plan_path), run.history);
  if (run.history.failed) {
    std::cerr << "learning aborted: " << run.history.failure << "\n";
    return kNumerical;
  }
  return kOk;
}

int run_pickplace(const Common& c, const std::vector<std::string>& warm, bool cold,
                  std::optional<int> trials) {
  const ExperimentConfig cfg = load(c);
  Output out(c.out_dir, "pickplace", cfg.seed);
  write_config(out, cfg);
  PickPlaceOptions opt;
  opt.cold_start = cold;
  opt.trials = trials;
  opt.joint_iterations = c.iterations;
  if (!warm.empty()) {
    const SetpointPlan plan = build_pick_place_plan(cfg.pickplace);
    std::vector<Eigen::VectorXd> parts;
    std::vector<std::pair<int, int>> windows;
    for (const auto& p : warm) {
      parts.push_back(csv::read_correction(csv::read_file(p)));
      windows.emplace_back(0, static_cast<int>(parts.back().size() / 2));
    }
    opt.warm_start = warm_start_concatenate(parts, windows, plan.size());
  }
  const PickPlaceReport r = pickplace(cfg, opt);

  static const char* kPhase[] = {"phase_I", "phase_II", "phase_III"};
  for (std::size_t i = 0; i < r.phases.size(); ++i) {
    write_learning(out, kPhase[i], r.phases[i], cfg, c.plot);
    print_history(kPhase[i], r.phases[i].history);
  }
  {
    std::ofstream f = out.open("warm_start.csv");
    csv::write_correction(f, r.warm_start, r.plan.ts, out.comment());
  }
  {
    std::ofstream f = out.open("plan.csv");
    csv::write_plan(f, r.plan, cfg.loop.plant.elongation, cfg.loop.plant.pressure.p_bar,
                    out.comment());
  }
  write_learning(out, "joint", r.joint, cfg, c.plot);
  print_history("joint", r.joint.history);
  std::cout << "eject-window max error without correction: "
            << fmt(to_deg(r.cold_eject_error.alpha)) << "/"
            << fmt(to_deg(r.cold_eject_error.beta)) << " deg, with warm start "
            << fmt(to_deg(r.warm_eject_error.alpha)) << "/"
            << fmt(to_deg(r.warm_eject_error.beta)) << " deg\n";

  std::ofstream f = out.open("trials.csv");
  csv::Writer w(f, {"trial", "seed", "eject_error_alpha", "eject_error_beta", "success"},
                out.comment());
  for (std::size_t t = 0; t < r.trials.size(); ++t) {
    const TrialResult& trial = r.trials[t];
    w.row({static_cast<double>(t), static_cast<double>(trial.seed), trial.eject_error.alpha,
           trial.eject_error.beta, trial.success ? 1.0 : 0.0});
    if (!trial.success) {
      std::ofstream tf = out.open("failed_trial_" + std::to_string(t) + ".csv");
      csv::write_trace(tf, trial.rollout.trace,
                       out.comment() + " trial_seed=" + std::to_string(trial.seed));
      std::cout << "trial " << t << " failed: eject error "
                << fmt(to_deg(trial.eject_error.alpha)) << "/"
                << fmt(to_deg(trial.eject_error.beta)) << " deg, trace in failed_trial_"
                << t << ".csv\n";
    }
  }
  std::cout << r.successes << "/" << r.trials.size()
            << " trials within " << fmt(to_deg(cfg.pickplace_training.threshold), 2)
            << " deg during the eject window\n";
  return r.successes == static_cast<int>(r.trials.size()) ? kOk : kViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft-arm allocation, identification, control and learning experiments"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Configuration file (JSON)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Random seed (overrides the config)");
    sub->add_option("--out", common.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--iterations", common.iterations, "Learning iterations");
    sub->add_flag("--emit-plot-data", common.plot, "Write downsampled traces for plotting");
  };

  std::optional<int> samples;
  auto* alloc =
      app.add_subcommand("allocation-check", "Allocation round trip and Lissajous replay");
  add_common(alloc);
  alloc->add_option("--samples", samples, "Random round-trip samples")
      ->check(CLI::PositiveNumber);

  auto* ident = app.add_subcommand("identify", "Frequency-domain identification campaign");
  add_common(ident);

  auto* trk = app.add_subcommand("track", "Feedback-only tracking at every configured mass");
  add_common(trk);

  std::string task = "transition";
  std::string plan_path;
  std::vector<std::string> warm;
  auto* ilc = app.add_subcommand("ilc-train", "Learn a reference correction for one plan");
  add_common(ilc);
  ilc->add_option("--task", task, "transition, pick, carry, return or pickplace")
      ->check(CLI::IsMember({"transition", "pick", "carry", "return", "pickplace"}))
      ->capture_default_str();
  ilc->add_option("--plan", plan_path, "Plan CSV instead of a built-in task")
      ->check(CLI::ExistingFile);
  ilc->add_option("--warm-start", warm, "Correction CSV files concatenated as the start")
      ->check(CLI::ExistingFile);

  bool cold = false;
  std::optional<int> trials;
  auto* pp = app.add_subcommand("pickplace", "Warm start, joint training and noisy trials");
  add_common(pp);
  pp->add_option("--warm-start", warm, "Per-phase or full correction CSV files")
      ->check(CLI::ExistingFile);
  pp->add_flag("--cold-start", cold, "Start joint training from zero correction");
  pp->add_option("--trials", trials, "Noisy evaluation trials")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*alloc) return run_allocation_check(common, samples);
    if (*ident) return run_identify(common);
    if (*trk) return run_track(common);
    if (*ilc) return run_ilc_train(common, task, plan_path, warm);
    if (*pp) {
      if (cold && !warm.empty()) {
        throw ConfigError("--cold-start and --warm-start exclude each other");
      }
      return run_pickplace(common, warm, cold, trials);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
