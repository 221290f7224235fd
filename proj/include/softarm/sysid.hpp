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
 * @file sysid.hpp
 *
 * Frequency-domain identification of the per-axis model
 *
 *   G(s) = η / ((T s + 1)((m + M/4) R0² s² + d s + k))
 *
 * from stepped-sine experiments: excitation at one frequency for a number
 * of periods, transient periods discarded, the rest averaged and reduced to
 * a complex gain by sine/cosine correlation. A rational model is fitted to
 * the complex data by iteratively reweighted linear least squares
 * (Sanathanan-Koerner), factored into physical parameters using the known
 * inertia, and finally polynomials in p̄ are fitted across pressure levels.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "softarm/errors.hpp"
#include "softarm/parameters.hpp"
#include "softarm/plant.hpp"

namespace softarm {

using Complex = std::complex<double>;

struct SineExperiment {
  std::vector<double> frequencies_hz;
  double amplitude = 0.1;  // bar
  int periods = 10;
  int discard = 4;
  double p_bar = 1.1;
  Axis axis = Axis::kAlpha;

  void validate() const {
    if (frequencies_hz.empty()) throw InvalidInput("empty frequency grid");
    for (std::size_t i = 0; i < frequencies_hz.size(); ++i) {
      if (!(frequencies_hz[i] > 0.0) ||
          (i > 0 && !(frequencies_hz[i] > frequencies_hz[i - 1]))) {
        throw InvalidInput("frequencies must be positive and strictly increasing");
      }
    }
    if (periods <= discard || discard < 0) {
      throw InvalidInput("periods must exceed the discard count");
    }
    if (!(amplitude > 0.0)) throw InvalidInput("amplitude must be positive");
  }
};

struct FrequencyPoint {
  double frequency_hz = 0.0;
  Complex response{};  // output / input, rad/bar
  double variance = 0.0;  // variance of the averaged estimate, |.|²

  double gain() const { return std::abs(response); }
  double phase() const { return std::arg(response); }
};

using FrequencyResponseData = std::vector<FrequencyPoint>;

/// n log-spaced points on [f_min, f_max].
inline std::vector<double> log_grid(double f_min, double f_max, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double r = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    out[static_cast<std::size_t>(i)] = f_min * std::pow(f_max / f_min, r);
  }
  return out;
}

/// Nearest frequency whose period is an integer number of samples.
inline double snap_frequency(double f, double dt) {
  const double samples = std::max(3.0, std::round(1.0 / (f * dt)));
  return 1.0 / (samples * dt);
}

inline std::vector<double> default_frequency_grid(double dt) {
  std::vector<double> grid = log_grid(0.2, 8.0, 15);
  for (double& f : grid) f = snap_frequency(f, dt);
  return grid;
}

struct Correlation {
  double amplitude = 0.0;
  double phase = 0.0;  // signal ≈ amplitude · sin(ω t + phase)
  Complex phasor() const { return std::polar(amplitude, phase); }
};

/// Fourier coefficient of `signal` (sampled at k·dt, k = 0..n-1) at
/// `frequency_hz`. The window must span an integer number of periods.
inline Correlation sine_correlate(std::span<const double> signal,
                                  double frequency_hz, double dt) {
  const auto n = signal.size();
  if (n == 0) throw InvalidInput("empty signal");
  const double cycles = frequency_hz * dt * static_cast<double>(n);
  if (std::abs(cycles - std::round(cycles)) > 1e-6 || std::round(cycles) < 1) {
    throw SpectralLeakage("signal covers " + std::to_string(cycles) +
                          " periods, not an integer number");
  }
  const double w = 2.0 * std::numbers::pi * frequency_hz * dt;
  double in_phase = 0.0;
  double quadrature = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = w * static_cast<double>(k);
    in_phase += signal[k] * std::sin(angle);
    quadrature += signal[k] * std::cos(angle);
  }
  in_phase *= 2.0 / static_cast<double>(n);
  quadrature *= 2.0 / static_cast<double>(n);
  return Correlation{std::hypot(in_phase, quadrature),
                     std::atan2(quadrature, in_phase)};
}

/// Measured input and output of a single-input single-output experiment.
struct SisoRecord {
  std::vector<double> input;
  std::vector<double> output;
};

/// Runs the stepped-sine protocol on any SISO `system`, a callable mapping a
/// commanded input sequence to a SisoRecord of the same length. The response
/// is referenced to the measured input.
template <typename System>
FrequencyResponseData measure_frequency_response(const SineExperiment& exp,
                                                 double dt, System&& system) {
  exp.validate();
  FrequencyResponseData data;
  data.reserve(exp.frequencies_hz.size());
  for (const double f : exp.frequencies_hz) {
    const auto per_period = static_cast<std::size_t>(std::llround(1.0 / (f * dt)));
    if (std::abs(static_cast<double>(per_period) * f * dt - 1.0) > 1e-9) {
      throw SpectralLeakage("frequency " + std::to_string(f) +
                            " Hz has a non-integer period at dt=" +
                            std::to_string(dt));
    }
    const std::size_t total = per_period * static_cast<std::size_t>(exp.periods);
    std::vector<double> command(total);
    const double w = 2.0 * std::numbers::pi * f * dt;
    for (std::size_t k = 0; k < total; ++k) {
      command[k] = exp.amplitude * std::sin(w * static_cast<double>(k));
    }
    const SisoRecord rec = system(command);
    if (rec.input.size() != total || rec.output.size() != total) {
      throw InvalidInput("system returned a record of the wrong length");
    }

    // Per-period phasors of the kept periods; their spread gives the variance.
    std::vector<Complex> ratios;
    Complex mean_in{};
    Complex mean_out{};
    for (int p = exp.discard; p < exp.periods; ++p) {
      const std::size_t begin = per_period * static_cast<std::size_t>(p);
      const auto in = sine_correlate(
          std::span<const double>(rec.input).subspan(begin, per_period), f, dt);
      const auto out = sine_correlate(
          std::span<const double>(rec.output).subspan(begin, per_period), f, dt);
      mean_in += in.phasor();
      mean_out += out.phasor();
      ratios.push_back(out.phasor() / in.phasor());
    }
    const double kept = static_cast<double>(ratios.size());
    const Complex response = mean_out / mean_in;
    double spread = 0.0;
    for (const Complex& r : ratios) spread += std::norm(r - response);
    const double variance = kept > 1 ? spread / (kept * (kept - 1.0)) : 0.0;
    data.push_back(FrequencyPoint{f, response, variance});
  }
  return data;
}

/// Open-loop stepped-sine experiment on the simulated arm. The commanded
/// excitation is applied to one decoupled difference at constant p̄; the
/// response is referenced to the difference computed from the actual
/// actuator pressures, as a pressure-sensing test rig would.
inline FrequencyResponseData run_sine_experiment(const SineExperiment& exp,
                                                 const PlantConfig& cfg,
                                                 std::uint64_t seed = 1) {
  const double dt = cfg.dt;
  auto system = [&](const std::vector<double>& command) {
    Plant plant(cfg, seed);
    const PlantState rest = equilibrium_state(cfg, {}, exp.p_bar, cfg.mech.load_mass);
    plant.reset(rest);
    const DeltaRepresentation bias = actual_delta(rest);
    SisoRecord rec;
    rec.input.reserve(command.size());
    rec.output.reserve(command.size());
    for (const double u : command) {
      const auto y = plant.measure();
      rec.input.push_back(exp.axis == Axis::kAlpha
                              ? actual_delta(plant.state()).dp_alpha
                              : actual_delta(plant.state()).dp_beta);
      rec.output.push_back(y[exp.axis]);
      DeltaRepresentation cmd = bias;
      (exp.axis == Axis::kAlpha ? cmd.dp_alpha : cmd.dp_beta) += u;
      plant.advance(PlantInputs{xi(cmd), cfg.mech.load_mass, 0.0}, dt);
    }
    return rec;
  };
  return measure_frequency_response(exp, dt, system);
}

/// Rational transfer function with coefficients in ascending powers of s.
/// The denominator is monic (highest coefficient 1).
struct RationalModel {
  std::vector<double> numerator;
  std::vector<double> denominator;

  static Complex poly_eval(const std::vector<double>& c, Complex s) {
    Complex acc{};
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * s + *it;
    return acc;
  }

  Complex operator()(Complex s) const {
    return poly_eval(numerator, s) / poly_eval(denominator, s);
  }

  Complex at_frequency(double frequency_hz) const {
    return (*this)(Complex(0.0, 2.0 * std::numbers::pi * frequency_hz));
  }
};

struct FitOptions {
  int max_iterations = 50;
  double tolerance = 1e-8;       // relative coefficient change
  double variance_floor = 1e-3;  // relative: var >= (floor · |H|)²
  double max_condition = 1e12;
};

struct FitResult {
  RationalModel model;
  double weighted_residual = 0.0;  // sqrt(Σ w |H - Ĝ|² / Σ w), w = 1/var
  int iterations = 0;
  double condition = 0.0;
  bool converged = false;
};

/// Weights used by the fitter: inverse variance with a relative floor.
inline std::vector<double> fit_weights(const FrequencyResponseData& data,
                                       double variance_floor) {
  std::vector<double> w;
  w.reserve(data.size());
  for (const auto& p : data) {
    const double floor = std::pow(variance_floor * std::abs(p.response), 2);
    const double var = std::max({p.variance, floor, 1e-300});
    w.push_back(1.0 / var);
  }
  return w;
}

inline double weighted_residual(const FrequencyResponseData& data,
                                const RationalModel& model,
                                const std::vector<double>& weights) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    num += weights[k] * std::norm(data[k].response -
                                  model.at_frequency(data[k].frequency_hz));
    den += weights[k];
  }
  return std::sqrt(num / den);
}

/// Complex curve fit of B(s)/A(s), deg B = num_degree, deg A = den_degree.
inline FitResult fit_transfer_function(const FrequencyResponseData& data,
                                       int num_degree, int den_degree,
                                       const FitOptions& opt = {}) {
  if (num_degree < 0 || den_degree < 1) {
    throw InvalidInput("fit requires num_degree >= 0 and den_degree >= 1");
  }
  const int unknowns = num_degree + 1 + den_degree;
  if (static_cast<int>(data.size()) < unknowns) {
    throw InvalidInput("need at least " + std::to_string(unknowns) +
                       " frequency points");
  }
  // Work in x = s / w0 for conditioning.
  double log_sum = 0.0;
  for (const auto& p : data) {
    log_sum += std::log(2.0 * std::numbers::pi * p.frequency_hz);
  }
  const double w0 = std::exp(log_sum / static_cast<double>(data.size()));
  const std::vector<double> weights = fit_weights(data, opt.variance_floor);

  const auto rows = static_cast<Eigen::Index>(2 * data.size());
  std::vector<Complex> x(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    x[k] = Complex(0.0, 2.0 * std::numbers::pi * data[k].frequency_hz / w0);
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(unknowns);
  std::vector<double> prev_den(static_cast<std::size_t>(den_degree) + 1, 0.0);
  prev_den.back() = 1.0;
  FitResult result;
  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    Eigen::MatrixXd a(rows, unknowns);
    Eigen::VectorXd b(rows);
    for (std::size_t k = 0; k < data.size(); ++k) {
      const Complex h = data[k].response;
      const Complex scale =
          std::sqrt(weights[k]) / std::abs(RationalModel::poly_eval(prev_den, x[k]));
      Complex xp = 1.0;
      std::vector<Complex> row(static_cast<std::size_t>(unknowns));
      for (int i = 0; i <= std::max(num_degree, den_degree - 1); ++i) {
        if (i <= num_degree) row[static_cast<std::size_t>(i)] = xp * scale;
        if (i < den_degree) {
          row[static_cast<std::size_t>(num_degree + 1 + i)] = -h * xp * scale;
        }
        xp *= x[k];
      }
      Complex xn = std::pow(x[k], den_degree);
      const Complex rhs = h * xn * scale;
      const auto r = static_cast<Eigen::Index>(2 * k);
      for (int j = 0; j < unknowns; ++j) {
        a(r, j) = row[static_cast<std::size_t>(j)].real();
        a(r + 1, j) = row[static_cast<std::size_t>(j)].imag();
      }
      b(r) = rhs.real();
      b(r + 1) = rhs.imag();
    }
    // Column equilibration keeps the condition estimate meaningful.
    Eigen::VectorXd col = a.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < col.size(); ++j) {
      if (col(j) == 0.0) col(j) = 1.0;
    }
    const Eigen::MatrixXd scaled = a * col.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0.0
                            ? sv(0) / sv(sv.size() - 1)
                            : std::numeric_limits<double>::infinity();
    if (!(cond < opt.max_condition)) {
      throw FitFailed("ill-conditioned least-squares problem", cond);
    }
    const Eigen::VectorXd next = col.cwiseInverse().asDiagonal() * svd.solve(b);
    const double change = (next - theta).norm() / std::max(next.norm(), 1e-300);
    theta = next;
    for (int i = 0; i < den_degree; ++i) {
      prev_den[static_cast<std::size_t>(i)] = theta(num_degree + 1 + i);
    }
    result.iterations = iter;
    result.condition = cond;
    if (change < opt.tolerance) {
      result.converged = true;
      break;
    }
  }

  // Back to powers of s, then normalize the leading denominator coefficient.
  RationalModel model;
  model.numerator.resize(static_cast<std::size_t>(num_degree) + 1);
  model.denominator.resize(static_cast<std::size_t>(den_degree) + 1);
  for (int i = 0; i <= num_degree; ++i) {
    model.numerator[static_cast<std::size_t>(i)] = theta(i) / std::pow(w0, i);
  }
  for (int i = 0; i < den_degree; ++i) {
    model.denominator[static_cast<std::size_t>(i)] =
        theta(num_degree + 1 + i) / std::pow(w0, i);
  }
  const double lead = 1.0 / std::pow(w0, den_degree);
  model.denominator.back() = lead;
  for (double& c : model.numerator) c /= lead;
  for (double& c : model.denominator) c /= lead;

  result.model = std::move(model);
  result.weighted_residual = weighted_residual(data, result.model, weights);
  return result;
}

/// Builds the normalized third-order model of known physical parameters.
inline RationalModel physical_model(const AxisValues& v, double inertia) {
  // (T s + 1)(J s² + d s + k) = T J s³ + (J + T d) s² + (d + T k) s + k
  const double lead = v.t * inertia;
  return RationalModel{
      {v.eta / lead},
      {v.k / lead, (v.d + v.t * v.k) / lead, (inertia + v.t * v.d) / lead, 1.0}};
}

/// Factors a fitted η / ((T s + 1)(J s² + d s + k)) model with known J.
///
/// Every real pole -1/T is a candidate for the torque lag. The candidate
/// leaving a complex (underdamped) mechanical pair wins; among all-real
/// factorizations the fastest real pole is taken as the torque lag.
inline AxisValues extract_physical_parameters(const RationalModel& model,
                                              double inertia) {
  if (model.numerator.size() != 1 || model.denominator.size() != 4) {
    throw StructureMismatch("expected a model with constant numerator and "
                            "third-order denominator");
  }
  const double scale = model.denominator[3];
  const double a0 = model.denominator[0] / scale;
  const double a1 = model.denominator[1] / scale;
  const double a2 = model.denominator[2] / scale;
  const double b0 = model.numerator[0] / scale;

  Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
  companion(1, 0) = 1.0;
  companion(2, 1) = 1.0;
  companion(0, 2) = -a0;
  companion(1, 2) = -a1;
  companion(2, 2) = -a2;
  const Eigen::Vector3cd roots = companion.eigenvalues();

  struct Candidate {
    AxisValues values;
    bool underdamped;
    double pole;
  };
  std::vector<Candidate> candidates;
  for (int i = 0; i < 3; ++i) {
    const Complex p = roots(i);
    if (std::abs(p.imag()) > 1e-9 * std::max(1.0, std::abs(p)) || !(p.real() < 0.0)) {
      continue;
    }
    const double t = -1.0 / p.real();
    AxisValues v;
    v.t = t;
    v.k = a0 * t * inertia;
    v.d = a1 * t * inertia - a0 * t * t * inertia;
    v.eta = b0 * t * inertia;
    if (!(v.k > 0.0 && v.d > 0.0 && v.eta > 0.0)) continue;
    // Remaining quadratic J s² + d s + k: complex roots when d² < 4 J k.
    candidates.push_back({v, v.d * v.d < 4.0 * inertia * v.k, p.real()});
  }
  if (candidates.empty()) {
    throw StructureMismatch("no factorization with positive T, d, k, eta");
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& l, const Candidate& r) {
              if (l.underdamped != r.underdamped) return l.underdamped;
              return l.pole < r.pole;
            });
  return candidates.front().values;
}

/// Least-squares polynomial of `degree` through (x, y).
inline Polynomial fit_polynomial(std::span<const double> x,
                                 std::span<const double> y, int degree) {
  if (x.size() != y.size()) throw InvalidInput("x and y sizes differ");
  std::vector<double> distinct(x.begin(), x.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (degree < 0 || static_cast<int>(distinct.size()) < degree + 1) {
    throw InvalidInput("polynomial of degree " + std::to_string(degree) +
                       " needs at least " + std::to_string(degree + 1) +
                       " distinct levels");
  }
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd v(n, degree + 1);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double pw = 1.0;
    for (int j = 0; j <= degree; ++j) {
      v(i, j) = pw;
      pw *= x[static_cast<std::size_t>(i)];
    }
    rhs(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd c = v.colPivHouseholderQr().solve(rhs);
  return Polynomial{std::vector<double>(c.data(), c.data() + c.size())};
}

struct PolynomialDegrees {
  int k = 1;
  int d = 2;
  int eta = 2;
  int t = 2;
};

inline AxisPolynomials fit_parameter_polynomials(
    std::span<const double> p_bars, std::span<const AxisValues> estimates,
    const PolynomialDegrees& degrees = {}) {
  if (p_bars.size() != estimates.size()) {
    throw InvalidInput("one estimate per p_bar level required");
  }
  auto column = [&](double AxisValues::*field) {
    std::vector<double> out;
    out.reserve(estimates.size());
    for (const auto& e : estimates) out.push_back(e.*field);
    return out;
  };
  return AxisPolynomials{
      fit_polynomial(p_bars, column(&AxisValues::k), degrees.k),
      fit_polynomial(p_bars, column(&AxisValues::d), degrees.d),
      fit_polynomial(p_bars, column(&AxisValues::eta), degrees.eta),
      fit_polynomial(p_bars, column(&AxisValues::t), degrees.t),
  };
}

struct IdentificationOptions {
  std::vector<double> p_bar_levels{1.00, 1.05, 1.10, 1.15, 1.20};
  SineExperiment experiment{};  // frequency grid, amplitude, periods
  FitOptions fit{};
  PolynomialDegrees degrees{};
  bool linear_plant = true;     // strip disturbance terms except noise
};

struct LevelResult {
  double p_bar = 0.0;
  FrequencyResponseData data;
  FitResult fit;
  AxisValues values;
};

struct AxisIdentification {
  std::vector<LevelResult> levels;
  AxisPolynomials polynomials;
};

/// Fit, factorization and polynomial fit of measured per-level data.
inline AxisIdentification fit_levels(std::vector<LevelResult> levels,
                                     double inertia,
                                     const IdentificationOptions& opt) {
  AxisIdentification out;
  std::vector<double> p_bars;
  std::vector<AxisValues> values;
  for (LevelResult& level : levels) {
    level.fit = fit_transfer_function(level.data, 0, 3, opt.fit);
    level.values = extract_physical_parameters(level.fit.model, inertia);
    p_bars.push_back(level.p_bar);
    values.push_back(level.values);
  }
  out.polynomials = fit_parameter_polynomials(p_bars, values, opt.degrees);
  out.levels = std::move(levels);
  return out;
}

/// Plant used for identification: no load mass, and with `linear_plant`
/// every disturbance except measurement noise removed.
inline PlantConfig identification_plant(const PlantConfig& plant_cfg,
                                        const IdentificationOptions& opt) {
  PlantConfig cfg = plant_cfg;
  cfg.mech.load_mass = 0.0;
  if (opt.linear_plant) {
    const double noise = cfg.disturbance.noise_std;
    cfg.disturbance = DisturbanceConfig{};
    cfg.disturbance.noise_std = noise;
  }
  return cfg;
}

/// Stepped-sine data at every p̄ level of the campaign.
inline std::vector<LevelResult> measure_levels(const PlantConfig& plant_cfg,
                                               Axis axis,
                                               const IdentificationOptions& opt,
                                               std::uint64_t seed = 1) {
  const PlantConfig cfg = identification_plant(plant_cfg, opt);
  std::vector<LevelResult> levels;
  for (const double p_bar : opt.p_bar_levels) {
    SineExperiment exp = opt.experiment;
    if (exp.frequencies_hz.empty()) exp.frequencies_hz = default_frequency_grid(cfg.dt);
    exp.p_bar = p_bar;
    exp.axis = axis;
    LevelResult level;
    level.p_bar = p_bar;
    level.data = run_sine_experiment(exp, cfg, seed);
    levels.push_back(std::move(level));
  }
  return levels;
}

/// Full campaign on one axis: experiment, fit and factorization per level,
/// then polynomial fits over p̄. The plant runs with no load mass.
inline AxisIdentification identify_axis(const PlantConfig& plant_cfg, Axis axis,
                                        const IdentificationOptions& opt,
                                        std::uint64_t seed = 1) {
  return fit_levels(measure_levels(plant_cfg, axis, opt, seed),
                    plant_cfg.mech.inertia(0.0), opt);
}

/// Multiplies every response by (1 + ε), ε complex Gaussian with standard
/// deviation `relative` per component. The variance is raised to match.
inline FrequencyResponseData perturb_response(const FrequencyResponseData& data,
                                              double relative,
                                              std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, relative);
  FrequencyResponseData out = data;
  for (FrequencyPoint& p : out) {
    const Complex factor{1.0 + noise(rng), noise(rng)};
    p.response *= factor;
    p.variance = std::max(p.variance, 2.0 * relative * relative * std::norm(p.response));
  }
  return out;
}

/// Largest relative deviation between two parameter functions on a grid.
inline double sup_relative_error(const Polynomial& estimate,
                                 const Polynomial& truth,
                                 const PBarInterval& interval,
                                 int samples = 201) {
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double p = interval.min + (interval.max - interval.min) * i / (samples - 1);
    worst = std::max(worst, std::abs(estimate(p) - truth(p)) / std::abs(truth(p)));
  }
  return worst;
}

}  // namespace softarm
