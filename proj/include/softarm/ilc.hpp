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
 * @file ilc.hpp
 *
 * Norm-optimal iterative learning control in serial architecture.
 *
 * Lifted signals interleave the axes, [α(0), β(0), ..., α(N-1), β(N-1)].
 * The correction u is added to the reference entering the feedback loop.
 * Output sample k of the lifted vector is the angle one outer sample after
 * u(k) was applied, so the lifted matrix P carries CB on its diagonal.
 *
 * Each update minimizes
 *
 *   J(u⁺) = ½ [ e⁺ᵀ W_e e⁺ + (u⁺ − u)ᵀ W_Δu (u⁺ − u) + u⁺ᵀ Dᵀ W_u̇ D u⁺ ],
 *   e⁺ = e − P (u⁺ − u),
 *
 * in closed form, u⁺ = Q u + L e.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "softarm/errors.hpp"
#include "softarm/parameters.hpp"

namespace softarm {

/// Continuous per-axis closed loop κη / (T s² + s + κη), states [y, ẏ].
struct AxisModel {
  Eigen::Matrix2d a;
  Eigen::Vector2d b;
  Eigen::RowVector2d c;
};

inline AxisModel nominal_closed_loop(double kappa_eta, double t) {
  AxisModel m;
  m.a << 0.0, 1.0, -kappa_eta / t, -1.0 / t;
  m.b << 0.0, kappa_eta / t;
  m.c << 1.0, 0.0;
  return m;
}

struct DiscreteModel {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::MatrixXd c;
};

/// Zero-order-hold discretization through the augmented exponential
///   exp([A B; 0 0] Ts) = [A_d B_d; 0 I].
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> zoh_discretize(
    const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double ts) {
  const auto n = a.rows();
  const auto m = b.cols();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = a;
  aug.topRightCorner(n, m) = b;
  const Eigen::MatrixXd phi = (aug * ts).exp();
  if (!phi.allFinite()) {
    throw NumericalConditioning("matrix exponential is not finite", 0.0);
  }
  return {phi.topLeftCorner(n, n), phi.topRightCorner(n, m)};
}

/// Block-diagonal discrete model of the two axes.
inline DiscreteModel discretize_axes(const PerAxis<AxisModel>& axes, double ts) {
  DiscreteModel d;
  d.a = Eigen::MatrixXd::Zero(4, 4);
  d.b = Eigen::MatrixXd::Zero(4, 2);
  d.c = Eigen::MatrixXd::Zero(2, 4);
  for (int i = 0; i < 2; ++i) {
    const AxisModel& m = axes[kAxes[static_cast<std::size_t>(i)]];
    auto [ad, bd] = zoh_discretize(m.a, m.b, ts);
    d.a.block(2 * i, 2 * i, 2, 2) = ad;
    d.b.block(2 * i, i, 2, 1) = bd;
    d.c.block(i, 2 * i, 1, 2) = m.c;
  }
  return d;
}

inline double spectral_radius(const Eigen::MatrixXd& a) {
  return a.eigenvalues().cwiseAbs().maxCoeff();
}

struct LiftedSystem {
  DiscreteModel model;
  int horizon = 0;
  double ts = 0.0;
  Eigen::MatrixXd p;
  bool schur_stable = true;
};

/// Lower block-triangular Toeplitz matrix of the Markov parameters
/// CB, CAB, ..., CA^{N-1}B.
inline LiftedSystem build_lifted_matrix(const DiscreteModel& model, int horizon,
                                        double ts = 0.0) {
  if (horizon < 1) throw InvalidInput("horizon must be >= 1");
  const auto ny = model.c.rows();
  const auto nu = model.b.cols();
  LiftedSystem sys;
  sys.model = model;
  sys.horizon = horizon;
  sys.ts = ts;
  sys.schur_stable = spectral_radius(model.a) < 1.0;
  sys.p = Eigen::MatrixXd::Zero(ny * horizon, nu * horizon);
  Eigen::MatrixXd power_b = model.b;  // A^i B
  for (int i = 0; i < horizon; ++i) {
    const Eigen::MatrixXd markov = model.c * power_b;
    for (int col = 0; col + i < horizon; ++col) {
      sys.p.block((col + i) * ny, col * nu, ny, nu) = markov;
    }
    power_b = model.a * power_b;
  }
  return sys;
}

/// Forward difference (1/Ts)·(D̃ ⊗ I₂); D̃ has −1 on the diagonal, +1 above
/// it and an all-zero last row.
inline Eigen::MatrixXd build_derivative_operator(int horizon, double ts) {
  if (horizon < 1 || !(ts > 0.0)) {
    throw InvalidInput("derivative operator needs N >= 1 and Ts > 0");
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2 * horizon, 2 * horizon);
  for (int k = 0; k + 1 < horizon; ++k) {
    for (int axis = 0; axis < 2; ++axis) {
      d(2 * k + axis, 2 * k + axis) = -1.0 / ts;
      d(2 * k + axis, 2 * (k + 1) + axis) = 1.0 / ts;
    }
  }
  return d;
}

struct IlcWeights {
  Eigen::MatrixXd error;   // W_e ⪰ 0
  Eigen::MatrixXd change;  // W_Δu ≻ 0
  Eigen::MatrixXd rate;    // W_u̇ ⪰ 0

  static IlcWeights scaled_identity(int horizon, double w_e, double w_du,
                                    double w_udot) {
    const auto n = static_cast<Eigen::Index>(2 * horizon);
    return {w_e * Eigen::MatrixXd::Identity(n, n),
            w_du * Eigen::MatrixXd::Identity(n, n),
            w_udot * Eigen::MatrixXd::Identity(n, n)};
  }
};

struct IlcGains {
  Eigen::MatrixXd q;
  Eigen::MatrixXd l;
};

/// Q = M⁻¹ (PᵀW_eP + W_Δu), L = M⁻¹ PᵀW_e with M = PᵀW_eP + W_Δu + DᵀW_u̇D.
/// Q is formed as I − M⁻¹ DᵀW_u̇D, the same matrix, so that it is exactly
/// the identity when W_u̇ = 0.
inline IlcGains compute_gains(const Eigen::MatrixXd& p, const Eigen::MatrixXd& d,
                              const IlcWeights& w) {
  const auto n = p.cols();
  if (p.rows() != n || d.rows() != n || d.cols() != n || w.error.rows() != n ||
      w.change.rows() != n || w.rate.rows() != n) {
    throw InvalidInput("lifted matrix, derivative operator and weights must "
                       "share one square dimension");
  }
  const Eigen::MatrixXd pt_we = p.transpose() * w.error;
  const Eigen::MatrixXd rate_term = d.transpose() * w.rate * d;
  Eigen::MatrixXd m = pt_we * p + w.change + rate_term;
  m = 0.5 * (m + m.transpose());
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    const auto ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues();
    throw NumericalConditioning("gain matrix is not positive definite",
                                std::abs(ev.maxCoeff() / ev.minCoeff()));
  }
  IlcGains g;
  g.l = llt.solve(pt_we);
  g.q = Eigen::MatrixXd::Identity(n, n) - llt.solve(rate_term);
  return g;
}

inline Eigen::VectorXd ilc_update(const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& e,
                                  const IlcGains& gains) {
  if (u.size() != gains.q.cols() || e.size() != gains.l.cols()) {
    throw InvalidInput("correction or error has the wrong length");
  }
  return gains.q * u + gains.l * e;
}

struct ErrorMetrics {
  PerAxis<double> rms{};
  PerAxis<double> max{};
};

inline ErrorMetrics error_metrics(const Eigen::VectorXd& lifted) {
  ErrorMetrics m;
  const Eigen::Index n = lifted.size() / 2;
  if (n == 0) return m;
  for (int axis = 0; axis < 2; ++axis) {
    double sq = 0.0;
    double mx = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double v = lifted(2 * k + axis);
      sq += v * v;
      mx = std::max(mx, std::abs(v));
    }
    const Axis a = kAxes[static_cast<std::size_t>(axis)];
    m.rms[a] = std::sqrt(sq / static_cast<double>(n));
    m.max[a] = mx;
  }
  return m;
}

/// Outcome of one trial: the error the learning law consumes (measured) and
/// the error of the noiseless states used for reporting.
struct RolloutOutcome {
  Eigen::VectorXd error;
  Eigen::VectorXd true_error;
};

struct IlcIterate {
  int iteration = 0;
  Eigen::VectorXd correction;
  Eigen::VectorXd error;
  Eigen::VectorXd true_error;
  ErrorMetrics metrics;  // of true_error
};

struct IlcOptions {
  int iterations = 24;
  bool plateau_stop = false;  // stop when RMS improves < 1% over 3 iterations
  double plateau_tolerance = 0.01;
  int plateau_window = 3;
};

struct IlcHistory {
  std::vector<IlcIterate> iterates;
  bool failed = false;
  bool stopped_on_plateau = false;
  std::string failure;

  const IlcIterate& first() const { return iterates.front(); }
  const IlcIterate& last() const { return iterates.back(); }
};

namespace detail {

inline double combined_rms(const ErrorMetrics& m) {
  return std::hypot(m.rms.alpha, m.rms.beta);
}

}  // namespace detail

/// Iterates rollout -> update. `rollout` maps a correction to a
/// RolloutOutcome and may throw Error on divergence, which ends learning
/// with the history so far and the failure flag set.
template <typename Rollout>
IlcHistory run_ilc(Rollout&& rollout, const IlcGains& gains,
                   const Eigen::VectorXd& initial_correction,
                   const IlcOptions& opt = {}) {
  IlcHistory history;
  Eigen::VectorXd u = initial_correction;
  for (int j = 0; j <= opt.iterations; ++j) {
    RolloutOutcome outcome;
    try {
      outcome = rollout(u);
    } catch (const Error& err) {
      history.failed = true;
      history.failure = "iteration " + std::to_string(j) + ": " + err.what();
      break;
    }
    IlcIterate it;
    it.iteration = j;
    it.correction = u;
    it.error = outcome.error;
    it.true_error = outcome.true_error;
    it.metrics = error_metrics(outcome.true_error);
    history.iterates.push_back(std::move(it));

    if (opt.plateau_stop && j >= opt.plateau_window) {
      const double now = detail::combined_rms(history.iterates[j].metrics);
      const double before =
          detail::combined_rms(history.iterates[j - opt.plateau_window].metrics);
      if (before - now < opt.plateau_tolerance * before) {
        history.stopped_on_plateau = true;
        break;
      }
    }
    if (j < opt.iterations) u = ilc_update(u, outcome.error, gains);
  }
  return history;
}

/// Truncates each phase correction to its window and concatenates them in
/// time order. `windows[i]` is (first sample, sample count) inside phase i's
/// own correction signal.
inline Eigen::VectorXd warm_start_concatenate(
    std::span<const Eigen::VectorXd> phase_corrections,
    std::span<const std::pair<int, int>> windows, int joint_horizon) {
  if (phase_corrections.size() != windows.size()) {
    throw InvalidInput("one window per phase required");
  }
  int total = 0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto [first, count] = windows[i];
    if (first < 0 || count < 0 ||
        2 * (first + count) > phase_corrections[i].size()) {
      throw InvalidInput("phase window exceeds its correction signal");
    }
    total += count;
  }
  if (total != joint_horizon) {
    throw InvalidInput("phase windows sum to " + std::to_string(total) +
                       " samples, joint horizon is " +
                       std::to_string(joint_horizon));
  }
  Eigen::VectorXd out(2 * joint_horizon);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto [first, count] = windows[i];
    out.segment(at, 2 * count) = phase_corrections[i].segment(2 * first, 2 * count);
    at += 2 * count;
  }
  return out;
}

/// Gains keyed by horizon for fixed weights, computed on first use.
class IlcGainCache {
 public:
  using Builder = std::function<IlcGains(int)>;
  explicit IlcGainCache(Builder builder) : builder_(std::move(builder)) {}

  const IlcGains& get(int horizon) {
    auto it = cache_.find(horizon);
    if (it == cache_.end()) it = cache_.emplace(horizon, builder_(horizon)).first;
    return it->second;
  }

 private:
  Builder builder_;
  std::map<int, IlcGains> cache_;
};

}  // namespace softarm
