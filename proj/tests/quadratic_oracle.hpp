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

// Test-only helpers: random learning problems and a minimizer of the
// learning cost that sees the cost only as a black-box function.
#pragma once

#include <random>

#include <Eigen/Dense>

#include "softarm/ilc.hpp"

namespace softarm::testing {

inline Eigen::MatrixXd RandomSpd(Eigen::Index n, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  return scale * (a * a.transpose() / static_cast<double>(n) +
                  0.1 * Eigen::MatrixXd::Identity(n, n));
}

inline Eigen::VectorXd RandomVector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

struct LearningProblem {
  Eigen::MatrixXd p;
  Eigen::MatrixXd d;
  IlcWeights weights;
  Eigen::VectorXd u;
  Eigen::VectorXd e;
};

/// Lifted matrix of two random stable closed loops, random SPD weights.
inline LearningProblem RandomProblem(int horizon, double ts, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> kappa_eta(1.0, 10.0);
  std::uniform_real_distribution<double> lag(0.02, 0.06);
  PerAxis<AxisModel> axes{nominal_closed_loop(kappa_eta(rng), lag(rng)),
                          nominal_closed_loop(kappa_eta(rng), lag(rng))};
  LearningProblem lp;
  lp.p = build_lifted_matrix(discretize_axes(axes, ts), horizon, ts).p;
  lp.d = build_derivative_operator(horizon, ts);
  const Eigen::Index n = 2 * horizon;
  lp.weights = {RandomSpd(n, 1.0, rng), RandomSpd(n, 1e-2, rng), RandomSpd(n, 1e-5, rng)};
  lp.u = RandomVector(n, rng);
  lp.e = RandomVector(n, rng);
  return lp;
}

/// The learning cost of a candidate next correction `v`.
inline double LearningCost(const LearningProblem& lp, const Eigen::VectorXd& v) {
  const Eigen::VectorXd step = v - lp.u;
  const Eigen::VectorXd next_error = lp.e - lp.p * step;
  const Eigen::VectorXd rate = lp.d * v;
  return 0.5 * (next_error.dot(lp.weights.error * next_error) +
                step.dot(lp.weights.change * step) + rate.dot(lp.weights.rate * rate));
}

/// Minimizer of a quadratic known only through evaluations: gradient and
/// Hessian by exact central and second differences at the origin, then
/// one Newton step.
inline Eigen::VectorXd BlackBoxMinimizer(const LearningProblem& lp) {
  const Eigen::Index n = lp.u.size();
  const double h = 1.0;
  auto cost = [&](const Eigen::VectorXd& v) { return LearningCost(lp, v); };
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  const double c0 = cost(zero);
  Eigen::VectorXd grad(n);
  Eigen::VectorXd single(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd plus = zero;
    plus(i) = h;
    single(i) = cost(plus);
    grad(i) = (single(i) - cost(-plus)) / (2.0 * h);
  }
  Eigen::MatrixXd hess(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      Eigen::VectorXd both = zero;
      both(i) += h;
      both(j) += h;
      hess(i, j) = (cost(both) - single(i) - single(j) + c0) / (h * h);
      hess(j, i) = hess(i, j);
    }
  }
  return hess.fullPivLu().solve(-grad);
}

}  // namespace softarm::testing
