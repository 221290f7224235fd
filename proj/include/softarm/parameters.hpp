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

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "softarm/allocation.hpp"
#include "softarm/errors.hpp"

namespace softarm {

enum class Axis { kAlpha = 0, kBeta = 1 };

inline const char* axis_name(Axis axis) {
  return axis == Axis::kAlpha ? "alpha" : "beta";
}

inline constexpr std::array<Axis, 2> kAxes = {Axis::kAlpha, Axis::kBeta};

/// A value per angular axis.
template <typename T>
struct PerAxis {
  T alpha{};
  T beta{};

  T& operator[](Axis axis) { return axis == Axis::kAlpha ? alpha : beta; }
  const T& operator[](Axis axis) const {
    return axis == Axis::kAlpha ? alpha : beta;
  }
  bool operator==(const PerAxis&) const = default;
};

/// Polynomial with coefficients in ascending powers.
struct Polynomial {
  std::vector<double> coefficients;

  double operator()(double x) const {
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) {
      acc = acc * x + *it;
    }
    return acc;
  }

  double derivative(double x) const {
    double acc = 0.0;
    for (std::size_t i = coefficients.size(); i-- > 1;) {
      acc = acc * x + static_cast<double>(i) * coefficients[i];
    }
    return acc;
  }

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }

  Polynomial scaled(double factor) const {
    Polynomial out = *this;
    for (double& c : out.coefficients) c *= factor;
    return out;
  }

  bool operator==(const Polynomial&) const = default;
};

/// Lumped rigid-body parameters of the movable link.
struct MechanicalParams {
  double r0 = 0.3479;  // m, pivot to load at p̄_min
  double link_mass = 0.2;  // kg
  double load_mass = 0.0;  // kg
  double g = 9.81;

  /// (m + M/4) R0², the link treated as a rod with its centre of mass at R0/2.
  double inertia() const { return inertia(load_mass); }
  double inertia(double load) const {
    return (load + 0.25 * link_mass) * r0 * r0;
  }

  /// Amplitude of the gravity torque on β, (M R0/2 + m R0) g.
  double gravity_torque_amplitude(double load) const {
    return (0.5 * link_mass * r0 + load * r0) * g;
  }

  void validate() const {
    if (!(r0 > 0.0) || !(link_mass > 0.0) || !(load_mass >= 0.0) ||
        !(g > 0.0)) {
      throw InvalidInput("mechanical parameters require R0 > 0, M > 0, m >= 0, g > 0");
    }
  }
};

/// Frozen-parameter values of one axis at a given p̄.
struct AxisValues {
  double k = 0.0;    // N·m/rad
  double d = 0.0;    // N·m·s/rad
  double eta = 0.0;  // N·m/bar
  double t = 0.0;    // s, torque time constant
};

/// p̄-scheduled parameter functions of one axis.
struct AxisPolynomials {
  Polynomial k;
  Polynomial d;
  Polynomial eta;
  Polynomial t;

  AxisValues at(double p_bar) const {
    return AxisValues{k(p_bar), d(p_bar), eta(p_bar), t(p_bar)};
  }

  bool operator==(const AxisPolynomials&) const = default;
};

struct JointParameters {
  PerAxis<AxisPolynomials> axes;

  AxisValues at(Axis axis, double p_bar) const { return axes[axis].at(p_bar); }

  /// Positivity of all four functions and monotone stiffness over the
  /// interval, checked on a dense grid.
  void validate(const PBarInterval& interval) const {
    constexpr int kSamples = 101;
    for (Axis axis : kAxes) {
      const auto& poly = axes[axis];
      for (int i = 0; i < kSamples; ++i) {
        const double p = interval.min + (interval.max - interval.min) * i /
                                            (kSamples - 1);
        const AxisValues v = poly.at(p);
        if (!(v.k > 0.0 && v.d > 0.0 && v.eta > 0.0 && v.t > 0.0)) {
          throw InvalidInput(std::string("joint parameters of ") +
                             axis_name(axis) + " not positive at p_bar=" +
                             std::to_string(p));
        }
        if (!(poly.k.derivative(p) > 0.0)) {
          throw InvalidInput(std::string("stiffness of ") + axis_name(axis) +
                             " not increasing at p_bar=" + std::to_string(p));
        }
      }
    }
  }
};

/// Synthetic ground truth shipped with the default configuration.
/// β is the α set scaled by 1.05.
inline JointParameters default_joint_parameters() {
  AxisPolynomials alpha{
      Polynomial{{-1.0, 4.0}},
      Polynomial{{0.04, 0.05}},
      Polynomial{{0.9, 0.1}},
      Polynomial{{0.06, -0.02}},
  };
  AxisPolynomials beta{alpha.k.scaled(1.05), alpha.d.scaled(1.05),
                       alpha.eta.scaled(1.05), alpha.t.scaled(1.05)};
  return JointParameters{{alpha, beta}};
}

/// Repeatable effects the linear model does not describe.
struct DisturbanceConfig {
  double cross_coupling = 0.0;  // fraction of the other axis' Δp leaking in
  bool gravity = false;         // -(M g R0/2 + m g R0) cos β on the β axis
  double pbar_kick_gain = 0.0;  // rad per bar/s, both axes
  double deposit_impulse = 0.0;  // N·m·s on β during the eject window
  double noise_std = 0.0;        // rad, angle measurements only

  bool any() const {
    return cross_coupling != 0.0 || gravity || pbar_kick_gain != 0.0 ||
           deposit_impulse != 0.0 || noise_std != 0.0;
  }

  void validate() const {
    if (!(cross_coupling >= 0.0) || !(pbar_kick_gain >= 0.0) ||
        !(deposit_impulse >= 0.0) || !(noise_std >= 0.0)) {
      throw InvalidInput("disturbance gains must be >= 0");
    }
  }

  /// The disturbed plant used by the learning experiments.
  static DisturbanceConfig default_disturbed() {
    DisturbanceConfig d;
    d.cross_coupling = 0.05;
    d.gravity = true;
    d.pbar_kick_gain = 0.02;
    d.deposit_impulse = 0.03;
    d.noise_std = 0.05 * std::numbers::pi / 180.0;
    return d;
  }
};

struct PressureConfig {
  double lag_time_constant = 0.02;  // s, closed inner PID loop
  double max = 4.0;                 // bar
  double floor = 0.0;               // bar
  PBarInterval p_bar{};
};

/// Affine axial elongation R(p̄) anchored at both ends of the interval.
struct ElongationMap {
  double r_at_min = 0.3479;  // m
  double span = 0.006;       // m, R(p̄_max) - R(p̄_min)
};

struct RadiusResult {
  double radius = 0.0;
  bool clamped = false;
};

inline RadiusResult radius_from_pbar(double p_bar, const ElongationMap& map,
                                     const PBarInterval& interval) {
  const double clamped = std::clamp(p_bar, interval.min, interval.max);
  const double slope = map.span / (interval.max - interval.min);
  return RadiusResult{map.r_at_min + slope * (clamped - interval.min),
                      clamped != p_bar};
}

}  // namespace softarm
