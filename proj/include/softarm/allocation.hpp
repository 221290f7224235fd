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
 * @file allocation.hpp
 *
 * Pressure allocation for three antagonistic actuators A, B, C spaced 120°
 * around the joint.
 *
 * A point (p_A, p_B, p_C) is represented by its lower pressure bound
 * p̄ = min(p_A, p_B, p_C), which sets the joint stiffness, and two decoupled
 * pressure differences Δp_α, Δp_β that each drive one angle. The map
 * (p̄, Δp_α, Δp_β) -> (p_A, p_B, p_C) is a bijection; at least one actuator
 * always sits exactly at p̄.
 *
 * All pressures are in bar.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "softarm/errors.hpp"

namespace softarm {

struct AbsolutePressures {
  double p_a = 0.0;
  double p_b = 0.0;
  double p_c = 0.0;

  double min() const { return std::min({p_a, p_b, p_c}); }
  double max() const { return std::max({p_a, p_b, p_c}); }
  bool operator==(const AbsolutePressures&) const = default;
};

struct PairwiseDifferences {
  double dp_ab = 0.0;  // p_A - p_B
  double dp_bc = 0.0;  // p_B - p_C
  bool operator==(const PairwiseDifferences&) const = default;
};

struct DecoupledDifferences {
  double dp_alpha = 0.0;
  double dp_beta = 0.0;
  bool operator==(const DecoupledDifferences&) const = default;
};

struct DeltaRepresentation {
  double p_bar = 0.0;
  double dp_alpha = 0.0;
  double dp_beta = 0.0;
  bool operator==(const DeltaRepresentation&) const = default;
};

/// Admissible interval for the lower pressure bound.
struct PBarInterval {
  double min = 1.0;
  double max = 1.2;

  bool contains(double p_bar) const { return p_bar >= min && p_bar <= max; }
  double mid() const { return 0.5 * (min + max); }
};

namespace detail {

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw InvalidInput(std::string("non-finite ") + what);
  }
}

}  // namespace detail

inline std::pair<PairwiseDifferences, double> differences_from_absolute(
    const AbsolutePressures& p) {
  detail::require_finite(p.p_a, "p_A");
  detail::require_finite(p.p_b, "p_B");
  detail::require_finite(p.p_c, "p_C");
  return {PairwiseDifferences{p.p_a - p.p_b, p.p_b - p.p_c}, p.min()};
}

/// Unique solution of the difference equations subject to min(p) = p̄.
inline AbsolutePressures absolute_from_differences(const PairwiseDifferences& d,
                                                   double p_bar) {
  detail::require_finite(d.dp_ab, "dp_AB");
  detail::require_finite(d.dp_bc, "dp_BC");
  detail::require_finite(p_bar, "p_bar");
  const double sum = d.dp_ab + d.dp_bc;
  return AbsolutePressures{
      std::max({p_bar, p_bar + d.dp_ab, p_bar + sum}),
      std::max({p_bar, p_bar + d.dp_bc, p_bar - d.dp_ab}),
      std::max({p_bar, p_bar - d.dp_bc, p_bar - sum}),
  };
}

// [Δp_α]   [ 0    √3/2] [Δp_AB]
// [Δp_β] = [-1   -1/2 ] [Δp_BC]
inline DecoupledDifferences decouple(const PairwiseDifferences& d) {
  constexpr double kHalfSqrt3 = std::numbers::sqrt3 / 2.0;
  return DecoupledDifferences{kHalfSqrt3 * d.dp_bc, -d.dp_ab - 0.5 * d.dp_bc};
}

inline PairwiseDifferences recouple(const DecoupledDifferences& d) {
  constexpr double kInvSqrt3 = std::numbers::inv_sqrt3;
  return PairwiseDifferences{-kInvSqrt3 * d.dp_alpha - d.dp_beta,
                             2.0 * kInvSqrt3 * d.dp_alpha};
}

inline AbsolutePressures xi(const DeltaRepresentation& delta) {
  return absolute_from_differences(recouple({delta.dp_alpha, delta.dp_beta}),
                                   delta.p_bar);
}

inline DeltaRepresentation xi_inverse(const AbsolutePressures& p) {
  const auto [diff, p_bar] = differences_from_absolute(p);
  const auto dec = decouple(diff);
  return DeltaRepresentation{p_bar, dec.dp_alpha, dec.dp_beta};
}

/// Returns a warning message when p̄ lies outside the admissible interval.
/// The mapping itself accepts any finite p̄.
inline std::optional<std::string> check_p_bar(double p_bar,
                                              const PBarInterval& interval) {
  if (interval.contains(p_bar)) return std::nullopt;
  return "p_bar " + std::to_string(p_bar) + " bar outside admissible [" +
         std::to_string(interval.min) + ", " + std::to_string(interval.max) +
         "] bar";
}

}  // namespace softarm
