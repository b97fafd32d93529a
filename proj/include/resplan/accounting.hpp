// Copyright 2026 The ResPlan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Conversions between the privacy cost of a Gaussian mechanism and standard
// privacy guarantees.

#ifndef RESPLAN_ACCOUNTING_HPP_
#define RESPLAN_ACCOUNTING_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <variant>

#include "resplan/errors.hpp"

namespace resplan {

struct Guarantees {
  double pcost = 0.0;
  double rho = 0.0;  // zero-concentrated DP
  double mu = 0.0;   // Gaussian DP
};

inline Guarantees GuaranteesFor(double pcost) {
  if (!(pcost >= 0.0) || !std::isfinite(pcost)) {
    throw ConfigError("privacy cost must be finite and non-negative");
  }
  return {pcost, pcost / 2.0, std::sqrt(pcost)};
}

// Phi(x) through the complementary error function, which keeps full relative
// accuracy in the lower tail. Absolute error is at the level of binary64
// rounding (well below 1e-15).
// The rounding error of -x/sqrt(2) is carried separately and applied as a
// first-order correction, which keeps the lower tail accurate to full
// relative precision.
inline double StandardNormalCdf(double x) {
  constexpr double kHi = 0.70710678118654757;    // nearest double to 1/sqrt(2)
  constexpr double kLo = -4.8336466567264567e-17;  // 1/sqrt(2) - kHi
  const double z = -x * kHi;
  const double z_lo = -(std::fma(x, kHi, -(x * kHi)) + x * kLo);
  const double tail = std::erfc(z);
  constexpr double kTwoOverSqrtPi = 1.1283791670955126;
  return 0.5 * (tail - z_lo * kTwoOverSqrtPi * std::exp(-z * z));
}

// Smallest delta such that the mechanism is (epsilon, delta)-DP.
inline double ApproxDpDelta(double pcost, double epsilon) {
  if (!(pcost >= 0.0) || !std::isfinite(pcost)) {
    throw ConfigError("privacy cost must be finite and non-negative");
  }
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
  if (pcost == 0.0) return 0.0;
  if (std::isinf(epsilon)) return 0.0;
  const double mu = std::sqrt(pcost);
  const double a = StandardNormalCdf(mu / 2.0 - epsilon / mu);
  const double phi_b = StandardNormalCdf(-mu / 2.0 - epsilon / mu);
  // e^eps * Phi(b) overflows for large epsilon even though the product is
  // tiny, so combine in log space.
  const double b = phi_b > 0.0 ? std::exp(epsilon + std::log(phi_b)) : 0.0;
  return std::clamp(a - b, 0.0, 1.0);
}

struct RhoTarget {
  double rho = 0.0;
};
struct MuTarget {
  double mu = 0.0;
};
struct EpsilonDeltaTarget {
  double epsilon = 0.0;
  double delta = 0.0;
};
using PrivacyTarget = std::variant<RhoTarget, MuTarget, EpsilonDeltaTarget>;

// Largest privacy cost that still meets the target.
inline double CalibrateBudget(const PrivacyTarget& target) {
  if (const auto* t = std::get_if<RhoTarget>(&target)) {
    if (!(t->rho > 0.0) || !std::isfinite(t->rho)) {
      throw ConfigError("rho must be positive");
    }
    return 2.0 * t->rho;
  }
  if (const auto* t = std::get_if<MuTarget>(&target)) {
    if (!(t->mu > 0.0) || !std::isfinite(t->mu)) {
      throw ConfigError("mu must be positive");
    }
    return t->mu * t->mu;
  }
  const auto& t = std::get<EpsilonDeltaTarget>(target);
  if (!(t.epsilon >= 0.0) || !std::isfinite(t.epsilon)) {
    throw ConfigError("epsilon must be finite and non-negative");
  }
  if (!(t.delta > 0.0 && t.delta < 1.0)) {
    throw ConfigError("delta must lie in (0, 1)");
  }
  // delta is increasing in pcost. Bracket, then bisect.
  double lo = 0.0;
  double hi = 1.0;
  while (ApproxDpDelta(hi, t.epsilon) <= t.delta) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw ConfigError("delta target is unattainable");
  }
  while (hi - lo > 1e-13 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (ApproxDpDelta(mid, t.epsilon) <= t.delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (!(lo > 0.0)) throw ConfigError("delta target is unattainable");
  return lo;
}

}  // namespace resplan

#endif  // RESPLAN_ACCOUNTING_HPP_
