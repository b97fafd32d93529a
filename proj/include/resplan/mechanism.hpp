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

#ifndef RESPLAN_MECHANISM_HPP_
#define RESPLAN_MECHANISM_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "resplan/errors.hpp"
#include "resplan/kron.hpp"
#include "resplan/planner.hpp"
#include "resplan/schema.hpp"

namespace resplan {

namespace internal {

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace internal

// Deterministic standard-normal generator: mt19937_64 feeding the Box-Muller
// transform, with 53-bit uniforms in (0, 1]. Zero-noise mode returns 0 for
// every draw and is meant for tests only.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed, bool zero_noise = false)
      : seed_(seed), zero_(zero_noise), engine_(seed) {}

  static NoiseSource ZeroNoise() { return NoiseSource(0, true); }

  std::uint64_t seed() const { return seed_; }
  bool zero_noise() const { return zero_; }

  // Independent stream for one base mechanism. The derived seed depends only
  // on the master seed and the attribute set, so streams do not depend on
  // measurement order.
  NoiseSource Fork(const AttrSet& a) const {
    std::uint64_t h = internal::SplitMix64(seed_);
    for (std::uint32_t i : a) h = internal::SplitMix64(h ^ (i + 1));
    h = internal::SplitMix64(h ^ a.size());
    return NoiseSource(h, zero_);
  }

  double Normal() {
    if (zero_) return 0.0;
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = Uniform();
    const double u2 = Uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

 private:
  double Uniform() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  std::uint64_t seed_;
  bool zero_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct NoisyResidual {
  AttrSet attrset;
  double sigma2 = 0.0;
  std::vector<double> values;
};

// One base mechanism: H v + sigma H z with v the marginal on A and z standard
// normal over its cells.
inline NoisyResidual Measure(const Dataset& data, const AttrSet& a,
                             double sigma2, NoiseSource& noise) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw ConfigError("noise scale must be positive");
  }
  const Schema& schema = data.schema();
  const KronOperator h = MeasurementOperator(schema, a);
  const std::vector<std::uint64_t> counts = MarginalCounts(data, a);
  const double sigma = std::sqrt(sigma2);
  std::vector<double> v(counts.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = static_cast<double>(counts[i]) + sigma * noise.Normal();
  }
  return {a, sigma2, h.Apply(v)};
}

// Runs every base mechanism of the plan, in plan order. Work is spread over
// `threads` workers; output is independent of the thread count.
inline std::vector<NoisyResidual> MeasureAll(const Dataset& data,
                                             const Plan& plan,
                                             const NoiseSource& noise,
                                             unsigned threads = 1) {
  const std::size_t n = plan.entries.size();
  std::vector<NoisyResidual> out(n);
  auto work = [&](std::size_t j) {
    NoiseSource stream = noise.Fork(plan.entries[j].attrset);
    out[j] = Measure(data, plan.entries[j].attrset, plan.entries[j].sigma2,
                     stream);
  };
  threads = std::max(1u, std::min<unsigned>(threads, n ? n : 1));
  if (threads == 1) {
    for (std::size_t j = 0; j < n; ++j) work(j);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t j; (j = next.fetch_add(1)) < n;) work(j);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace resplan

#endif  // RESPLAN_MECHANISM_HPP_
