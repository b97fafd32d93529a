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

// Unbiased marginal estimates from noisy residual answers. Reconstruction is
// pure post-processing: the dataset is never consulted.

#ifndef RESPLAN_RECONSTRUCT_HPP_
#define RESPLAN_RECONSTRUCT_HPP_

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <unordered_map>
#include <vector>

#include "resplan/errors.hpp"
#include "resplan/kron.hpp"
#include "resplan/mechanism.hpp"
#include "resplan/schema.hpp"

namespace resplan {

struct MarginalEstimate {
  AttrSet attrset;
  std::vector<double> values;
  double cell_variance = 0.0;        // same for every cell
  double pairwise_covariance = 0.0;  // same for every pair of distinct cells
};

using ResidualMap =
    std::unordered_map<AttrSet, const NoisyResidual*, AttrSetHash>;

inline ResidualMap IndexResiduals(const std::vector<NoisyResidual>& rs) {
  ResidualMap map;
  map.reserve(rs.size());
  for (const NoisyResidual& r : rs) map.emplace(r.attrset, &r);
  return map;
}

namespace internal {

// Contribution of the residual on `sub` to the covariance of two cells of
// marginal `a` that agree exactly on the attributes in `agree`.
inline double CovarianceTerm(const Schema& schema, const AttrSet& a,
                             const AttrSet& sub, const AttrSet& agree,
                             double sigma2) {
  double v = sigma2;
  for (std::uint32_t i : a) {
    const double md = static_cast<double>(schema.domain_size(i));
    if (!sub.contains(i)) {
      v /= md * md;
    } else if (agree.contains(i)) {
      v *= (md - 1.0) / md;
    } else {
      v *= -1.0 / md;
    }
  }
  return v;
}

}  // namespace internal

// Sums U_{A <- A'} y_{A'} over all A' subset of A. Variance and covariance
// come from the closed form, using the noise scales stored with the
// residuals.
inline MarginalEstimate Reconstruct(const Schema& schema, const AttrSet& a,
                                    const ResidualMap& residuals) {
  schema.Validate(a);
  MarginalEstimate est;
  est.attrset = a;
  est.values.assign(schema.CellCount(a), 0.0);
  a.ForEachSubset([&](const AttrSet& sub) {
    auto it = residuals.find(sub);
    if (it == residuals.end()) {
      throw ConfigError("no noisy residual for " + schema.Describe(sub) +
                        ", needed to reconstruct " + schema.Describe(a));
    }
    const NoisyResidual& r = *it->second;
    // U over the attributes of A only; attributes outside A contribute
    // 1 x 1 scalar factors.
    std::vector<Factor> f;
    f.reserve(a.size());
    for (std::uint32_t i : a) {
      const std::uint32_t m = schema.domain_size(i);
      f.push_back(sub.contains(i) ? Factor::SubtractionPinv(m)
                                  : Factor::ScaledOnesCol(m));
    }
    const std::vector<double> part = KronOperator(std::move(f)).Apply(r.values);
    for (std::size_t c = 0; c < part.size(); ++c) est.values[c] += part[c];
    est.cell_variance += internal::CovarianceTerm(schema, a, sub, a, r.sigma2);
    est.pairwise_covariance +=
        internal::CovarianceTerm(schema, a, sub, AttrSet{}, r.sigma2);
  });
  return est;
}

inline MarginalEstimate Reconstruct(const Schema& schema, const AttrSet& a,
                                    const std::vector<NoisyResidual>& rs) {
  return Reconstruct(schema, a, IndexResiduals(rs));
}

// Covariance of two cells of marginal `a`. Cells that agree on every
// attribute give the variance; cells that differ on every attribute give
// MarginalEstimate::pairwise_covariance.
inline double CellCovariance(const Schema& schema, const AttrSet& a,
                             const ResidualMap& residuals, std::uint64_t c,
                             std::uint64_t d) {
  schema.Validate(a);
  const std::vector<std::uint32_t> vc = CellValues(schema, a, c);
  const std::vector<std::uint32_t> vd = CellValues(schema, a, d);
  std::vector<std::uint32_t> same;
  std::size_t pos = 0;
  for (std::uint32_t i : a) {
    if (vc[pos] == vd[pos]) same.push_back(i);
    ++pos;
  }
  const AttrSet agree(same);
  double total = 0.0;
  a.ForEachSubset([&](const AttrSet& sub) {
    auto it = residuals.find(sub);
    if (it == residuals.end()) {
      throw ConfigError("no noisy residual for " + schema.Describe(sub) +
                        ", needed to reconstruct " + schema.Describe(a));
    }
    total += internal::CovarianceTerm(schema, a, sub, agree, it->second->sigma2);
  });
  return total;
}

// One estimate per requested marginal, in request order.
inline std::vector<MarginalEstimate> ReconstructAll(
    const Schema& schema, const std::vector<AttrSet>& marginals,
    const std::vector<NoisyResidual>& rs, unsigned threads = 1) {
  const ResidualMap map = IndexResiduals(rs);
  const std::size_t n = marginals.size();
  std::vector<MarginalEstimate> out(n);
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = Reconstruct(schema, marginals[i], map);
    }
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          out[i] = Reconstruct(schema, marginals[i], map);
        }
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

inline std::vector<MarginalEstimate> ReconstructAll(
    const Schema& schema, const Workload& workload,
    const std::vector<NoisyResidual>& rs, unsigned threads = 1) {
  std::vector<AttrSet> sets;
  sets.reserve(workload.size());
  for (const WorkloadEntry& e : workload.entries()) sets.push_back(e.marginal);
  return ReconstructAll(schema, sets, rs, threads);
}

}  // namespace resplan

#endif  // RESPLAN_RECONSTRUCT_HPP_
