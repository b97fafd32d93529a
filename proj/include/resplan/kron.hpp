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

// Implicit Kronecker-product operators built from a handful of structured
// factors. A factor is stored as (kind, m); its entries are never laid out in
// memory, and Apply() runs one structured kernel per factor.

#ifndef RESPLAN_KRON_HPP_
#define RESPLAN_KRON_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "resplan/errors.hpp"
#include "resplan/schema.hpp"

namespace resplan {

enum class FactorKind {
  kOnesRow,          // 1 x m, all ones
  kIdentity,         // m x m
  kSubtraction,      // (m-1) x m: first column 1, entry (i, i+1) = -1
  kSubtractionPinv,  // m x (m-1): right inverse of kSubtraction
  kScaledOnesCol,    // m x 1, every entry 1/m
  kScalar,           // 1 x 1, the number 1
};

struct Factor {
  FactorKind kind = FactorKind::kScalar;
  std::uint32_t m = 1;

  static Factor OnesRow(std::uint32_t m) { return {FactorKind::kOnesRow, m}; }
  static Factor Identity(std::uint32_t m) { return {FactorKind::kIdentity, m}; }
  static Factor Subtraction(std::uint32_t m) {
    return {FactorKind::kSubtraction, m};
  }
  static Factor SubtractionPinv(std::uint32_t m) {
    return {FactorKind::kSubtractionPinv, m};
  }
  static Factor ScaledOnesCol(std::uint32_t m) {
    return {FactorKind::kScaledOnesCol, m};
  }
  static Factor Scalar() { return {FactorKind::kScalar, 1}; }

  std::uint64_t rows() const {
    switch (kind) {
      case FactorKind::kOnesRow: return 1;
      case FactorKind::kIdentity: return m;
      case FactorKind::kSubtraction: return m - 1;
      case FactorKind::kSubtractionPinv: return m;
      case FactorKind::kScaledOnesCol: return m;
      case FactorKind::kScalar: return 1;
    }
    return 0;
  }

  std::uint64_t cols() const {
    switch (kind) {
      case FactorKind::kOnesRow: return m;
      case FactorKind::kIdentity: return m;
      case FactorKind::kSubtraction: return m;
      case FactorKind::kSubtractionPinv: return m - 1;
      case FactorKind::kScaledOnesCol: return 1;
      case FactorKind::kScalar: return 1;
    }
    return 0;
  }

  // Entry (r, c). Only dense test oracles should need this.
  double Entry(std::uint64_t r, std::uint64_t c) const {
    const double md = static_cast<double>(m);
    switch (kind) {
      case FactorKind::kOnesRow: return 1.0;
      case FactorKind::kIdentity: return r == c ? 1.0 : 0.0;
      case FactorKind::kSubtraction:
        if (c == 0) return 1.0;
        return c == r + 1 ? -1.0 : 0.0;
      case FactorKind::kSubtractionPinv:
        if (r == 0) return 1.0 / md;
        return (r == c + 1 ? 1.0 - md : 1.0) / md;
      case FactorKind::kScaledOnesCol: return 1.0 / md;
      case FactorKind::kScalar: return 1.0;
    }
    return 0.0;
  }

  // Identity-like factors leave a vector untouched.
  bool IsTrivial() const {
    return kind == FactorKind::kScalar || kind == FactorKind::kIdentity;
  }

  friend bool operator==(const Factor&, const Factor&) = default;
};

class KronOperator {
 public:
  KronOperator() = default;
  explicit KronOperator(std::vector<Factor> factors)
      : factors_(std::move(factors)) {}

  const std::vector<Factor>& factors() const { return factors_; }

  // Throws ConfigError when the dimension does not fit in 64 bits, which is
  // expected for operators over the full universe of a wide schema.
  std::uint64_t rows() const {
    std::uint64_t n = 1;
    for (const Factor& f : factors_) n = internal::CheckedMul(n, f.rows());
    return n;
  }
  std::uint64_t cols() const {
    std::uint64_t n = 1;
    for (const Factor& f : factors_) n = internal::CheckedMul(n, f.cols());
    return n;
  }

  // Returns (this) * v without forming the matrix.
  std::vector<double> Apply(std::span<const double> v) const;

 private:
  std::vector<Factor> factors_;
};

namespace internal {

// One factor of the sweep. `in` is laid out as (pre, f.cols(), post) and `out`
// as (pre, f.rows(), post), both row-major.
inline void ApplyFactor(const Factor& f, std::size_t pre, std::size_t post,
                        std::span<const double> in, std::span<double> out) {
  const std::size_t c = f.cols();
  const std::size_t r = f.rows();
  const double inv_m = 1.0 / static_cast<double>(f.m);
  for (std::size_t p = 0; p < pre; ++p) {
    const double* x = in.data() + p * c * post;
    double* y = out.data() + p * r * post;
    switch (f.kind) {
      case FactorKind::kOnesRow:
        for (std::size_t q = 0; q < post; ++q) y[q] = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          for (std::size_t q = 0; q < post; ++q) y[q] += x[j * post + q];
        }
        break;
      case FactorKind::kSubtraction:
        // Two non-zeros per row: one subtraction per output.
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t q = 0; q < post; ++q) {
            y[i * post + q] = x[q] - x[(i + 1) * post + q];
          }
        }
        break;
      case FactorKind::kSubtractionPinv:
        // Row 0 is mean(x) over the m-1 inputs scaled by (m-1)/m; row i>0
        // subtracts x[i-1] from the same quantity.
        for (std::size_t q = 0; q < post; ++q) y[q] = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          for (std::size_t q = 0; q < post; ++q) y[q] += x[j * post + q];
        }
        for (std::size_t q = 0; q < post; ++q) y[q] *= inv_m;
        for (std::size_t i = 1; i < r; ++i) {
          for (std::size_t q = 0; q < post; ++q) {
            y[i * post + q] = y[q] - x[(i - 1) * post + q];
          }
        }
        break;
      case FactorKind::kScaledOnesCol:
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t q = 0; q < post; ++q) y[i * post + q] = x[q] * inv_m;
        }
        break;
      case FactorKind::kIdentity:
      case FactorKind::kScalar:
        std::copy(x, x + c * post, y);
        break;
    }
  }
}

}  // namespace internal

inline std::vector<double> KronOperator::Apply(
    std::span<const double> v) const {
  const std::uint64_t n = cols();
  if (v.size() != n) {
    throw ConfigError("kron apply: vector has " + std::to_string(v.size()) +
                      " entries, operator has " + std::to_string(n) +
                      " columns");
  }
  std::vector<double> cur(v.begin(), v.end());
  std::vector<double> next;
  std::size_t pre = 1;
  std::size_t post = n;
  for (const Factor& f : factors_) {
    post /= f.cols();
    if (!f.IsTrivial()) {
      next.assign(pre * f.rows() * post, 0.0);
      internal::ApplyFactor(f, pre, post, cur, next);
      cur.swap(next);
    }
    pre *= f.rows();
  }
  return cur;
}

inline std::vector<double> KronApply(const KronOperator& op,
                                     std::span<const double> v) {
  return op.Apply(v);
}

// R_A over the full universe: Subtraction on attributes in A, OnesRow
// elsewhere.
inline KronOperator ResidualOperator(const Schema& schema, const AttrSet& a) {
  schema.Validate(a);
  std::vector<Factor> f;
  f.reserve(schema.num_attributes());
  for (std::uint32_t i = 0; i < schema.num_attributes(); ++i) {
    const std::uint32_t m = schema.domain_size(i);
    f.push_back(a.contains(i) ? Factor::Subtraction(m) : Factor::OnesRow(m));
  }
  return KronOperator(std::move(f));
}

// M_A over the full universe: Identity on attributes in A, OnesRow elsewhere.
inline KronOperator MarginalOperator(const Schema& schema, const AttrSet& a) {
  schema.Validate(a);
  std::vector<Factor> f;
  f.reserve(schema.num_attributes());
  for (std::uint32_t i = 0; i < schema.num_attributes(); ++i) {
    const std::uint32_t m = schema.domain_size(i);
    f.push_back(a.contains(i) ? Factor::Identity(m) : Factor::OnesRow(m));
  }
  return KronOperator(std::move(f));
}

// H_A, acting on the cells of the marginal on A, with H_A * M_A = R_A.
// For the empty set this is the 1 x 1 identity.
inline KronOperator MeasurementOperator(const Schema& schema,
                                        const AttrSet& a) {
  schema.Validate(a);
  std::vector<Factor> f;
  f.reserve(a.size());
  for (std::uint32_t i : a) f.push_back(Factor::Subtraction(schema.domain_size(i)));
  return KronOperator(std::move(f));
}

// U_{target <- source} = M_target * pinv(R_source), one factor per schema
// attribute.
inline KronOperator ReconstructionOperator(const Schema& schema,
                                           const AttrSet& target,
                                           const AttrSet& source) {
  schema.Validate(target);
  if (!source.IsSubsetOf(target)) {
    throw ConfigError("reconstruction source " + schema.Describe(source) +
                      " is not a subset of " + schema.Describe(target));
  }
  std::vector<Factor> f;
  f.reserve(schema.num_attributes());
  for (std::uint32_t i = 0; i < schema.num_attributes(); ++i) {
    const std::uint32_t m = schema.domain_size(i);
    if (source.contains(i)) {
      f.push_back(Factor::SubtractionPinv(m));
    } else if (target.contains(i)) {
      f.push_back(Factor::ScaledOnesCol(m));
    } else {
      f.push_back(Factor::Scalar());
    }
  }
  return KronOperator(std::move(f));
}

}  // namespace resplan

#endif  // RESPLAN_KRON_HPP_
