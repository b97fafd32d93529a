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

// Categorical schemas, attribute subsets, marginal workloads and record
// datasets.
//
// Cells of a marginal are flattened in Kronecker order: row-major with the
// attribute that comes last in schema order varying fastest. Every operator in
// kron.hpp expands its factors in the same order, so a marginal vector, the
// corresponding rows of a marginal query matrix and the noisy residuals all
// agree on indexing.

#ifndef RESPLAN_SCHEMA_HPP_
#define RESPLAN_SCHEMA_HPP_

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "resplan/errors.hpp"

namespace resplan {

namespace internal {

inline std::uint64_t CheckedMul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    throw ConfigError("cell count overflows 64 bits");
  }
  return a * b;
}

}  // namespace internal

// A set of attribute positions, kept strictly increasing.
//
// Sets order by size first and lexicographically second, so sorting a
// downward-closed collection always places a set after all of its subsets.
class AttrSet {
 public:
  AttrSet() = default;
  AttrSet(std::initializer_list<std::uint32_t> indices)
      : AttrSet(std::vector<std::uint32_t>(indices)) {}
  explicit AttrSet(std::vector<std::uint32_t> indices)
      : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()),
                   indices_.end());
  }

  const std::vector<std::uint32_t>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  bool contains(std::uint32_t attr) const {
    return std::binary_search(indices_.begin(), indices_.end(), attr);
  }

  bool IsSubsetOf(const AttrSet& other) const {
    return std::includes(other.indices_.begin(), other.indices_.end(),
                         indices_.begin(), indices_.end());
  }

  AttrSet Minus(const AttrSet& other) const {
    AttrSet out;
    std::set_difference(indices_.begin(), indices_.end(),
                        other.indices_.begin(), other.indices_.end(),
                        std::back_inserter(out.indices_));
    return out;
  }

  // The subset selected by the low |size()| bits of `mask`.
  AttrSet SubsetFromMask(std::uint64_t mask) const {
    AttrSet out;
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      if ((mask >> k) & 1U) out.indices_.push_back(indices_[k]);
    }
    return out;
  }

  // Calls fn(subset) for each of the 2^size() subsets, including the empty
  // set and the set itself.
  template <typename Fn>
  void ForEachSubset(Fn&& fn) const {
    if (indices_.size() >= 63) throw ConfigError("attribute set too large");
    const std::uint64_t count = std::uint64_t{1} << indices_.size();
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      fn(SubsetFromMask(mask));
    }
  }

  friend bool operator==(const AttrSet&, const AttrSet&) = default;
  friend std::strong_ordering operator<=>(const AttrSet& a,
                                          const AttrSet& b) {
    if (auto c = a.size() <=> b.size(); c != 0) return c;
    return a.indices_ <=> b.indices_;
  }

 private:
  std::vector<std::uint32_t> indices_;
};

struct AttrSetHash {
  std::size_t operator()(const AttrSet& s) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ s.size();
    for (std::uint32_t i : s) {
      h ^= i + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

struct Attribute {
  std::string name;
  std::uint32_t size = 0;
  // Optional display labels, one per value index.
  std::vector<std::string> labels;
};

// Ordered list of categorical attributes. The order is canonical for every
// Kronecker expansion in the library.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Attribute> attributes)
      : attributes_(std::move(attributes)) {
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
      const Attribute& a = attributes_[i];
      if (a.name.empty()) {
        throw ConfigError("attribute " + std::to_string(i) + " has no name");
      }
      if (a.size < 2) {
        throw ConfigError("attribute '" + a.name +
                          "' must have at least 2 values");
      }
      if (!a.labels.empty() && a.labels.size() != a.size) {
        throw ConfigError("attribute '" + a.name + "' has " +
                          std::to_string(a.labels.size()) +
                          " labels but size " + std::to_string(a.size));
      }
      if (!by_name_.emplace(a.name, i).second) {
        throw ConfigError("duplicate attribute name '" + a.name + "'");
      }
    }
  }

  // Unnamed attributes a0, a1, ... with the given domain sizes.
  static Schema FromSizes(std::span<const std::uint32_t> sizes) {
    std::vector<Attribute> attrs;
    attrs.reserve(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      attrs.push_back({"a" + std::to_string(i), sizes[i], {}});
    }
    return Schema(std::move(attrs));
  }
  static Schema FromSizes(std::initializer_list<std::uint32_t> sizes) {
    return FromSizes(std::span<const std::uint32_t>(sizes.begin(),
                                                    sizes.size()));
  }

  std::size_t num_attributes() const { return attributes_.size(); }
  const Attribute& attribute(std::size_t i) const { return attributes_.at(i); }
  const std::vector<Attribute>& attributes() const { return attributes_; }
  std::uint32_t domain_size(std::size_t i) const {
    return attributes_.at(i).size;
  }

  std::optional<std::uint32_t> Find(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return static_cast<std::uint32_t>(it->second);
  }

  AttrSet FromNames(const std::vector<std::string>& names) const {
    std::vector<std::uint32_t> idx;
    for (const std::string& n : names) {
      auto i = Find(n);
      if (!i) throw ConfigError("unknown attribute '" + n + "'");
      idx.push_back(*i);
    }
    AttrSet out(idx);
    if (out.size() != names.size()) {
      throw ConfigError("attribute listed twice in a marginal");
    }
    return out;
  }

  void Validate(const AttrSet& a) const {
    if (!a.empty() && a.indices().back() >= attributes_.size()) {
      throw ConfigError("attribute index " +
                        std::to_string(a.indices().back()) +
                        " out of range for schema with " +
                        std::to_string(attributes_.size()) + " attributes");
    }
  }

  // Number of cells in the marginal on `a`; 1 for the empty set.
  std::uint64_t CellCount(const AttrSet& a) const {
    std::uint64_t n = 1;
    for (std::uint32_t i : a) n = internal::CheckedMul(n, domain_size(i));
    return n;
  }

  // Rows of the residual matrix on `a`: product of (size - 1).
  std::uint64_t ResidualRowCount(const AttrSet& a) const {
    std::uint64_t n = 1;
    for (std::uint32_t i : a) n = internal::CheckedMul(n, domain_size(i) - 1);
    return n;
  }

  // Human readable "{name,name}" form.
  std::string Describe(const AttrSet& a) const {
    std::string out = "{";
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (k) out += ",";
      out += attribute(a.indices()[k]).name;
    }
    return out + "}";
  }

 private:
  std::vector<Attribute> attributes_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

struct WorkloadEntry {
  AttrSet marginal;
  double weight = 1.0;
};

// Marginals requested by the user, each with a positive importance weight.
class Workload {
 public:
  Workload() = default;
  Workload(const Schema& schema, std::vector<WorkloadEntry> entries)
      : entries_(std::move(entries)) {
    std::unordered_set<AttrSet, AttrSetHash> seen;
    for (const WorkloadEntry& e : entries_) {
      schema.Validate(e.marginal);
      if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
        throw ConfigError("marginal " + schema.Describe(e.marginal) +
                          " has non-positive weight");
      }
      if (!seen.insert(e.marginal).second) {
        throw ConfigError("marginal " + schema.Describe(e.marginal) +
                          " appears more than once in the workload");
      }
    }
  }

  // Unit-weight workload.
  Workload(const Schema& schema, const std::vector<AttrSet>& marginals)
      : Workload(schema, ToEntries(marginals)) {}

  const std::vector<WorkloadEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  static std::vector<WorkloadEntry> ToEntries(
      const std::vector<AttrSet>& marginals) {
    std::vector<WorkloadEntry> out;
    out.reserve(marginals.size());
    for (const AttrSet& m : marginals) out.push_back({m, 1.0});
    return out;
  }

  std::vector<WorkloadEntry> entries_;
};

// All marginals on exactly k attributes.
inline std::vector<AttrSet> AllKWay(std::size_t num_attributes, std::size_t k) {
  std::vector<AttrSet> out;
  if (k > num_attributes) return out;
  std::vector<std::uint32_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = static_cast<std::uint32_t>(i);
  while (true) {
    out.emplace_back(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == num_attributes - k + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

// All marginals on at most k attributes, including the empty marginal.
inline std::vector<AttrSet> AllUpToKWay(std::size_t num_attributes,
                                        std::size_t k) {
  std::vector<AttrSet> out;
  for (std::size_t j = 0; j <= std::min(k, num_attributes); ++j) {
    auto level = AllKWay(num_attributes, j);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

// Downward closure: every subset of every workload marginal, sorted by
// (size, lexicographic). An empty workload has an empty closure.
inline std::vector<AttrSet> Closure(const Workload& workload) {
  std::unordered_set<AttrSet, AttrSetHash> sets;
  for (const WorkloadEntry& e : workload.entries()) {
    e.marginal.ForEachSubset([&](AttrSet s) { sets.insert(std::move(s)); });
  }
  std::vector<AttrSet> out(sets.begin(), sets.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Flattened index of a value combination of the attributes in `a`.
inline std::uint64_t CellIndex(const Schema& schema, const AttrSet& a,
                               std::span<const std::uint32_t> values) {
  if (values.size() != a.size()) {
    throw ConfigError("expected " + std::to_string(a.size()) + " values");
  }
  std::uint64_t index = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const std::uint32_t m = schema.domain_size(a.indices()[k]);
    if (values[k] >= m) {
      throw ConfigError("value " + std::to_string(values[k]) +
                        " out of range for attribute '" +
                        schema.attribute(a.indices()[k]).name + "'");
    }
    index = index * m + values[k];
  }
  return index;
}

// Inverse of CellIndex.
inline std::vector<std::uint32_t> CellValues(const Schema& schema,
                                             const AttrSet& a,
                                             std::uint64_t index) {
  if (index >= schema.CellCount(a)) {
    throw ConfigError("cell index " + std::to_string(index) + " out of range");
  }
  std::vector<std::uint32_t> values(a.size());
  for (std::size_t k = a.size(); k-- > 0;) {
    const std::uint32_t m = schema.domain_size(a.indices()[k]);
    values[k] = static_cast<std::uint32_t>(index % m);
    index /= m;
  }
  return values;
}

// Records stored as value-index tuples, one index per schema attribute.
// The data vector over the full universe is never formed.
class Dataset {
 public:
  explicit Dataset(Schema schema) : schema_(std::move(schema)) {}

  void AddRecord(std::span<const std::uint32_t> record) {
    const std::size_t k = schema_.num_attributes();
    if (record.size() != k) {
      throw DataError("record has " + std::to_string(record.size()) +
                      " fields, schema has " + std::to_string(k));
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (record[i] >= schema_.domain_size(i)) {
        throw DataError("value " + std::to_string(record[i]) +
                        " out of range for attribute '" +
                        schema_.attribute(i).name + "'");
      }
    }
    values_.insert(values_.end(), record.begin(), record.end());
  }
  void AddRecord(std::initializer_list<std::uint32_t> record) {
    AddRecord(std::span<const std::uint32_t>(record.begin(), record.size()));
  }

  const Schema& schema() const { return schema_; }
  std::size_t num_records() const {
    return schema_.num_attributes() == 0
               ? 0
               : values_.size() / schema_.num_attributes();
  }
  std::span<const std::uint32_t> record(std::size_t r) const {
    const std::size_t k = schema_.num_attributes();
    return std::span<const std::uint32_t>(values_).subspan(r * k, k);
  }

 private:
  Schema schema_;
  std::vector<std::uint32_t> values_;
};

// True counts of the marginal on `a`, one streaming pass over the records.
inline std::vector<std::uint64_t> MarginalCounts(const Dataset& data,
                                                 const AttrSet& a) {
  const Schema& schema = data.schema();
  schema.Validate(a);
  std::vector<std::uint64_t> counts(schema.CellCount(a), 0);
  for (std::size_t r = 0; r < data.num_records(); ++r) {
    auto rec = data.record(r);
    std::uint64_t index = 0;
    for (std::uint32_t i : a) index = index * schema.domain_size(i) + rec[i];
    ++counts[index];
  }
  return counts;
}

}  // namespace resplan

#endif  // RESPLAN_SCHEMA_HPP_
