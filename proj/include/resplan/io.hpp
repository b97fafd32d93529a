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

// File formats.
//
//   schema    JSON  {"attributes": [{"name": s, "size": n, "labels": [s...]}]}
//   workload  JSON  {"marginals": [{"attrs": [name...], "weight": w}]}
//   dataset   CSV   header of attribute names; cells are labels or codes
//   plan      CSV   '#' header lines, then "attrs,sigma2" rows with attribute
//                   names joined by '|' (empty for the total)

#ifndef RESPLAN_IO_HPP_
#define RESPLAN_IO_HPP_

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "resplan/errors.hpp"
#include "resplan/planner.hpp"
#include "resplan/reconstruct.hpp"
#include "resplan/schema.hpp"

namespace resplan {

inline constexpr const char* kFormatVersion = "resplan-1";

namespace internal {

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json ParseJson(const std::string& text,
                                const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

// Splits one CSV line. Fields may be double-quoted, with "" for a quote.
inline std::vector<std::string> SplitCsv(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw ConfigError("unterminated quote");
  out.push_back(std::move(field));
  return out;
}

inline std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void StripCr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

template <typename T>
bool ParseNumber(std::string_view s, T& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

inline std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace internal

inline Schema SchemaFromJson(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("attributes") ||
      !j["attributes"].is_array()) {
    throw ConfigError("schema: expected an object with an 'attributes' array");
  }
  std::vector<Attribute> attrs;
  std::size_t idx = 0;
  for (const auto& a : j["attributes"]) {
    const std::string where = "schema: attribute " + std::to_string(idx++);
    if (!a.is_object()) throw ConfigError(where + ": expected an object");
    Attribute attr;
    if (!a.contains("name") || !a["name"].is_string()) {
      throw ConfigError(where + ": missing string field 'name'");
    }
    attr.name = a["name"].get<std::string>();
    if (a.contains("labels")) {
      if (!a["labels"].is_array()) {
        throw ConfigError(where + ": 'labels' must be an array");
      }
      for (const auto& l : a["labels"]) {
        if (!l.is_string()) throw ConfigError(where + ": labels must be strings");
        attr.labels.push_back(l.get<std::string>());
      }
    }
    if (a.contains("size")) {
      if (!a["size"].is_number_unsigned()) {
        throw ConfigError(where + ": 'size' must be a positive integer");
      }
      const auto s = a["size"].get<std::uint64_t>();
      if (s > 0xffffffffULL) throw ConfigError(where + ": 'size' too large");
      attr.size = static_cast<std::uint32_t>(s);
    } else if (!attr.labels.empty()) {
      attr.size = static_cast<std::uint32_t>(attr.labels.size());
    } else {
      throw ConfigError(where + ": missing field 'size'");
    }
    attrs.push_back(std::move(attr));
  }
  return Schema(std::move(attrs));
}

inline nlohmann::json SchemaToJson(const Schema& schema) {
  nlohmann::json attrs = nlohmann::json::array();
  for (const Attribute& a : schema.attributes()) {
    nlohmann::json o = {{"name", a.name}, {"size", a.size}};
    if (!a.labels.empty()) o["labels"] = a.labels;
    attrs.push_back(std::move(o));
  }
  return {{"attributes", attrs}};
}

inline Schema LoadSchema(const std::string& path) {
  return SchemaFromJson(
      internal::ParseJson(internal::ReadFile(path), "schema '" + path + "'"));
}

inline Workload WorkloadFromJson(const Schema& schema, const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("marginals") ||
      !j["marginals"].is_array()) {
    throw ConfigError("workload: expected an object with a 'marginals' array");
  }
  std::vector<WorkloadEntry> entries;
  std::size_t idx = 0;
  for (const auto& m : j["marginals"]) {
    const std::string where = "workload: marginal " + std::to_string(idx++);
    if (!m.is_object() || !m.contains("attrs") || !m["attrs"].is_array()) {
      throw ConfigError(where + ": expected an object with an 'attrs' array");
    }
    std::vector<std::string> names;
    for (const auto& n : m["attrs"]) {
      if (!n.is_string()) throw ConfigError(where + ": names must be strings");
      names.push_back(n.get<std::string>());
    }
    WorkloadEntry e;
    try {
      e.marginal = schema.FromNames(names);
    } catch (const ConfigError& err) {
      throw ConfigError(where + ": " + err.what());
    }
    if (m.contains("weight")) {
      if (!m["weight"].is_number()) {
        throw ConfigError(where + ": 'weight' must be a number");
      }
      e.weight = m["weight"].get<double>();
    }
    entries.push_back(std::move(e));
  }
  return Workload(schema, std::move(entries));
}

inline nlohmann::json WorkloadToJson(const Schema& schema, const Workload& w) {
  nlohmann::json ms = nlohmann::json::array();
  for (const WorkloadEntry& e : w.entries()) {
    std::vector<std::string> names;
    for (std::uint32_t i : e.marginal) names.push_back(schema.attribute(i).name);
    ms.push_back({{"attrs", names}, {"weight", e.weight}});
  }
  return {{"marginals", ms}};
}

inline Workload LoadWorkload(const Schema& schema, const std::string& path) {
  return WorkloadFromJson(
      schema,
      internal::ParseJson(internal::ReadFile(path), "workload '" + path + "'"));
}

// Reads records from CSV. Columns are matched to attributes by header name
// and may appear in any order; every attribute must be present. A cell is
// first looked up among the attribute's labels, then parsed as a code.
inline Dataset ReadDataset(const Schema& schema, std::istream& in,
                           const std::string& source = "dataset") {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": missing header");
  internal::StripCr(line);
  std::vector<std::string> header;
  try {
    header = internal::SplitCsv(line);
  } catch (const ConfigError& e) {
    throw DataError(source + ":1: " + e.what());
  }
  const std::size_t k = schema.num_attributes();
  std::vector<int> column_of(k, -1);
  for (std::size_t c = 0; c < header.size(); ++c) {
    auto a = schema.Find(header[c]);
    if (!a) {
      throw DataError(source + ":1: unknown column '" + header[c] + "'");
    }
    if (column_of[*a] != -1) {
      throw DataError(source + ":1: duplicate column '" + header[c] + "'");
    }
    column_of[*a] = static_cast<int>(c);
  }
  for (std::size_t a = 0; a < k; ++a) {
    if (column_of[a] < 0) {
      throw DataError(source + ":1: missing column '" +
                      schema.attribute(a).name + "'");
    }
  }
  std::vector<std::map<std::string, std::uint32_t, std::less<>>> labels(k);
  for (std::size_t a = 0; a < k; ++a) {
    const auto& ls = schema.attribute(a).labels;
    for (std::size_t v = 0; v < ls.size(); ++v) {
      labels[a].emplace(ls[v], static_cast<std::uint32_t>(v));
    }
  }

  Dataset data(schema);
  std::vector<std::uint32_t> rec(k);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    internal::StripCr(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    std::vector<std::string> fields;
    try {
      fields = internal::SplitCsv(line);
    } catch (const ConfigError& e) {
      throw DataError(where + ": " + e.what());
    }
    if (fields.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t a = 0; a < k; ++a) {
      const std::string& f = fields[static_cast<std::size_t>(column_of[a])];
      auto it = labels[a].find(f);
      if (it != labels[a].end()) {
        rec[a] = it->second;
        continue;
      }
      std::uint32_t code = 0;
      if (!internal::ParseNumber(std::string_view(f), code) ||
          code >= schema.domain_size(a)) {
        throw DataError(where + ": invalid value '" + f +
                        "' for attribute '" + schema.attribute(a).name + "'");
      }
      rec[a] = code;
    }
    data.AddRecord(rec);
  }
  return data;
}

inline Dataset LoadDataset(const Schema& schema, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return ReadDataset(schema, in, path);
}

inline std::string AttrSetToken(const Schema& schema, const AttrSet& a) {
  std::string out;
  for (std::uint32_t i : a) {
    if (!out.empty()) out += '|';
    out += schema.attribute(i).name;
  }
  return out;
}

inline AttrSet AttrSetFromToken(const Schema& schema, std::string_view token) {
  std::vector<std::string> names;
  if (!token.empty()) {
    std::size_t start = 0;
    while (true) {
      const std::size_t bar = token.find('|', start);
      names.emplace_back(token.substr(start, bar - start));
      if (bar == std::string_view::npos) break;
      start = bar + 1;
    }
  }
  return schema.FromNames(names);
}

// Header shared by every output file.
struct OutputHeader {
  std::uint64_t seed = 0;
  bool has_seed = false;
  double pcost = 0.0;
};

inline void WriteHeader(std::ostream& out, const OutputHeader& h) {
  out << "# version: " << kFormatVersion << "\n";
  if (h.has_seed) out << "# seed: " << h.seed << "\n";
  out << "# pcost: " << internal::FormatDouble(h.pcost) << "\n";
  out << "# rho: " << internal::FormatDouble(h.pcost / 2.0) << "\n";
  out << "# mu: " << internal::FormatDouble(std::sqrt(h.pcost)) << "\n";
}

inline void WritePlan(const Schema& schema, const Plan& plan,
                      std::ostream& out) {
  WriteHeader(out, {0, false, plan.total_pcost});
  out << "# objective: " << ObjectiveName(plan.objective) << "\n";
  out << "# predicted_loss: " << internal::FormatDouble(plan.predicted_loss)
      << "\n";
  out << "attrs,sigma2\n";
  for (const PlanEntry& e : plan.entries) {
    out << internal::CsvField(AttrSetToken(schema, e.attrset)) << ","
        << internal::FormatDouble(e.sigma2) << "\n";
  }
}

inline Plan ReadPlan(const Schema& schema, std::istream& in,
                     const std::string& source = "plan") {
  Plan plan;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    internal::StripCr(line);
    const std::string where = source + ":" + std::to_string(lineno);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      std::string key = line.substr(1, colon - 1);
      std::string value = line.substr(colon + 1);
      key.erase(0, key.find_first_not_of(' '));
      value.erase(0, value.find_first_not_of(' '));
      if (key == "objective") {
        if (value == "sumvar") {
          plan.objective = Objective::kSumOfVariances;
        } else if (value == "maxvar") {
          plan.objective = Objective::kMaxVariance;
        } else {
          throw ConfigError(where + ": unknown objective '" + value + "'");
        }
      } else if (key == "predicted_loss" || key == "pcost") {
        double v = 0.0;
        if (!internal::ParseNumber(std::string_view(value), v)) {
          throw ConfigError(where + ": bad number '" + value + "'");
        }
        (key == "pcost" ? plan.total_pcost : plan.predicted_loss) = v;
      }
      continue;
    }
    if (!header_seen) {
      if (line != "attrs,sigma2") {
        throw ConfigError(where + ": expected header 'attrs,sigma2'");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    try {
      f = internal::SplitCsv(line);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
    if (f.size() != 2) throw ConfigError(where + ": expected 2 fields");
    PlanEntry e;
    try {
      e.attrset = AttrSetFromToken(schema, f[0]);
    } catch (const ConfigError& err) {
      throw ConfigError(where + ": " + err.what());
    }
    if (!internal::ParseNumber(std::string_view(f[1]), e.sigma2) ||
        !(e.sigma2 > 0.0) || !std::isfinite(e.sigma2)) {
      throw ConfigError(where + ": sigma2 must be a positive number");
    }
    plan.entries.push_back(std::move(e));
  }
  if (!header_seen) throw ConfigError(source + ": missing 'attrs,sigma2' header");
  std::sort(plan.entries.begin(), plan.entries.end(),
            [](const PlanEntry& a, const PlanEntry& b) {
              return a.attrset < b.attrset;
            });
  for (std::size_t i = 1; i < plan.entries.size(); ++i) {
    if (plan.entries[i].attrset == plan.entries[i - 1].attrset) {
      throw ConfigError(source + ": duplicate entry for " +
                        schema.Describe(plan.entries[i].attrset));
    }
  }
  return plan;
}

inline Plan LoadPlan(const Schema& schema, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return ReadPlan(schema, in, path);
}

// One row per cell: attribute values (labels when available), estimate,
// variance, covariance.
inline void WriteMarginal(const Schema& schema, const MarginalEstimate& est,
                          const OutputHeader& header, std::ostream& out) {
  WriteHeader(out, header);
  out << "# marginal: " << schema.Describe(est.attrset) << "\n";
  for (std::uint32_t i : est.attrset) {
    out << internal::CsvField(schema.attribute(i).name) << ",";
  }
  out << "estimate,variance,covariance\n";
  const std::string var = internal::FormatDouble(est.cell_variance);
  const std::string cov = internal::FormatDouble(est.pairwise_covariance);
  for (std::uint64_t c = 0; c < est.values.size(); ++c) {
    const auto vals = CellValues(schema, est.attrset, c);
    for (std::size_t k = 0; k < vals.size(); ++k) {
      const Attribute& a = schema.attribute(est.attrset.indices()[k]);
      out << internal::CsvField(a.labels.empty() ? std::to_string(vals[k])
                                                 : a.labels[vals[k]])
          << ",";
    }
    out << internal::FormatDouble(est.values[c]) << "," << var << "," << cov
        << "\n";
  }
}

inline void WriteResiduals(const Schema& schema,
                           const std::vector<NoisyResidual>& rs,
                           const OutputHeader& header, std::ostream& out) {
  WriteHeader(out, header);
  out << "attrs,sigma2,row,value\n";
  for (const NoisyResidual& r : rs) {
    const std::string token =
        internal::CsvField(AttrSetToken(schema, r.attrset));
    const std::string s2 = internal::FormatDouble(r.sigma2);
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      out << token << "," << s2 << "," << i << ","
          << internal::FormatDouble(r.values[i]) << "\n";
    }
  }
}

}  // namespace resplan

#endif  // RESPLAN_IO_HPP_
