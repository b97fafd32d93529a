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

#ifndef RESPLAN_TESTS_SUPPORT_FIXTURES_HPP_
#define RESPLAN_TESTS_SUPPORT_FIXTURES_HPP_

#include <cstdint>
#include <vector>

#include "resplan/schema.hpp"

namespace resplan::testing {

// Three attributes of sizes 2, 2, 3 with labels (a,b), (y,n), (1,2,3).
inline Schema ToySchema() {
  return Schema({{"a1", 2, {"a", "b"}},
                 {"a2", 2, {"y", "n"}},
                 {"a3", 3, {"1", "2", "3"}}});
}

// Records (a,n,2), (b,n,3), (b,y,3), (a,n,2), (b,y,3).
inline Dataset ToyDataset() {
  Dataset d(ToySchema());
  d.AddRecord({0, 1, 1});
  d.AddRecord({1, 1, 2});
  d.AddRecord({1, 0, 2});
  d.AddRecord({0, 1, 1});
  d.AddRecord({1, 0, 2});
  return d;
}

inline Workload ToyWorkload() {
  return Workload(ToySchema(), {AttrSet{0}, AttrSet{0, 1}, AttrSet{1, 2}});
}

inline const std::vector<std::uint32_t>& CpsSizes() {
  static const std::vector<std::uint32_t> s = {100, 50, 7, 4, 2};
  return s;
}
inline const std::vector<std::uint32_t>& AdultSizes() {
  static const std::vector<std::uint32_t> s = {100, 100, 100, 99, 85, 42, 16,
                                               15,  9,   7,   6,  5,  2,  2};
  return s;
}
inline const std::vector<std::uint32_t>& LoansSizes() {
  static const std::vector<std::uint32_t> s = {101, 101, 101, 101, 3, 8,
                                               36,  6,   51,  4,   5, 15};
  return s;
}

}  // namespace resplan::testing

#endif  // RESPLAN_TESTS_SUPPORT_FIXTURES_HPP_
