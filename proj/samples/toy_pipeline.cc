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

// End-to-end use of the library on a five-record dataset: select noise
// scales, measure, reconstruct, and print each marginal.

#include <cstdio>

#include "resplan/accounting.hpp"
#include "resplan/mechanism.hpp"
#include "resplan/planner.hpp"
#include "resplan/reconstruct.hpp"
#include "resplan/schema.hpp"

int main() {
  using resplan::AttrSet;
  const resplan::Schema schema = resplan::Schema::FromSizes({2, 2, 3});
  const resplan::Workload workload(schema, {AttrSet{0}, AttrSet{0, 1},
                                            AttrSet{1, 2}});

  resplan::Dataset data(schema);
  data.AddRecord({0, 1, 1});
  data.AddRecord({1, 1, 2});
  data.AddRecord({1, 0, 2});
  data.AddRecord({0, 1, 1});
  data.AddRecord({1, 0, 2});

  const resplan::CostModel model = resplan::BuildCostModel(schema, workload);
  const double budget = resplan::CalibrateBudget(resplan::RhoTarget{0.5});
  const resplan::Plan plan = resplan::SolveSumOfVariances(model, budget);
  std::printf("pcost %.4f, expected sum of variances %.4f\n",
              plan.total_pcost, plan.predicted_loss);
  for (const auto& e : plan.entries) {
    std::printf("  sigma2%-8s %.4f\n", schema.Describe(e.attrset).c_str(),
                e.sigma2);
  }

  const resplan::NoiseSource noise(2026);
  const auto residuals = resplan::MeasureAll(data, plan, noise);
  for (const auto& est : resplan::ReconstructAll(schema, workload, residuals)) {
    std::printf("%s  variance %.4f\n", schema.Describe(est.attrset).c_str(),
                est.cell_variance);
    for (double v : est.values) std::printf("  %8.3f", v);
    std::printf("\n");
  }
  return 0;
}
