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

#include "support/dense_oracle.hpp"

#include <random>

#include <gtest/gtest.h>

#include "support/fixtures.hpp"

namespace resplan {
namespace {

using oracle::Densify;

TEST(DensifyTest, KroneckerOfParts) {
  std::mt19937 rng(2);
  const FactorKind kinds[] = {FactorKind::kOnesRow, FactorKind::kSubtraction,
                              FactorKind::kSubtractionPinv,
                              FactorKind::kIdentity};
  for (int t = 0; t < 20; ++t) {
    const Factor a{kinds[rng() % 4], 2 + static_cast<std::uint32_t>(rng() % 3)};
    const Factor b{kinds[rng() % 4], 2 + static_cast<std::uint32_t>(rng() % 3)};
    EXPECT_TRUE(Densify(KronOperator({a, b}))
                    .isApprox(oracle::Kron(oracle::DenseFactor(a),
                                           oracle::DenseFactor(b))));
  }
}

TEST(DensePcostTest, SingleResidual) {
  const Schema s = Schema::FromSizes({3});
  const Eigen::MatrixXd r = Densify(ResidualOperator(s, AttrSet{0}));
  const Eigen::MatrixXd h = Densify(MeasurementOperator(s, AttrSet{0}));
  EXPECT_NEAR(oracle::DensePcost({{r, h * h.transpose()}}), 2.0 / 3.0, 1e-12);
}

TEST(DensePcostTest, IdentityQueries) {
  EXPECT_NEAR(oracle::DensePcost({{Eigen::MatrixXd::Identity(5, 5),
                                   Eigen::MatrixXd::Identity(5, 5)}}),
              1.0, 1e-15);
  EXPECT_THROW(oracle::DensePcost({{Eigen::MatrixXd::Identity(2, 2),
                                    Eigen::MatrixXd::Zero(2, 2)}}),
               std::invalid_argument);
}

TEST(DensePcostTest, ToyPlanMatchesSymbolic) {
  const Schema s = testing::ToySchema();
  const CostModel m = BuildCostModel(s, testing::ToyWorkload());
  const Plan p = SolveSumOfVariances(m, 1.0);
  std::vector<oracle::DenseMechanism> ms;
  for (const auto& e : p.entries) {
    const Eigen::MatrixXd h = Densify(MeasurementOperator(s, e.attrset));
    ms.push_back({Densify(ResidualOperator(s, e.attrset)),
                  e.sigma2 * h * h.transpose()});
  }
  EXPECT_NEAR(oracle::DensePcost(ms), p.total_pcost, 1e-10);
}

TEST(DenseBlueTest, ZeroNoiseRecoversTruth) {
  const Schema s = testing::ToySchema();
  const std::vector<AttrSet> all = Closure(Workload(s, {AttrSet{0, 1, 2}}));
  const auto sys = oracle::Stack(s, all, std::vector<double>(all.size(), 1.0));
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(12, 0, 11);
  const Eigen::MatrixXd w = Densify(MarginalOperator(s, AttrSet{1, 2}));
  const auto r = oracle::DenseBlue(w, sys.b, sys.sigma, sys.b * x);
  EXPECT_TRUE(r.estimate.isApprox(w * x, 1e-10));
}

TEST(DenseBlueTest, ShapeMismatch) {
  EXPECT_THROW(oracle::DenseBlue(Eigen::MatrixXd::Ones(1, 3),
                                 Eigen::MatrixXd::Ones(2, 2),
                                 Eigen::MatrixXd::Identity(2, 2),
                                 Eigen::VectorXd::Ones(2)),
               std::invalid_argument);
}

TEST(CovarianceTest, MeasurementGramIsResidualCovariance) {
  for (std::uint32_t m = 2; m <= 64; ++m) {
    const Eigen::MatrixXd h = oracle::DenseFactor(Factor::Subtraction(m));
    const Eigen::MatrixXd expected =
        Eigen::MatrixXd::Ones(m - 1, m - 1) + Eigen::MatrixXd::Identity(m - 1, m - 1);
    EXPECT_EQ(h * h.transpose(), expected);
  }
}

}  // namespace
}  // namespace resplan
