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

// resplan: plan, run and account for private marginal releases.

#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "resplan/cli.hpp"

namespace {

void AddSharedInputs(CLI::App* cmd, resplan::RunConfig& c) {
  cmd->add_option("--schema", c.schema_path, "Schema JSON file")->required();
  cmd->add_option("--workload", c.workload_path, "Workload JSON file")
      ->required();
}

void AddConstraints(CLI::App* cmd, resplan::RunConfig& c, bool loss_bound) {
  cmd->add_option("--budget-pcost", c.budget_pcost, "Privacy cost budget");
  cmd->add_option("--budget-rho", c.budget_rho, "zCDP rho budget");
  cmd->add_option("--budget-mu", c.budget_mu, "Gaussian DP mu budget");
  cmd->add_option("--budget-eps-delta", c.budget_eps_delta,
                  "(epsilon, delta) budget, two values");
  if (loss_bound) {
    cmd->add_option("--loss-bound", c.loss_bound,
                    "Minimize privacy cost subject to loss <= bound");
  }
}

void AddSolverOptions(CLI::App* cmd, resplan::RunConfig& c) {
  const std::map<std::string, resplan::Objective> objectives = {
      {"sumvar", resplan::Objective::kSumOfVariances},
      {"maxvar", resplan::Objective::kMaxVariance}};
  cmd->add_option("--objective", c.objective, "sumvar or maxvar")
      ->transform(CLI::CheckedTransformer(objectives, CLI::ignore_case));
  cmd->add_option("--tol", c.tolerance,
                  "Relative optimality gap for the maxvar solver");
}

void AddEpsilons(CLI::App* cmd, resplan::RunConfig& c) {
  cmd->add_option("--eps", c.report_epsilons,
                  "Epsilon values for the delta table");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Private marginal release with residual mechanisms"};
  app.require_subcommand(1);
  resplan::RunConfig config;

  CLI::App* plan = app.add_subcommand("plan", "Select noise scales");
  AddSharedInputs(plan, config);
  AddConstraints(plan, config, true);
  AddSolverOptions(plan, config);
  AddEpsilons(plan, config);
  plan->add_option("--seed", config.seed, "Echoed in the report header");
  plan->add_option("--out", config.out_dir, "Output directory");

  CLI::App* run = app.add_subcommand("run", "Measure and reconstruct");
  AddSharedInputs(run, config);
  run->add_option("--data", config.data_path, "Dataset CSV file")->required();
  run->add_option("--plan", config.plan_path, "Existing plan file");
  AddConstraints(run, config, true);
  AddSolverOptions(run, config);
  AddEpsilons(run, config);
  run->add_option("--seed", config.seed, "Master random seed");
  run->add_flag("--zero-noise", config.zero_noise,
                "TEST ONLY: add no noise; the output is not private");
  run->add_option("--threads", config.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", config.out_dir, "Output directory");

  CLI::App* account =
      app.add_subcommand("account", "Convert a budget to guarantees");
  AddConstraints(account, config, false);
  AddEpsilons(account, config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : resplan::kExitConfig;
  }

  return resplan::RunWithExitCode(
      [&] {
        if (*plan) {
          resplan::CmdPlan(config, std::cout);
        } else if (*run) {
          resplan::CmdRun(config, std::cout);
        } else {
          resplan::CmdAccount(config, std::cout);
        }
      },
      std::cerr);
}
