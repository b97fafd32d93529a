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

// Command implementations behind the resplan executable. Each command takes a
// RunConfig, writes its artifacts under config.out_dir and a human-readable
// report to the given stream.

#ifndef RESPLAN_CLI_HPP_
#define RESPLAN_CLI_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "resplan/accounting.hpp"
#include "resplan/errors.hpp"
#include "resplan/io.hpp"
#include "resplan/mechanism.hpp"
#include "resplan/planner.hpp"
#include "resplan/reconstruct.hpp"
#include "resplan/schema.hpp"

namespace resplan {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitSolver = 3,
  kExitData = 4,
};

struct RunConfig {
  std::string schema_path;
  std::string workload_path;
  std::string data_path;
  std::string plan_path;  // run: reuse this plan instead of solving
  std::string out_dir = ".";
  Objective objective = Objective::kSumOfVariances;

  // Exactly one constraint must be set.
  std::optional<double> budget_pcost;
  std::optional<double> budget_rho;
  std::optional<double> budget_mu;
  std::optional<std::pair<double, double>> budget_eps_delta;
  std::optional<double> loss_bound;

  std::optional<std::uint64_t> seed;
  bool zero_noise = false;  // test hook; the output is not private
  unsigned threads = 1;
  double tolerance = 1e-9;
  std::vector<double> report_epsilons = {0.1, 0.5, 1.0, 2.0, 4.0, 8.0};
};

namespace internal {

inline int CountConstraints(const RunConfig& c) {
  return c.budget_pcost.has_value() + c.budget_rho.has_value() +
         c.budget_mu.has_value() + c.budget_eps_delta.has_value() +
         c.loss_bound.has_value();
}

// Privacy budget implied by the config, if the config is budget-constrained.
inline std::optional<double> BudgetOf(const RunConfig& c) {
  if (c.budget_pcost) {
    if (!(*c.budget_pcost > 0.0) || !std::isfinite(*c.budget_pcost)) {
      throw ConfigError("--budget-pcost must be positive");
    }
    return *c.budget_pcost;
  }
  if (c.budget_rho) return CalibrateBudget(RhoTarget{*c.budget_rho});
  if (c.budget_mu) return CalibrateBudget(MuTarget{*c.budget_mu});
  if (c.budget_eps_delta) {
    return CalibrateBudget(EpsilonDeltaTarget{c.budget_eps_delta->first,
                                              c.budget_eps_delta->second});
  }
  return std::nullopt;
}

inline void EnsureDir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create '" + dir + "': " + ec.message());
}

inline std::ofstream OpenOut(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  return out;
}

inline std::string SafeName(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    out += ok ? c : '_';
  }
  return out;
}

inline std::string MarginalFileName(const Schema& schema, std::size_t i,
                                    const AttrSet& a) {
  std::string name;
  for (std::uint32_t k : a) {
    if (!name.empty()) name += '-';
    name += SafeName(schema.attribute(k).name);
  }
  if (name.empty()) name = "total";
  return "marginal_" + std::to_string(i) + "_" + name + ".csv";
}

inline void PrintAccount(double pcost, const std::vector<double>& epsilons,
                         std::ostream& out) {
  const Guarantees g = GuaranteesFor(pcost);
  out << "pcost: " << FormatDouble(g.pcost) << "\n";
  out << "rho (zCDP): " << FormatDouble(g.rho) << "\n";
  out << "mu (Gaussian DP): " << FormatDouble(g.mu) << "\n";
  if (!epsilons.empty()) {
    out << "epsilon,delta\n";
    for (double e : epsilons) {
      char buf[80];
      std::snprintf(buf, sizeof(buf), "%g,%.6e\n", e, ApproxDpDelta(pcost, e));
      out << buf;
    }
  }
}

inline void PrintPlanReport(const Schema& schema, const CostModel& model,
                            const Plan& plan, std::ostream& out) {
  out << "objective: " << ObjectiveName(plan.objective) << "\n";
  out << "closure size: " << model.size() << "\n";
  out << "predicted loss: " << FormatDouble(Loss(model, plan, plan.objective))
      << "\n";
  out << "rmse: " << FormatDouble(Rmse(model, plan)) << "\n";
  out << "max variance: " << FormatDouble(MaxCellVariance(model, plan))
      << "\n";
  if (plan.solver_gap > 0.0) {
    out << "solver relative gap: " << FormatDouble(plan.solver_gap) << "\n";
  }
  const auto var = MarginalVariances(model, plan);
  const auto cov = MarginalCovariances(model, plan);
  out << "marginal,cells,variance,covariance\n";
  for (std::size_t i = 0; i < var.size(); ++i) {
    const MarginalModel& mm = model.marginals()[i];
    out << CsvField(schema.Describe(mm.marginal)) << "," << mm.cells << ","
        << FormatDouble(var[i]) << "," << FormatDouble(cov[i]) << "\n";
  }
}

inline Plan SolveFromConfig(const RunConfig& c, const CostModel& model) {
  if (CountConstraints(c) != 1) {
    throw ConfigError(
        "give exactly one of --budget-pcost, --budget-rho, --budget-mu, "
        "--budget-eps-delta, --loss-bound");
  }
  MaxVarianceOptions opts;
  opts.tolerance = c.tolerance;
  if (c.loss_bound) {
    return SolveUtilityConstrained(model, c.objective, *c.loss_bound, opts);
  }
  return SolvePrivacyConstrained(model, c.objective, *BudgetOf(c), opts);
}

}  // namespace internal

// Selects noise scales and writes plan.csv plus plan_report.txt. Never reads
// the dataset.
inline Plan CmdPlan(const RunConfig& config, std::ostream& report) {
  const Schema schema = LoadSchema(config.schema_path);
  const Workload workload = LoadWorkload(schema, config.workload_path);
  const CostModel model = BuildCostModel(schema, workload);
  const Plan plan = internal::SolveFromConfig(config, model);

  internal::EnsureDir(config.out_dir);
  const std::filesystem::path dir(config.out_dir);
  {
    auto out = internal::OpenOut(dir / "plan.csv");
    WritePlan(schema, plan, out);
  }
  std::ostringstream text;
  WriteHeader(text, {config.seed.value_or(0), config.seed.has_value(),
                     plan.total_pcost});
  internal::PrintPlanReport(schema, model, plan, text);
  internal::PrintAccount(plan.total_pcost, config.report_epsilons, text);
  {
    auto out = internal::OpenOut(dir / "plan_report.txt");
    out << text.str();
  }
  report << text.str();
  return plan;
}

// Measures, reconstructs and writes one CSV per workload marginal plus
// residuals.csv. Uses config.plan_path when set, otherwise solves inline.
inline void CmdRun(const RunConfig& config, std::ostream& report) {
  const Schema schema = LoadSchema(config.schema_path);
  const Workload workload = LoadWorkload(schema, config.workload_path);
  const CostModel model = BuildCostModel(schema, workload);
  Plan plan;
  if (!config.plan_path.empty()) {
    if (internal::CountConstraints(config) != 0) {
      throw ConfigError("a budget or loss bound cannot be combined with --plan");
    }
    plan = LoadPlan(schema, config.plan_path);
    const std::vector<double> s2 = AlignedSigma2(model, plan);
    plan.total_pcost = model.PrivacyCost(s2);
    plan.predicted_loss = Loss(model, plan, plan.objective);
    if (plan.entries.size() != model.size()) {
      // Extra mechanisms would spend budget without helping the workload.
      throw ConfigError("plan has entries outside the workload closure");
    }
  } else {
    plan = internal::SolveFromConfig(config, model);
  }
  const Dataset data = LoadDataset(schema, config.data_path);

  std::uint64_t seed = 0;
  if (config.seed) {
    seed = *config.seed;
  } else {
    std::random_device rd;
    seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  const NoiseSource noise(seed, config.zero_noise);
  const unsigned threads = std::max(1u, config.threads);
  const std::vector<NoisyResidual> residuals =
      MeasureAll(data, plan, noise, threads);
  const std::vector<MarginalEstimate> estimates =
      ReconstructAll(schema, workload, residuals, threads);

  internal::EnsureDir(config.out_dir);
  const std::filesystem::path dir(config.out_dir);
  const OutputHeader header{seed, true, plan.total_pcost};
  {
    auto out = internal::OpenOut(dir / "plan.csv");
    WritePlan(schema, plan, out);
  }
  {
    auto out = internal::OpenOut(dir / "residuals.csv");
    WriteResiduals(schema, residuals, header, out);
  }
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    auto out = internal::OpenOut(
        dir / internal::MarginalFileName(schema, i, estimates[i].attrset));
    WriteMarginal(schema, estimates[i], header, out);
  }

  WriteHeader(report, header);
  if (config.zero_noise) {
    report << "WARNING: zero-noise mode, output is NOT differentially "
              "private\n";
  }
  report << "records: " << data.num_records() << "\n";
  report << "noisy scalars: ";
  std::uint64_t scalars = 0;
  for (const NoisyResidual& r : residuals) scalars += r.values.size();
  report << scalars << "\n";
  report << "marginals written: " << estimates.size() << "\n";
  internal::PrintAccount(plan.total_pcost, config.report_epsilons, report);
}

inline void CmdAccount(const RunConfig& config, std::ostream& report) {
  if (config.loss_bound || internal::CountConstraints(config) != 1) {
    throw ConfigError(
        "give exactly one of --budget-pcost, --budget-rho, --budget-mu, "
        "--budget-eps-delta");
  }
  internal::PrintAccount(*internal::BudgetOf(config), config.report_epsilons,
                         report);
}

// Runs `fn` and maps library errors to exit codes, printing the message.
inline int RunWithExitCode(const std::function<void()>& fn,
                           std::ostream& err) {
  try {
    fn();
    return kExitOk;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace resplan

#endif  // RESPLAN_CLI_HPP_
