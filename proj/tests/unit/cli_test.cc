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

#include "resplan/cli.hpp"

#include <sys/resource.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "resplan/io.hpp"
#include "support/fixtures.hpp"

namespace resplan {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("resplan_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string Write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return (path_ / name).string();
  }

 private:
  fs::path path_;
};

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kToySchema = R"({"attributes": [
  {"name": "a1", "size": 2, "labels": ["a", "b"]},
  {"name": "a2", "size": 2, "labels": ["y", "n"]},
  {"name": "a3", "size": 3, "labels": ["1", "2", "3"]}]})";
const char* kToyWorkload = R"({"marginals": [
  {"attrs": ["a1"]}, {"attrs": ["a1", "a2"], "weight": 1.0},
  {"attrs": ["a2", "a3"]}]})";
const char* kToyData = "a1,a2,a3\na,n,2\nb,n,3\nb,y,3\na,n,2\nb,y,3\n";

TEST(SchemaIoTest, ParsesAndRoundTrips) {
  const Schema s = SchemaFromJson(nlohmann::json::parse(kToySchema));
  EXPECT_EQ(s.num_attributes(), 3u);
  EXPECT_EQ(s.attribute(2).labels[1], "2");
  const Schema again = SchemaFromJson(SchemaToJson(s));
  EXPECT_EQ(again.attribute(1).name, "a2");
  EXPECT_EQ(again.domain_size(2), 3u);
}

TEST(SchemaIoTest, ReportsBadFields) {
  EXPECT_THROW(SchemaFromJson(nlohmann::json::parse(R"({"attrs": []})")),
               ConfigError);
  try {
    SchemaFromJson(nlohmann::json::parse(
        R"({"attributes": [{"name": "x", "size": 2}, {"size": 3}]})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("attribute 1"), std::string::npos);
  }
  EXPECT_THROW(SchemaFromJson(nlohmann::json::parse(
                   R"({"attributes": [{"name": "x", "size": -2}]})")),
               ConfigError);
}

TEST(WorkloadIoTest, ParsesWeightsAndRejectsUnknownNames) {
  const Schema s = testing::ToySchema();
  const Workload w = WorkloadFromJson(s, nlohmann::json::parse(kToyWorkload));
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w.entries()[2].marginal, (AttrSet{1, 2}));
  EXPECT_THROW(WorkloadFromJson(s, nlohmann::json::parse(
                                       R"({"marginals": [{"attrs": ["zz"]}]})")),
               ConfigError);
  EXPECT_THROW(
      WorkloadFromJson(s, nlohmann::json::parse(
                              R"({"marginals": [{"attrs": ["a1"]}, {"attrs": ["a1"]}]})")),
      ConfigError);
}

TEST(DatasetIoTest, LabelsCodesAndColumnOrder) {
  const Schema s = testing::ToySchema();
  std::istringstream in("a3,a1,a2\n2,a,n\n2,1,0\n\"3\",b,y\n");
  const Dataset d = ReadDataset(s, in);
  ASSERT_EQ(d.num_records(), 3u);
  EXPECT_EQ(std::vector<std::uint32_t>(d.record(0).begin(), d.record(0).end()),
            (std::vector<std::uint32_t>{0, 1, 1}));
  EXPECT_EQ(std::vector<std::uint32_t>(d.record(2).begin(), d.record(2).end()),
            (std::vector<std::uint32_t>{1, 0, 2}));
}

TEST(DatasetIoTest, ErrorsCarryLineNumbers) {
  const Schema s = testing::ToySchema();
  std::istringstream bad_value("a1,a2,a3\na,n,2\na,q,2\n");
  try {
    ReadDataset(s, bad_value, "d.csv");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("d.csv:3"), std::string::npos);
  }
  std::istringstream missing("a1,a2\na,n\n");
  EXPECT_THROW(ReadDataset(s, missing), DataError);
  std::istringstream ragged("a1,a2,a3\na,n\n");
  EXPECT_THROW(ReadDataset(s, ragged), DataError);
}

TEST(PlanIoTest, RoundTripIsStableAtTwelveDigits) {
  const Schema s = testing::ToySchema();
  const CostModel m = BuildCostModel(s, testing::ToyWorkload());
  const Plan p = SolveSumOfVariances(m, 1.0);
  std::stringstream first;
  WritePlan(s, p, first);
  const Plan back = ReadPlan(s, first);
  ASSERT_EQ(back.entries.size(), p.entries.size());
  for (std::size_t j = 0; j < p.entries.size(); ++j) {
    EXPECT_EQ(back.entries[j].attrset, p.entries[j].attrset);
    EXPECT_NEAR(back.entries[j].sigma2, p.entries[j].sigma2,
                1e-11 * p.entries[j].sigma2);
  }
  std::stringstream second;
  WritePlan(s, back, second);
  EXPECT_EQ(first.str(), second.str());
  const Plan third = ReadPlan(s, second);
  for (std::size_t j = 0; j < p.entries.size(); ++j) {
    EXPECT_EQ(third.entries[j].sigma2, back.entries[j].sigma2);
  }
}

TEST(PlanIoTest, RejectsMalformedRows) {
  const Schema s = testing::ToySchema();
  std::istringstream bad("attrs,sigma2\na1,-3\n");
  EXPECT_THROW(ReadPlan(s, bad), ConfigError);
  std::istringstream unknown("attrs,sigma2\nzz,3\n");
  EXPECT_THROW(ReadPlan(s, unknown), ConfigError);
  std::istringstream dup("attrs,sigma2\na1,3\na1,2\n");
  EXPECT_THROW(ReadPlan(s, dup), ConfigError);
}

RunConfig ToyConfig(const TempDir& dir) {
  RunConfig c;
  c.schema_path = dir.Write("schema.json", kToySchema);
  c.workload_path = dir.Write("workload.json", kToyWorkload);
  c.data_path = dir.Write("data.csv", kToyData);
  c.out_dir = (dir.path() / "out").string();
  c.budget_pcost = 1.0;
  return c;
}

TEST(CmdPlanTest, ToyPlanFileAndNoDatasetAccess) {
  TempDir dir;
  RunConfig c = ToyConfig(dir);
  c.data_path = (dir.path() / "does_not_exist.csv").string();
  std::ostringstream report;
  CmdPlan(c, report);
  const Plan p = LoadPlan(testing::ToySchema(), (dir.path() / "out" / "plan.csv").string());
  EXPECT_NEAR(*p.Sigma2(AttrSet{}), 4.807, 1e-3);
  EXPECT_NE(report.str().find("rho (zCDP): 0.5"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "plan_report.txt"));
}

TEST(CmdPlanTest, CpsRmseReport) {
  TempDir dir;
  RunConfig c;
  c.schema_path = dir.Write(
      "s.json", R"({"attributes": [{"name": "income", "size": 100},
        {"name": "age", "size": 50}, {"name": "marital", "size": 7},
        {"name": "race", "size": 4}, {"name": "sex", "size": 2}]})");
  c.workload_path = dir.Write(
      "w.json", R"({"marginals": [{"attrs": ["income"]}, {"attrs": ["age"]},
        {"attrs": ["marital"]}, {"attrs": ["race"]}, {"attrs": ["sex"]}]})");
  c.out_dir = (dir.path() / "out").string();
  c.budget_rho = 0.5;
  std::ostringstream report;
  CmdPlan(c, report);
  EXPECT_NE(report.str().find("rmse: 1.7439"), std::string::npos) << report.str();
}

TEST(CmdPlanTest, ConstraintModesAreExclusive) {
  TempDir dir;
  RunConfig c = ToyConfig(dir);
  c.budget_mu = 1.0;
  std::ostringstream report;
  EXPECT_THROW(CmdPlan(c, report), ConfigError);
  c.budget_pcost.reset();
  c.budget_mu.reset();
  EXPECT_THROW(CmdPlan(c, report), ConfigError);
}

TEST(CmdRunTest, ZeroNoiseWritesTrueCounts) {
  TempDir dir;
  RunConfig c = ToyConfig(dir);
  c.zero_noise = true;
  c.seed = 1;
  std::ostringstream report;
  CmdRun(c, report);
  EXPECT_NE(report.str().find("NOT differentially private"), std::string::npos);
  const std::string m = Slurp(dir.path() / "out" / "marginal_2_a2-a3.csv");
  EXPECT_NE(m.find("a2,a3,estimate,variance,covariance\n"), std::string::npos);
  EXPECT_NE(m.find("\ny,3,2,"), std::string::npos) << m;
  EXPECT_NE(m.find("\nn,2,2,"), std::string::npos) << m;
  EXPECT_NE(m.find("\nn,3,1,"), std::string::npos) << m;
  EXPECT_NE(m.find("# seed: 1\n"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "residuals.csv"));
}

TEST(CmdRunTest, FixedSeedIsByteIdentical) {
  TempDir dir;
  RunConfig c = ToyConfig(dir);
  c.seed = 31337;
  std::ostringstream r1, r2;
  CmdRun(c, r1);
  const std::string a = Slurp(dir.path() / "out" / "marginal_1_a1-a2.csv");
  const std::string ra = Slurp(dir.path() / "out" / "residuals.csv");
  c.threads = 3;
  CmdRun(c, r2);
  EXPECT_EQ(a, Slurp(dir.path() / "out" / "marginal_1_a1-a2.csv"));
  EXPECT_EQ(ra, Slurp(dir.path() / "out" / "residuals.csv"));
}

TEST(CmdRunTest, ReusesPlanFile) {
  TempDir dir;
  RunConfig c = ToyConfig(dir);
  std::ostringstream report;
  CmdPlan(c, report);
  RunConfig r = ToyConfig(dir);
  r.budget_pcost.reset();
  r.plan_path = (dir.path() / "out" / "plan.csv").string();
  r.out_dir = (dir.path() / "run").string();
  r.seed = 5;
  CmdRun(r, report);
  EXPECT_TRUE(fs::exists(dir.path() / "run" / "marginal_0_a1.csv"));
}

TEST(CmdRunTest, UnknownLabelIsDataError) {
  TempDir dir;
  RunConfig c = ToyConfig(dir);
  c.data_path = dir.Write("bad.csv", "a1,a2,a3\na,n,7\n");
  std::ostringstream report;
  EXPECT_THROW(CmdRun(c, report), DataError);
}

TEST(CmdAccountTest, Conversions) {
  RunConfig c;
  c.budget_pcost = 4.0;
  c.report_epsilons = {1.0};
  std::ostringstream report;
  CmdAccount(c, report);
  EXPECT_NE(report.str().find("mu (Gaussian DP): 2\n"), std::string::npos);
  c.budget_pcost = 1.0;
  std::ostringstream r1;
  CmdAccount(c, r1);
  EXPECT_NE(r1.str().find("rho (zCDP): 0.5\n"), std::string::npos);
}

TEST(ExitCodeTest, MapsErrorKinds) {
  std::ostringstream err;
  EXPECT_EQ(RunWithExitCode([] {}, err), kExitOk);
  EXPECT_EQ(RunWithExitCode([] { throw ConfigError("x"); }, err), kExitConfig);
  EXPECT_EQ(RunWithExitCode([] { throw SolverError("x"); }, err), kExitSolver);
  EXPECT_EQ(RunWithExitCode([] { throw DataError("x"); }, err), kExitData);
}

int RunBinary(const std::string& args) {
  const std::string cmd =
      std::string(RESPLAN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(BinaryTest, ExitCodes) {
  TempDir dir;
  const RunConfig c = ToyConfig(dir);
  const std::string base =
      " --schema " + c.schema_path + " --workload " + c.workload_path;
  const std::string out = " --out " + (dir.path() / "o").string();
  EXPECT_EQ(RunBinary("plan" + base + " --budget-pcost 1" + out), 0);
  EXPECT_EQ(RunBinary("plan" + base + " --budget-pcost 1 --objective maxvar" + out), 0);
  EXPECT_EQ(RunBinary("plan" + base + out), 2);
  EXPECT_EQ(RunBinary("plan --schema /nonexistent.json --workload x --budget-pcost 1"), 2);
  EXPECT_EQ(RunBinary("plan" + base + " --budget-pcost 1 --objective maxvar --tol 1e-30" + out), 3);
  EXPECT_EQ(RunBinary("run" + base + " --budget-pcost 1 --seed 3 --data " +
                      dir.Write("bad.csv", "a1,a2,a3\nz,n,2\n") + out), 4);
  EXPECT_EQ(RunBinary("run" + base + " --budget-eps-delta 1 1e-6 --seed 3 --data " +
                      c.data_path + out), 0);
  EXPECT_EQ(RunBinary("account --budget-mu 1 --eps 0.5 1 2"), 0);
  EXPECT_EQ(RunBinary("bogus"), 2);
}

long PeakRssKb() {
  rusage u{};
  getrusage(RUSAGE_SELF, &u);
  return u.ru_maxrss;
}

// A universe of about 6.4e17 cells is never allocated: the whole pipeline
// for all marginals up to 3-way stays within a small multiple of the
// workload's total cell count.
TEST(ScaleTest, AdultShapedPipelineUpToThreeWay) {
  const Schema s = Schema::FromSizes(testing::AdultSizes());
  const Workload w(s, AllUpToKWay(14, 3));
  std::uint64_t cells = 0;
  for (const auto& e : w.entries()) cells += s.CellCount(e.marginal);
  const CostModel m = BuildCostModel(s, w);
  const Plan p = SolveSumOfVariances(m, 1.0);
  Dataset d(s);
  std::mt19937 rng(1);
  std::vector<std::uint32_t> rec(14);
  for (int r = 0; r < 2000; ++r) {
    for (std::uint32_t i = 0; i < 14; ++i) rec[i] = rng() % s.domain_size(i);
    d.AddRecord(rec);
  }
  const long before = PeakRssKb();
  const auto rs = MeasureAll(d, p, NoiseSource(1), 4);
  const auto est = ReconstructAll(s, w, rs, 4);
  const long grown_kb = PeakRssKb() - before;
  ASSERT_EQ(est.size(), w.size());
  double total = 0.0;
  for (const auto& e : est) total += e.values[0];
  EXPECT_TRUE(std::isfinite(total));
  // Estimates alone take 8 bytes per workload cell.
  EXPECT_LT(static_cast<double>(grown_kb) * 1024.0, 4.0 * 8.0 * cells);
}

TEST(ScaleTest, AdultShapedCliRunUpToTwoWay) {
  TempDir dir;
  const Schema s = Schema::FromSizes(testing::AdultSizes());
  const std::string schema = dir.Write("s.json", SchemaToJson(s).dump());
  const std::string workload = dir.Write(
      "w.json", WorkloadToJson(s, Workload(s, AllUpToKWay(14, 2))).dump());
  std::string data;
  for (std::uint32_t i = 0; i < 14; ++i) data += (i ? ",a" : "a") + std::to_string(i);
  data += "\n";
  std::mt19937 rng(2);
  for (int r = 0; r < 1000; ++r) {
    for (std::uint32_t i = 0; i < 14; ++i) {
      data += (i ? "," : "") + std::to_string(rng() % s.domain_size(i));
    }
    data += "\n";
  }
  const std::string path = dir.Write("d.csv", data);
  EXPECT_EQ(RunBinary("run --schema " + schema + " --workload " + workload +
                      " --data " + path + " --budget-pcost 1 --seed 4 --threads 4 --out " +
                      (dir.path() / "o").string()),
            0);
  EXPECT_TRUE(fs::exists(dir.path() / "o" / "marginal_105_a12-a13.csv"));
}

}  // namespace
}  // namespace resplan
