#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "curvesurvey/cli.hpp"
#include "curvesurvey/population.hpp"

namespace fs = std::filesystem;
using namespace curvesurvey;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const fs::path& p) {
  const auto text = slurp(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::vector<std::vector<std::string>> read_table(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("curvesurvey_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenerateWritesPopulation) {
  const auto r = cli({"generate", "--N", "100", "--d", "48", "--H", "4", "--seed", "7", "--out", path("a.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(path("a.csv")), 101u);
  ASSERT_EQ(cli({"generate", "--N", "100", "--d", "48", "--H", "4", "--seed", "7", "--out", path("b.csv")}).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  const auto pop = load_csv(path("a.csv"));
  EXPECT_EQ(pop.size(), 100u);
  EXPECT_EQ(pop.grid_size(), 48u);
  EXPECT_EQ(pop.stratum_count(), 4u);
}

TEST_F(Cli, GenerateRejectsEmptyPopulation) {
  const auto r = cli({"generate", "--N", "0", "--out", path("z.csv")});
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(fs::exists(path("z.csv")));
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, GenerateFromConfig) {
  std::ofstream(path("spec.json")) << R"({"N": 20, "d": 5, "H": 2, "seed": 3})";
  ASSERT_EQ(cli({"generate", "--config", path("spec.json"), "--out", path("p.csv")}).code, 0);
  ASSERT_EQ(cli({"generate", "--N", "20", "--d", "5", "--H", "2", "--seed", "3", "--out", path("q.csv")}).code, 0);
  EXPECT_EQ(slurp(path("p.csv")), slurp(path("q.csv")));
}

TEST_F(Cli, StratifyByPeak) {
  ASSERT_EQ(cli({"generate", "--N", "40", "--d", "6", "--H", "1", "--out", path("p.csv")}).code, 0);
  ASSERT_EQ(cli({"stratify", "--pop", path("p.csv"), "--strata", "4", "--out", path("s.csv")}).code, 0);
  const auto pop = load_csv(path("s.csv"));
  EXPECT_EQ(pop.stratum_sizes(), (std::vector<std::size_t>{10, 10, 10, 10}));
  EXPECT_EQ(cli({"stratify", "--pop", path("p.csv"), "--strata", "41", "--out", path("t.csv")}).code, 1);
}

TEST_F(Cli, EstimateCensus) {
  ASSERT_EQ(cli({"generate", "--N", "30", "--d", "5", "--H", "2", "--out", path("p.csv")}).code, 0);
  const auto r = cli({"estimate", "--pop", path("p.csv"), "--design", R"({"kind":"srswor","n":30})",
                      "--out", path("e.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto table = read_table(path("e.csv"));
  ASSERT_EQ(table.size(), 6u);
  EXPECT_EQ(table[0], (std::vector<std::string>{"t", "mean", "var", "sd", "lower_global_0.05", "upper_global_0.05"}));
  const auto mean = population_mean(load_csv(path("p.csv")));
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_NEAR(std::stod(table[j + 1][1]), mean[j], 1e-11 * std::abs(mean[j]));
    EXPECT_EQ(table[j + 1][2], "0");
  }
  const auto side = nlohmann::json::parse(slurp(path("e.csv.json")));
  EXPECT_EQ(side["sample_size"], 30);
  EXPECT_EQ(side["sample_positions"].size(), 30u);
  EXPECT_FALSE(fs::exists(path("e.csv.cov.csv")));
}

TEST_F(Cli, EstimateFullCovarianceAndDeterminism) {
  ASSERT_EQ(cli({"generate", "--N", "200", "--d", "7", "--H", "4", "--out", path("p.csv")}).code, 0);
  const std::string design = R"({"kind":"stratified","rule":"optimal","n":24})";
  auto run = [&](const std::string& out, const std::string& seed) {
    return cli({"estimate", "--pop", path("p.csv"), "--design", design, "--seed", seed, "--band", "both",
                "--alpha", "0.05,0.01", "--diag-only", "false", "--out", path(out)});
  };
  ASSERT_EQ(run("a.csv", "11").code, 0);
  ASSERT_EQ(run("b.csv", "11").code, 0);
  ASSERT_EQ(run("c.csv", "12").code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(slurp(path("a.csv.json")), slurp(path("b.csv.json")));
  EXPECT_NE(nlohmann::json::parse(slurp(path("a.csv.json")))["sample_positions"],
            nlohmann::json::parse(slurp(path("c.csv.json")))["sample_positions"]);
  EXPECT_EQ(read_table(path("a.csv"))[0].size(), 4u + 8u);
  const auto cov = read_table(path("a.csv.cov.csv"));
  ASSERT_EQ(cov.size(), 7u);
  EXPECT_EQ(cov[0].size(), 7u);
  EXPECT_EQ(cov[2][5], cov[5][2]);
}

TEST_F(Cli, EstimateRejectsInestimableDesign) {
  ASSERT_EQ(cli({"generate", "--N", "30", "--d", "5", "--H", "2", "--out", path("p.csv")}).code, 0);
  const auto r = cli({"estimate", "--pop", path("p.csv"), "--design", R"({"kind":"stratified","allocation":[1,4]})",
                      "--out", path("e.csv")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("not estimable"), std::string::npos);
  EXPECT_EQ(cli({"estimate", "--pop", path("p.csv"), "--design", "{oops", "--out", path("e.csv")}).code, 1);
}

TEST_F(Cli, AllocateHandCase) {
  // Stratum 2 is stratum 1 scaled by 3, so S_2 = 3 S_1.
  std::ostringstream csv;
  csv << "t,0,1,stratum\n";
  for (int k = 0; k < 100; ++k) {
    const double a = k % 2 ? 2.0 : 0.0;
    csv << k << ',' << a << ',' << a << ",1\n";
  }
  for (int k = 0; k < 100; ++k) {
    const double b = k % 2 ? 6.0 : 0.0;
    csv << 100 + k << ',' << b << ',' << b << ",2\n";
  }
  std::ofstream(path("p.csv")) << csv.str();
  const auto r = cli({"allocate", "--pop", path("p.csv"), "--n", "40"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const auto& allocations = j["allocations"];
  nlohmann::json optimal;
  for (const auto& a : allocations) {
    if (a["rule"] == "optimal") optimal = a;
  }
  EXPECT_EQ(optimal["n_h"], nlohmann::json::parse("[10, 30]"));

  ASSERT_EQ(cli({"allocate", "--pop", path("p.csv"), "--n", "40", "--out", path("a.json")}).code, 0);
  EXPECT_EQ(nlohmann::json::parse(slurp(path("a.json"))), j);
}

TEST_F(Cli, AllocateEqualStrata) {
  std::ostringstream csv;
  csv << "t,0,1,stratum\n";
  for (int h = 1; h <= 3; ++h) {
    for (int k = 0; k < 20; ++k) csv << h * 100 + k << ',' << k << ',' << 2 * k << ',' << h << '\n';
  }
  std::ofstream(path("p.csv")) << csv.str();
  const auto r = cli({"allocate", "--pop", path("p.csv"), "--n", "12"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["allocations"][0]["n_h"], j["allocations"][1]["n_h"]);
}

TEST_F(Cli, AllocateNeedsStrata) {
  ASSERT_EQ(cli({"generate", "--N", "30", "--d", "5", "--H", "2", "--out", path("p.csv")}).code, 0);
  std::ofstream(path("flat.csv")) << "t,0,1\na,1,2\nb,3,4\n";
  const auto r = cli({"allocate", "--pop", path("flat.csv"), "--n", "1"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("strata required"), std::string::npos);
}

TEST_F(Cli, ExperimentCensus) {
  std::ofstream(path("exp.json")) << R"({"population": {"synthetic": {"N": 30, "d": 6, "H": 2}},
      "designs": [{"kind": "srswor", "n": 30, "name": "census"}], "replicates": 1})";
  const auto r = cli({"experiment", "--config", path("exp.json"), "--out", path("out")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(path("out/report.json")));
  EXPECT_EQ(j["designs"][0]["loss_mu"]["mean"], 0);
  EXPECT_EQ(j["designs"][0]["loss_gamma"]["median"], 0);
}

TEST_F(Cli, ExperimentThreeDesigns) {
  std::ofstream(path("exp.json")) << R"({"population": {"synthetic": {"N": 400, "d": 12, "H": 4, "seed": 2}},
      "designs": [{"kind": "srswor", "n": 40},
                  {"kind": "stratified", "rule": "proportional", "n": 40},
                  {"kind": "stratified", "rule": "optimal", "n": 40}],
      "replicates": 50, "master_seed": 3})";
  const auto r = cli({"experiment", "--config", path("exp.json"), "--out", path("out")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(path("out/report.json")));
  ASSERT_EQ(j["designs"].size(), 3u);
  for (const auto& d : j["designs"]) {
    for (const char* table : {"loss_mu", "loss_gamma"}) {
      for (const char* q : {"mean", "q1", "median", "q3"}) EXPECT_TRUE(d[table].contains(q));
    }
    EXPECT_EQ(d["coverage"].size(), 2u);
  }
  EXPECT_EQ(j["ranking"]["by_integrated_variance"].size(), 3u);
  EXPECT_EQ(line_count(path("out/sd.tsv")), 13u);
  EXPECT_EQ(line_count(path("out/envelope.tsv")), 13u);

  // Flag overrides.
  ASSERT_EQ(cli({"experiment", "--config", path("exp.json"), "--replicates", "10", "--seed", "4",
                 "--alpha", "0.1", "--out", path("o2")}).code, 0);
  const auto k = nlohmann::json::parse(slurp(path("o2/report.json")));
  EXPECT_EQ(k["replicates"], 10);
  EXPECT_EQ(k["master_seed"], 4);
  EXPECT_EQ(k["alphas"].size(), 1u);
}

TEST_F(Cli, ExperimentPartialFailure) {
  std::ofstream(path("exp.json")) << R"({"population": {"synthetic": {"N": 40, "d": 4, "H": 2}},
      "designs": [{"kind": "srswor", "n": 5}, {"kind": "stratified", "allocation": [1, 3], "name": "thin"}],
      "replicates": 3})";
  const auto r = cli({"experiment", "--config", path("exp.json"), "--out", path("out")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("thin"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("out/report.json")));
}

TEST_F(Cli, ExperimentInvalidJson) {
  std::ofstream(path("bad.json")) << R"({"designs": [)";
  const auto r = cli({"experiment", "--config", path("bad.json"), "--out", path("out")});
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(fs::exists(path("out/report.json")));
}

TEST_F(Cli, UsageErrors) {
  EXPECT_NE(cli({}).code, 0);
  EXPECT_NE(cli({"nope"}).code, 0);
  EXPECT_NE(cli({"generate"}).code, 0);
}
