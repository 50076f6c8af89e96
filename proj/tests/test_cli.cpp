#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "simdata.hpp"
#include "tweedie/csv.hpp"

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string(TWEEDIE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("tweedie_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    const auto x = tweedie::testing::normal_design(400, 3, 90);
    auto data = tweedie::testing::tweedie_regression(x, Eigen::Vector3d(3.0, 0.4, -0.3), 4.0, 1.6, 91);
    data = tweedie::Dataset(data.response(), data.design(), {"(Intercept)", "age", "female"});
    tweedie::write_csv((dir_ / "data.csv").string(), data, "meddol");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, SimulateThenSummary) {
  EXPECT_EQ(run("simulate --mu 2 --phi 1 --p 1.5 --n 1000 --seed 4 --out " + path("sim.csv")), 0);
  const auto sim = slurp(path("sim.csv"));
  EXPECT_EQ(sim.rfind("y\n", 0), 0u);
  EXPECT_EQ(std::count(sim.begin(), sim.end(), '\n'), 1001);
  EXPECT_EQ(run("simulate --mu 2 --phi 1 --p 1.5 --n 1000 --seed 4 --out " + path("sim2.csv")), 0);
  EXPECT_EQ(sim, slurp(path("sim2.csv")));
  EXPECT_EQ(run("summary --data " + path("sim.csv") + " --response y"), 0);
}

TEST_F(Cli, FitWritesJsonForEachModel) {
  for (std::string model : {"tweedie", "twopart", "tobit"}) {
    EXPECT_EQ(run("fit --model " + model + " --data " + path("data.csv") + " --covariates age,female --out " + path("fit")),
              0)
        << model;
    const auto j = nlohmann::json::parse(slurp(dir_ / "fit" / ("fit_" + model + ".json")));
    EXPECT_EQ(j["model"], model);
  }
  const auto tw = nlohmann::json::parse(slurp(dir_ / "fit" / "fit_tweedie.json"));
  EXPECT_TRUE(tw.contains("profile"));
  EXPECT_EQ(run("fit --model tweedie --power 1.5 --data " + path("data.csv") + " --covariates age,female --out " +
                path("fixed")),
            0);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir_ / "fixed" / "fit_tweedie.json"))["power"], 1.5);
}

TEST_F(Cli, CompareWritesReport) {
  EXPECT_EQ(run("compare --data " + path("data.csv") + " --covariates age,female --train-n 300 --test-n 100 --seed 3 " +
                "--replicates 5 --splits 2 --out " + path("cmp")),
            0);
  for (const char* f : {"report.json", "fig_qq.svg", "fig_pred.svg", "fig_meanvar.svg", "meanvar.csv",
                        "rmse_splits.json"})
    EXPECT_TRUE(fs::exists(dir_ / "cmp" / f)) << f;
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("fit --model nope --data " + path("data.csv") + " --out " + path("o")), 1);
  EXPECT_EQ(run("fit --model tweedie --power 3 --data " + path("data.csv") + " --covariates age --out " + path("o")), 1);
  EXPECT_EQ(run("fit --model tweedie --data " + path("data.csv") + " --out " + path("o")), 2);  // default schema
  EXPECT_EQ(run("compare --data " + path("data.csv") + " --covariates age --out " + path("o")), 2);  // 2801 + 500
  EXPECT_EQ(run("fit --model tobit --data " + path("data.csv") + " --covariates age,age --out " + path("o")), 3);
  EXPECT_EQ(run("--help"), 0);
}

}  // namespace
