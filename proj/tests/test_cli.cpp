#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(MCAEEG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mcaeeg_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SynthInfoAndPsdExport) {
  ASSERT_EQ(run("synth -o " + path("a.eegc") + " --seed 4 --trials 2"), 0);
  ASSERT_EQ(run("synth -o " + path("b.eegc") + " --seed 4 --trials 2"), 0);
  EXPECT_EQ(slurp(path("a.eegc")), slurp(path("b.eegc")));
  EXPECT_EQ(run("convert-info " + path("a.eegc")), 0);
  ASSERT_EQ(run("psd-export -i " + path("a.eegc") + " --subject 1 --trial 2 -o " + path("p.csv")), 0);
  std::ifstream csv(path("p.csv"));
  std::string line;
  int rows = 0;
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("frequency_hz,ch1,", 0), 0u);
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 83);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("convert-info " + path("missing.eegc")), 2);
  {
    std::ofstream bad(path("bad.eegc"), std::ios::binary);
    bad << "NOPE and some bytes";
  }
  EXPECT_EQ(run("convert-info " + path("bad.eegc")), 2);
  ASSERT_EQ(run("synth -o " + path("a.eegc") + " --trials 2"), 0);
  EXPECT_EQ(run("psd-export -i " + path("a.eegc") + " --trial 99 -o " + path("p.csv")), 2);
  EXPECT_EQ(run("run -i " + path("a.eegc") + " --mode CONCAT"), 3);
  EXPECT_EQ(run("run -i " + path("a.eegc") + " --train-fraction 1.5"), 3);
  EXPECT_EQ(run("run --bogus-flag"), 3);
  // No rating exceeds 8.5, so only one class remains.
  EXPECT_EQ(run("run -i " + path("a.eegc") + " --no-ica --epochs 1 --threshold 8.5"), 4);
}

TEST_F(Cli, ConfigFileSuppliesOptions) {
  {
    std::ofstream cfg(path("synth.toml"));
    cfg << "[synth]\nout = \"" << path("c.eegc") << "\"\ntrials = 2\nseed = 9\n";
  }
  ASSERT_EQ(run("--config " + path("synth.toml") + " synth"), 0);
  EXPECT_TRUE(fs::exists(path("c.eegc")));
}
