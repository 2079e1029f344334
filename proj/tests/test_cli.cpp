#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;  // stdout and stderr
};

Run run(const std::string& args) {
  const std::string cmd = std::string(FRACNLS_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("fracnls_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& kind) const {
    const auto p = dir_ / (kind + ".json");
    std::ofstream(p) << R"({"grid": {"K": 8, "M": 256}, "noise": {"nXi": 2.5, "nEta": 2},
      "experiment": {"kind": ")" << kind << R"(", "levels": [3, 4, 5], "samples": 4}, "seed": 5})";
    return p;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UnknownKindExitsWithConfigError) {
  const auto cfg = write_config("psi-explosion");
  const auto r = run("experiment --config " + cfg.string() + " --out " + (dir_ / "x").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("unknown experiment kind"), std::string::npos) << r.out;
}

TEST_F(Cli, MissingSubcommandIsAUsageError) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("experiment --bogus-flag").code, 2);
}

TEST_F(Cli, ExperimentCsvIsByteIdenticalAcrossRuns) {
  const auto cfg = write_config("psi-divergence");
  const auto a = run("experiment --config " + cfg.string() + " --out " + (dir_ / "a").string());
  const auto b = run("experiment --config " + cfg.string() + " --out " + (dir_ / "b").string() + " --threads 2");
  ASSERT_TRUE(a.code == 0 || a.code == 1) << a.out;
  ASSERT_EQ(a.code, b.code);
  const auto ca = slurp(dir_ / "a" / "psi-divergence.csv");
  EXPECT_FALSE(ca.empty());
  EXPECT_EQ(ca, slurp(dir_ / "b" / "psi-divergence.csv"));
  EXPECT_EQ(ca.rfind("kind,n,value,stderr,samples,K,M,seed\n", 0), 0u);
  EXPECT_TRUE(fs::exists(dir_ / "a" / "psi-divergence.json"));

  const auto rep = run("report " + (dir_ / "a" / "psi-divergence.csv").string());
  EXPECT_EQ(rep.code, 0) << rep.out;
  EXPECT_NE(rep.out.find("stored slope"), std::string::npos);
  EXPECT_NE(rep.out.find("refit slope"), std::string::npos);
}

TEST_F(Cli, SeedFlagOverridesConfig) {
  const auto cfg = write_config("psi-divergence");
  run("experiment --config " + cfg.string() + " --out " + (dir_ / "a").string() + " --seed 6");
  run("experiment --config " + cfg.string() + " --out " + (dir_ / "b").string());
  EXPECT_NE(slurp(dir_ / "a" / "psi-divergence.csv"), slurp(dir_ / "b" / "psi-divergence.csv"));
}

TEST_F(Cli, ArtifactSubcommandsWriteFiles) {
  const auto cfg = write_config("psi-divergence");
  const std::string common = " --config " + cfg.string() + " --level 3 --out " + dir_.string();
  EXPECT_EQ(run("sample-noise" + common).code, 0);
  EXPECT_EQ(run("psi" + common).code, 0);
  EXPECT_EQ(run("sigma" + common).code, 0);
  for (const char* f : {"noise.bin", "noise.json", "psi.bin", "lambda.bin", "psi.json", "sigma.bin", "sigma.json"})
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  EXPECT_NE(slurp(dir_ / "psi.json").find("\"seed\": 5"), std::string::npos);
  const auto solve = run("solve" + common);
  EXPECT_EQ(solve.code, 0) << solve.out;
  EXPECT_TRUE(fs::exists(dir_ / "u.bin"));
}

TEST_F(Cli, ReportRejectsForeignFiles) {
  std::ofstream(dir_ / "junk.csv") << "a,b,c\n";
  EXPECT_EQ(run("report " + (dir_ / "junk.csv").string()).code, 2);
}
