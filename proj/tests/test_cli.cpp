#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

const std::string kData = REGVAR_DATA_DIR;

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(REGVAR_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> summary(const fs::path& dir) {
  std::map<std::string, std::string> kv;
  std::istringstream in(slurp(dir / "summary.txt"));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("regvar_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Cli, RateIdentity) {
  const auto out = scratch("rate_id");
  ASSERT_EQ(run("rate --spec " + kData + "/identity.json --x 0 --out " + out.string()), 0);
  EXPECT_NEAR(std::stod(summary(out)["sur"]), 1.0, 0.05);
  const std::string csv = slurp(out / "rate.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "level,delta,value,points");
}

TEST(Cli, RateCone) {
  const auto out = scratch("rate_cone");
  ASSERT_EQ(run("rate --spec " + kData + "/punctured_cone.json --x 0 --y 0 --out " + out.string()), 0);
  auto kv = summary(out);
  EXPECT_LE(std::stod(kv["sur"]), 0.05);
  EXPECT_EQ(kv["seed"], "0");
  EXPECT_EQ(kv["levels"], "6");
}

TEST(Cli, ExitCodes) {
  const auto out = scratch("codes");
  EXPECT_EQ(run("rate --spec " + kData + "/missing.json --x 0 --out " + out.string()), 2);
  EXPECT_EQ(run("rate --spec " + kData + "/identity.json --out " + out.string()), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("asymptotic --spec " + kData + "/linear.json --eta cubic --out " + out.string()), 2);
  EXPECT_EQ(run("critical --spec " + kData + "/empty.json --budget 10 --out " + out.string()), 3);
  EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, CriticalSquare) {
  const auto out = scratch("crit_sq");
  ASSERT_EQ(run("critical --spec " + kData + "/square.json --tau 0.1 --budget 4000 --out " + out.string()), 0);
  std::istringstream values(slurp(out / "values.csv"));
  std::string line;
  std::getline(values, line);
  EXPECT_EQ(line, "y1");
  int rows = 0;
  while (std::getline(values, line)) {
    EXPECT_LT(std::stod(line), 0.0026);
    ++rows;
  }
  EXPECT_GT(rows, 0);
  for (const char* f : {"flagged.csv", "dimension.csv", "porosity.csv", "components.csv", "summary.txt"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
}

TEST(Cli, CriticalCircleComponents) {
  const auto out = scratch("crit_circle");
  ASSERT_EQ(run("critical --spec " + kData + "/circle_squared.json --budget 200000 --link 0.2 --out " + out.string()),
            0);
  EXPECT_EQ(summary(out)["components"], "2");
}

TEST(Cli, Asymptotic) {
  const auto out = scratch("asym");
  ASSERT_EQ(run("asymptotic --spec " + kData + "/reciprocal.json --shells 2:6 --budget 16 --out " + out.string()), 0);
  auto kv = summary(out);
  EXPECT_NE(kv["candidates"], "0");
  const auto out2 = scratch("asym_lin");
  ASSERT_EQ(run("asymptotic --spec " + kData + "/linear.json --out " + out2.string()), 0);
  EXPECT_EQ(summary(out2)["candidates"], "0");
  const auto out3 = scratch("asym_custom");
  ASSERT_EQ(run("asymptotic --spec " + kData + "/linear.json --eta custom:" + kData + "/eta_cubic.json --out " +
                out3.string()),
            0);
  EXPECT_EQ(summary(out3)["eta_name"], "one-plus-t-cubed");
}

TEST(Cli, CalculusBundled) {
  const auto out = scratch("calc");
  ASSERT_EQ(run("calculus --out " + out.string()), 0);
  EXPECT_EQ(summary(out)["failed_rows"], "0");
}

TEST(Cli, CalculusFromFiles) {
  const auto out = scratch("calc_files");
  ASSERT_EQ(run("calculus --spec " + kData + "/identity.json --rule radial --rho " + kData +
                "/rho_one_plus_square.json --budget 2 --out " + out.string()),
            0);
  EXPECT_EQ(summary(out)["failed_rows"], "0");
  ASSERT_EQ(run("calculus --spec " + kData + "/diag23.json --rule sum --matrix \"0.1,0;0,0.1\" --budget 1 --out " +
                out.string()),
            0);
  EXPECT_EQ(summary(out)["failed_rows"], "0");
  EXPECT_EQ(run("calculus --spec " + kData + "/identity.json --rule sum --out " + out.string()), 2);
}

TEST(Cli, ThreadCountDoesNotChangeOutput) {
  const auto a = scratch("threads1"), b = scratch("threads8");
  const std::string args = "critical --spec " + kData + "/cusp.json --budget 20000 --seed 5 --out ";
  ASSERT_EQ(run(args + a.string(), "REGVAR_THREADS=1"), 0);
  ASSERT_EQ(run(args + b.string(), "REGVAR_THREADS=8"), 0);
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    EXPECT_EQ(slurp(entry.path()), slurp(b / name)) << name;
  }
}
