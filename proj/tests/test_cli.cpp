#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <rankpath.hpp>

using namespace rankpath;

namespace {

namespace fs = std::filesystem;

const std::string kCli = RANKPATH_CLI;
const std::string kSamples = RANKPATH_SAMPLES;

struct CliRun {
  int status;
  std::string output;  // stdout and stderr
};

CliRun run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  CliRun r{-1, ""};
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rankpath_cli_tests";
  fs::create_directories(dir);
  return (dir / name).string();
}

std::string sample(const std::string& name) { return kSamples + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> read_csv(const std::string& path, std::string* header) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Cli, PathOnWorkedPair) {
  const std::string out = scratch("path.json");
  CliRun r = run("path --descriptor " + sample("descriptor_2x2_t2.json") + " --p " + sample("worked_p.json") + " --q " +
              sample("worked_q.json") + " --out " + out);
  ASSERT_EQ(r.status, 0) << r.output;
  Json j = read_json_file(out);
  EXPECT_NEAR(j["certificate"]["length"].get<double>(), 2.0, 1e-10);
  EXPECT_NEAR(j["certificate"]["ratio"].get<double>(), std::sqrt(2.0), 1e-10);
  EXPECT_EQ(j["breakpoints"].size(), 3u);
}

TEST(Cli, PathRejectsNonMember) {
  CliRun r = run("path --descriptor " + sample("descriptor_2x2_t2.json") + " --p " + sample("identity_2x2.json") +
              " --q " + sample("worked_q.json") + " --out " + scratch("bad.json"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("residual"), std::string::npos) << r.output;
}

TEST(Cli, MissingInputFile) {
  CliRun r = run("path --descriptor /nonexistent.json --p " + sample("worked_p.json") + " --q " +
              sample("worked_q.json") + " --out " + scratch("x.json"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("/nonexistent.json"), std::string::npos);
}

TEST(Cli, UnknownFlagPrintsUsage) {
  CliRun r = run("trials --bogus 3");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("Usage"), std::string::npos) << r.output;
  EXPECT_EQ(run("").status, 1);
}

TEST(Cli, TrialsComplex332) {
  const std::string desc = scratch("d332.json");
  write_json_file(desc, to_json(VarietyDescriptor(3, 3, 2)));
  const std::string rep = scratch("trials.json");
  const std::string csv = scratch("trials.csv");
  CliRun r = run("trials --descriptor " + desc + " --pairs 500 --seed 1 --strategy AllStrataGrid --report " + rep +
              " --csv " + csv);
  ASSERT_EQ(r.status, 0) << r.output;
  TrialReport loaded = load_report(rep);
  EXPECT_EQ(loaded.records.size(), 500u);
  EXPECT_EQ(loaded.bound_violations, 0);
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "seed,rank_p,rank_q,outer,length,ratio,certified_bound,branches,max_residual");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 500);
}

TEST(Cli, TrialsFromConfigFile) {
  const std::string rep = scratch("cfg.json");
  CliRun r = run("trials --config " + sample("trials_4x4_t3.json") + " --pairs 30 --report " + rep);
  ASSERT_EQ(r.status, 0) << r.output;
  TrialReport loaded = load_report(rep);
  EXPECT_EQ(loaded.config.pairs, 30);
  EXPECT_EQ(loaded.config.master_seed, 42u);
  EXPECT_EQ(loaded.config.descriptor, VarietyDescriptor(4, 4, 3));
}

TEST(Cli, TrialsDeterministicAcrossThreadCounts) {
  const std::string a = scratch("det_a.json"), b = scratch("det_b.json");
  const std::string args = "trials --descriptor " + sample("descriptor_4x4_t3.json") +
                           " --pairs 80 --seed 7 --strategy Adversarial --report ";
  ASSERT_EQ(run(args + a).status, 0);
  ASSERT_EQ(std::system(("RANKPATH_THREADS=1 " + kCli + " " + args + b + " > /dev/null").c_str()), 0);
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST(Cli, CuspSlope) {
  const std::string out = scratch("cusp.csv");
  CliRun r = run("cusp --s-min 0.001 --s-max 0.1 --steps 20 --out " + out);
  ASSERT_EQ(r.status, 0) << r.output;
  std::string header;
  auto rows = read_csv(out, &header);
  EXPECT_EQ(header, "s,d_out,d_in,ratio");
  ASSERT_EQ(rows.size(), 20u);
  std::vector<double> s, ratio;
  for (const auto& row : rows) s.push_back(row[0]), ratio.push_back(row[3]);
  EXPECT_NEAR(loglog_slope(s, ratio), -1.0, 0.05);
}

TEST(Cli, FamilyExampleRunsSurfaceDemo) {
  const std::string out = scratch("family.csv");
  CliRun r = run("family --map " + sample("cusp_degeneration.poly") + " --t 3 --out " + out);
  ASSERT_EQ(r.status, 0) << r.output;
  std::string header;
  auto rows = read_csv(out, &header);
  EXPECT_EQ(header, "s,d_out,d_in,ratio");
  EXPECT_EQ(rows.size(), 8u);
}

TEST(Cli, FamilyParametrizedResiduals) {
  const std::string out = scratch("family_param.csv");
  CliRun r = run("family --map " + sample("cusp_degeneration.poly") + " --t 3 --param " + sample("cusp_branch.poly") +
              " --s-min -1 --s-max 1 --steps 11 --out " + out);
  ASSERT_EQ(r.status, 0) << r.output;
  std::string header;
  auto rows = read_csv(out, &header);
  EXPECT_EQ(header, "s,residual");
  ASSERT_EQ(rows.size(), 11u);
  for (const auto& row : rows) EXPECT_LE(row[1], 1e-12);
}

TEST(Cli, FamilyMalformedMap) {
  const std::string bad = scratch("bad.poly");
  write_text_file(bad, "vars: x; rows:1; cols:1; [1,1]=x+");
  CliRun r = run("family --map " + bad + " --t 1 --out " + scratch("f.csv"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("line 1"), std::string::npos) << r.output;
}

TEST(Cli, OracleReport) {
  const std::string out = scratch("oracle.json");
  CliRun r = run("oracle --descriptor " + sample("descriptor_2x2_t2.json") + " --p " + sample("worked_p.json") +
              " --q " + sample("worked_q.json") + " --samples 60 --out " + out);
  ASSERT_EQ(r.status, 0) << r.output;
  Json j = read_json_file(out);
  EXPECT_LE(j["outer"].get<double>(), j["shortened"].get<double>() + 1e-9);
  EXPECT_LE(j["shortened"].get<double>(), j["constructed"].get<double>() + 1e-9);
  EXPECT_TRUE(j["graph"].is_number() || j["graph"] == "unreachable");
  EXPECT_EQ(j["config"]["n_samples"], 60);
}
