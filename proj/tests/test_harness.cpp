#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"

using namespace rankpath;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("rankpath_harness_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TrialConfig config(VarietyDescriptor d, int pairs, std::uint64_t seed, RankPairStrategy s) {
  TrialConfig c;
  c.descriptor = d;
  c.pairs = pairs;
  c.master_seed = seed;
  c.rank_pair_strategy = s;
  return c;
}

}  // namespace

TEST(TrialSeed, SplitMixReference) {
  // splitmix64 seeded with 0: first outputs of the reference generator
  EXPECT_EQ(trial_seed(0, 0), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(trial_seed(0, 1), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(trial_seed(0, 2), 0x06C45D188009454FULL);
  EXPECT_NE(trial_seed(1, 0), trial_seed(0, 0));
}

TEST(TrialConfig, Validation) {
  TrialConfig c = config(VarietyDescriptor(3, 3, 2), 1, 0, RankPairStrategy::AllStrataGrid);
  EXPECT_NO_THROW(c.validate());
  c.pairs = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.pairs = 1;
  c.radius_range = {2.0, 1.0};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(strategy_from_string("Everything"), std::invalid_argument);
}

TEST(RunTrials, TheoremBoundOnComplex443) {
  TrialReport rep = run_trials(config(VarietyDescriptor(4, 4, 3), 200, 42, RankPairStrategy::AllStrataGrid));
  EXPECT_EQ(rep.bound_violations, 0);
  EXPECT_EQ(rep.failures, 0);
  EXPECT_EQ(rep.fallback_count, 0);
  EXPECT_LE(rep.max_ratio, 4.0 + 1e-9);
  ASSERT_EQ(rep.records.size(), 200u);
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const auto& r = rep.records[i];
    EXPECT_EQ(r.seed, trial_seed(42, i));
    EXPECT_EQ(r.rank_p, static_cast<int>(i % 3));
    EXPECT_EQ(r.rank_q, static_cast<int>((i / 3) % 3));
    EXPECT_LE(r.max_residual, 1e-8);
  }
}

TEST(RunTrials, CoincidentAdversarialPair) {
  TrialReport rep = run_trials(config(VarietyDescriptor(3, 3, 3), 1, 5, RankPairStrategy::Adversarial));
  ASSERT_EQ(rep.records.size(), 1u);
  EXPECT_EQ(rep.records[0].ratio, 1.0);
  EXPECT_EQ(rep.records[0].length, 0.0);
}

TEST(RunTrials, SerialEqualsParallel) {
  TrialConfig c = config(VarietyDescriptor(4, 5, 4), 60, 9, RankPairStrategy::TopStratumOnly);
  TrialReport a = run_trials(c, 1);
  TrialReport b = run_trials(c, 4);
  TrialReport again = run_trials(c, 3);
  EXPECT_EQ(a, b);
  EXPECT_EQ(to_json(a).dump(), to_json(again).dump());
}

TEST(Adversarial, StreamCyclesThroughKinds) {
  const VarietyDescriptor d(4, 4, 4);
  AdversarialStream s = adversarial_pairs(d, 3);
  for (int k = 0; k < 2 * kAdversarialKinds; ++k) {
    const AdversarialKind kind = s.next_kind();
    EXPECT_EQ(static_cast<int>(kind), k % kAdversarialKinds);
    auto [p, q] = s.next();
    EXPECT_TRUE(is_member(p, d));
    EXPECT_TRUE(is_member(q, d));
    BuiltPath b = build_path(p, q, d);
    EXPECT_TRUE(b.certificate.holds()) << to_string(kind);
    EXPECT_LE(b.certificate.max_relative_residual, 1e-8) << to_string(kind);
    const double cosine = std::abs(frobenius_inner(p, q)) / (p.frobenius_norm() * q.frobenius_norm());
    switch (kind) {
      case AdversarialKind::Coincident: EXPECT_EQ(b.certificate.ratio, 1.0); break;
      case AdversarialKind::NearCoincident:
        EXPECT_LT(b.certificate.outer_distance, 1e-5);
        EXPECT_GT(b.certificate.outer_distance, 0.0);
        break;
      case AdversarialKind::NearOrthogonal:
        EXPECT_LE(cosine, 1e-8);
        EXPECT_EQ(b.certificate.branch_trace.front().kind, BranchKind::Orthogonal);
        break;
      case AdversarialKind::Scaled: EXPECT_NEAR(b.certificate.ratio, 1.0, 1e-9); break;
      case AdversarialKind::CrossStrata: EXPECT_NE(numerical_rank(p), numerical_rank(q)); break;
      case AdversarialKind::TinyInner:
        EXPECT_GT(cosine, 1e-8);
        EXPECT_LT(cosine, 1e-7);
        EXPECT_EQ(b.certificate.branch_trace.front().kind, BranchKind::General);
        EXPECT_LE(b.certificate.ratio, 2.0 * std::min(numerical_rank(p), numerical_rank(q)) + 1e-9);
        break;
    }
  }
}

TEST(Adversarial, RealFieldRunsAreHonest) {
  TrialReport rep =
      run_trials(config(VarietyDescriptor(4, 4, 4, ScalarField::Real), 240, 17, RankPairStrategy::Adversarial));
  EXPECT_EQ(rep.bound_violations, 0);
  EXPECT_EQ(rep.failures, 0);
  for (const auto& r : rep.records) EXPECT_TRUE(r.fallback() || r.ratio <= r.certified_bound + 1e-9);
}

TEST(Report, JsonRoundTrip) {
  TrialReport rep = run_trials(config(VarietyDescriptor(3, 3, 3, ScalarField::Real), 40, 1, RankPairStrategy::AllStrataGrid));
  const std::string path = temp_path("rt.json");
  emit_report(rep, ReportFormat::JSON, path);
  TrialReport back = load_report(path);
  EXPECT_EQ(back, rep);
  const std::string text = slurp(path);
  EXPECT_EQ(text.back(), '\n');
  std::remove(path.c_str());
}

TEST(Report, CsvShape) {
  TrialReport rep = run_trials(config(VarietyDescriptor(3, 3, 2), 25, 2, RankPairStrategy::AllStrataGrid));
  const std::string path = temp_path("rows.csv");
  emit_report(rep, ReportFormat::CSV, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "seed,rank_p,rank_q,outer,length,ratio,certified_bound,branches,max_residual");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 8);
  }
  EXPECT_EQ(rows, 25);
  std::remove(path.c_str());
}

TEST(Report, EmptyRecordList) {
  TrialReport rep;
  rep.config = config(VarietyDescriptor(2, 2, 2), 1, 0, RankPairStrategy::AllStrataGrid);
  EXPECT_EQ(report_csv(rep), "seed,rank_p,rank_q,outer,length,ratio,certified_bound,branches,max_residual\n");
  Json j = to_json(rep);
  EXPECT_TRUE(j["records"].is_array());
  EXPECT_TRUE(j["records"].empty());
}

TEST(Report, UnwritablePathNamesThePath) {
  TrialReport rep;
  try {
    emit_report(rep, ReportFormat::CSV, "/nonexistent-dir/out.csv");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/out.csv"), std::string::npos);
  }
}

TEST(Io, MatrixJsonRoundTrip) {
  std::mt19937_64 rng(6);
  for (auto f : {ScalarField::Real, ScalarField::Complex}) {
    Matrix a(gaussian_matrix(2, 3, f, rng), f);
    Json j = to_json(a);
    EXPECT_EQ(j["field"], to_string(f));
    EXPECT_EQ(j["entries"].size(), 6u);
    EXPECT_EQ(matrix_from_json(Json::parse(j.dump())), a);
  }
  EXPECT_THROW(matrix_from_json(Json::parse(R"({"m":2,"n":2,"field":"real","entries":[1,2,3]})")),
               std::invalid_argument);
  EXPECT_THROW(matrix_from_json(Json::parse(R"({"m":1,"n":1,"field":"real","entries":[[0,1]]})")), DimensionError);
}

TEST(Io, PathJsonShape) {
  const VarietyDescriptor d(2, 2, 2, ScalarField::Real);
  BuiltPath b = build_path(Matrix::real({{1, 1}, {0, 0}}), Matrix::real({{1, 0}, {1, 0}}), d);
  Json j = path_to_json(d, b);
  EXPECT_EQ(descriptor_from_json(j["descriptor"]), d);
  EXPECT_EQ(j["breakpoints"].size(), 3u);
  EXPECT_EQ(j["certificate"]["branch_trace"][0]["kind"], "General");
  EXPECT_EQ(j["certificate"]["branch_trace"][0]["depth"], 0);
  PathCertificate c = certificate_from_json(j["certificate"]);
  EXPECT_EQ(c.ratio, b.certificate.ratio);
  EXPECT_EQ(c.branch_trace, b.certificate.branch_trace);
}
