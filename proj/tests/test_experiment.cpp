#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "qport/experiment.hpp"

using namespace qport;
using namespace qport::experiment;

namespace {

SweepConfig small_config() {
  SweepConfig c;
  c.n_assets = 40;
  c.alpha_grid = {1.5, 2.0, 3.0};
  c.samples = 6;
  c.spec = preset("1A");
  c.preset = "1A";
  c.base_seed = 9;
  return c;
}

std::string without_wall_time(SweepResult r) {
  r.metadata.wall_time_seconds = 0.0;
  return dump(r);
}

}  // namespace

TEST(Sweep, IdenticalVariancesNearPrediction) {
  SweepConfig c;
  c.n_assets = 100;
  c.alpha_grid = {3.0};
  c.samples = 20;
  const auto r = run_sweep(c);
  ASSERT_EQ(r.records.size(), 1u);
  const auto& rec = r.records[0];
  EXPECT_EQ(rec.p, 300u);
  EXPECT_EQ(rec.n_converged, 20u);
  EXPECT_NEAR(rec.prediction.epsilon_quenched, 1.0, 1e-15);
  EXPECT_NEAR(rec.eps_mean, 1.0, std::max(3.0 * rec.eps_stderr, 0.02));
  EXPECT_NEAR(rec.qw_mean, 1.5, std::max(3.0 * rec.qw_stderr, 0.03 * 1.5));
}

TEST(Sweep, CaseOneANearPrediction) {
  SweepConfig c;
  c.n_assets = 100;
  c.alpha_grid = {2.0};
  c.samples = 20;
  c.spec = preset("1A");
  const auto rec = run_sweep(c).records.at(0);
  EXPECT_NEAR(rec.eps_mean, 1.0 / 6.0, std::max(3.0 * rec.eps_stderr, 0.02 / 6.0));
  EXPECT_NEAR(rec.qw_mean, 13.0 / 3.0, std::max(3.0 * rec.qw_stderr, 0.03 * 13.0 / 3.0));
}

TEST(Sweep, TwoSamplesGiveFiniteStderr) {
  auto c = small_config();
  c.samples = 2;
  for (const auto& rec : run_sweep(c).records) {
    EXPECT_TRUE(std::isfinite(rec.eps_stderr));
    EXPECT_GT(rec.eps_stderr, 0.0);
    EXPECT_GT(rec.qw_stderr, 0.0);
  }
}

TEST(Sweep, RealizedAlphaIsRoundedRatio) {
  auto c = small_config();
  c.n_assets = 30;
  c.alpha_grid = {1.55};
  const auto rec = run_sweep(c).records.at(0);
  EXPECT_EQ(rec.p, 47u);
  EXPECT_DOUBLE_EQ(rec.alpha, 47.0 / 30.0);
  EXPECT_DOUBLE_EQ(rec.prediction.epsilon_quenched, analytic::quenched_epsilon(47.0 / 30.0, {3.0, 30.0}));
}

TEST(Sweep, ValidatesConfig) {
  auto c = small_config();
  c.samples = 1;
  EXPECT_THROW(run_sweep(c), DomainError);
  c = small_config();
  c.alpha_grid = {0.5, 2.0};
  EXPECT_THROW(run_sweep(c), DomainError);
  c.alpha_grid = {2.0, 1.5};
  EXPECT_THROW(run_sweep(c), DomainError);
  c.alpha_grid = {1.01};  // rounds to p = N at N = 40
  EXPECT_THROW(run_sweep(c), DomainError);
}

TEST(Sweep, DeterministicAcrossThreadCounts) {
  const auto c = small_config();
  RunOptions one;
  one.threads = 1;
  RunOptions many;
  many.threads = 4;
  const auto a = run_sweep(c, one), b = run_sweep(c, many);
  EXPECT_EQ(without_wall_time(a), without_wall_time(b));
  std::ostringstream ca, cb;
  write_csv(ca, a);
  write_csv(cb, b);
  EXPECT_EQ(ca.str(), cb.str());
}

TEST(Sweep, GammaScalesRiskOnly) {
  auto c = small_config();
  const auto base = run_sweep(c);
  c.gamma = 4.0;
  const auto scaled = run_sweep(c);
  for (std::size_t j = 0; j < base.records.size(); ++j) {
    EXPECT_NEAR(scaled.records[j].eps_mean, 4.0 * base.records[j].eps_mean, 1e-10 * scaled.records[j].eps_mean);
    EXPECT_NEAR(scaled.records[j].qw_mean, base.records[j].qw_mean, 1e-9 * base.records[j].qw_mean);
    EXPECT_NEAR(scaled.records[j].prediction.epsilon_quenched, 4.0 * base.records[j].prediction.epsilon_quenched,
                1e-14);
  }
}

TEST(Sweep, MeansIncreaseInRiskAndDecreaseInConcentration) {
  SweepConfig c;
  c.n_assets = 60;
  c.alpha_grid = {1.5, 2.0, 3.0, 5.0};
  c.samples = 10;
  c.spec = preset("2B'");
  const auto r = run_sweep(c);
  for (std::size_t j = 1; j < r.records.size(); ++j) {
    EXPECT_GT(r.records[j].eps_mean, r.records[j - 1].eps_mean);
    EXPECT_LT(r.records[j].qw_mean, r.records[j - 1].qw_mean);
  }
  for (const auto& row : compare(r)) EXPECT_FALSE(row.flag_monotonicity);
}

// Deviation from the infinite-size prediction shrinks as N grows.
TEST(Sweep, FiniteSizeDeviationShrinks) {
  std::vector<double> dev;
  for (std::size_t n : {50, 100, 200, 400}) {
    SweepConfig c;
    c.n_assets = n;
    c.alpha_grid = {2.0};
    c.samples = 16;
    c.spec = preset("1A");
    const auto rec = run_sweep(c).records.at(0);
    dev.push_back(std::abs(rec.qw_mean - rec.prediction.qw_quenched) / rec.prediction.qw_quenched);
  }
  EXPECT_LT(dev.back(), dev.front());
  EXPECT_LT(dev.back(), 0.05);
}

TEST(Compare, QuenchedAgreesAnnealedFlagged) {
  SweepConfig c;
  c.n_assets = 100;
  c.alpha_grid = {1.5, 2.0, 3.0};
  c.samples = 20;
  c.spec = preset("1A");
  const auto rows = compare(run_sweep(c));
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& row : rows) EXPECT_TRUE(row.flag_annealed);
  EXPECT_LT(rows[0].z_eps_annealed, -10.0);
}

TEST(Compare, ZScoreEdgeCases) {
  EXPECT_EQ(z_score(1.0, 0.5, 0.0), 2.0);
  EXPECT_EQ(z_score(1.0, 0.0, 1.0), 0.0);
  EXPECT_TRUE(std::isinf(z_score(1.0, 0.0, 0.0)));
}

TEST(Persistence, RoundTripIsByteIdentical) {
  const auto r = run_sweep(small_config());
  const auto text = dump(r);
  EXPECT_EQ(dump(parse(text)), text);
  const auto path = std::filesystem::temp_directory_path() / "qport_roundtrip.json";
  persist(r, path);
  EXPECT_EQ(dump(load(path)), text);
  std::filesystem::remove(path);
}

TEST(Persistence, CsvHeaderAndRows) {
  const auto r = run_sweep(small_config());
  std::ostringstream out;
  write_csv(out, r);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kCsvHeader);
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(Persistence, MissingFieldIsNamed) {
  auto j = to_json(run_sweep(small_config()));
  j["config"].erase("samples");
  try {
    parse(j.dump(2));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("samples"), std::string::npos) << e.what();
  }
}

TEST(Persistence, SyntaxErrorReportsLine) {
  try {
    parse("{\n  \"config\": {\n    \"n_assets\": ,\n  }\n}\n", "bad.json");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json:3"), std::string::npos) << e.what();
  }
}

TEST(Persistence, LoadMissingFileNamesPath) {
  try {
    load("/nonexistent/sweep.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/sweep.json"), std::string::npos);
  }
}
