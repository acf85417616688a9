#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "sase/config.hpp"
#include "sase/harness.hpp"

using namespace sase;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.n_r = 12;
  c.n_t = 24;
  c.m_rf = 4;
  c.n_rf = 4;
  c.true_l = 2;
  c.m = 6;
  c.trials = 8;
  c.snr_db_grid = {0, 10};
  c.m_grid = {4, 8};
  c.l_grid = {1, 2, 3};
  c.mismatch_grid = {1, 2, 3};
  return c;
}

}  // namespace

TEST(Config, DefaultsMatchReferenceSetup) {
  const ExperimentConfig c;
  EXPECT_EQ(c.n_r, 36);
  EXPECT_EQ(c.n_t, 144);
  EXPECT_EQ(resolved_m(c), 20);
  EXPECT_EQ(resolved_assumed_l(c), 4);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, ParseFormatRoundTrip) {
  ExperimentConfig c = small_config();
  c.assumed_l = kAssumedAuto;
  c.seed = 123456789012345ULL;
  c.rank_tol = 3.5e-9;
  c.mode = SaseMode::unconstrained;
  c.geometry = ArrayKind::upa;
  c.n_r = 16;
  c.n_t = 36;
  c.sweep = SweepKind::mismatch;
  c.snr_db_grid = {-7.25, 0.1, 13};
  c.threads = 3;
  EXPECT_EQ(parse_config(format_config(c)), c);
  c.k_target = 164;
  EXPECT_EQ(parse_config(format_config(c)), c);
}

TEST(Config, ParsesCommentsRangesAndSpecialValues) {
  const ExperimentConfig c = parse_config(
      "# header\n"
      "  m_grid = 4:4:16   # range\n"
      "snr_db = inf\n"
      "assumed_l = match\n"
      "sweep = channel-uses\n"
      "\n"
      "l_grid = 1, 3 ,5\n");
  EXPECT_EQ(c.m_grid, (std::vector<Index>{4, 8, 12, 16}));
  EXPECT_TRUE(std::isinf(c.snr_db));
  EXPECT_EQ(c.assumed_l, kAssumedMatchTrue);
  EXPECT_EQ(c.sweep, SweepKind::channel_uses);
  EXPECT_EQ(c.l_grid, (std::vector<Index>{1, 3, 5}));
}

TEST(Config, ParseErrorsNameTheLine) {
  try {
    parse_config("trials = 5\nbogus = 1\n");
    FAIL() << "expected an error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  EXPECT_THROW(parse_config("trials = five"), ConfigError);
  EXPECT_THROW(parse_config("trials"), ConfigError);
  EXPECT_THROW(parse_config("mode = magic"), ConfigError);
  EXPECT_THROW(parse_config("assumed_l = -2"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/sase.conf"), ConfigError);
}

TEST(Config, ChannelUseTargetInversion) {
  ExperimentConfig c;
  for (Index m : {4, 8, 20, 48}) {
    c.k_target = sase_channel_uses(m, 36, 6, 144);
    EXPECT_EQ(resolved_m(c), m);
  }
  c.k_target = 245;
  try {
    resolved_m(c);
    FAIL() << "expected an error";
  } catch (const InvalidParameter& e) {
    EXPECT_NE(std::string(e.what()).find("244 and 249"), std::string::npos) << e.what();
  }
}

TEST(Config, ValidationRejectsBadSetups) {
  auto rejects = [](auto mutate) {
    ExperimentConfig c;
    mutate(c);
    EXPECT_THROW(validate(c), ConfigError);
  };
  rejects([](ExperimentConfig& c) { c.m_rf = 5; });
  rejects([](ExperimentConfig& c) { c.n_rf = 1; });
  rejects([](ExperimentConfig& c) { c.m = 2; });
  rejects([](ExperimentConfig& c) { c.m = 145; });
  rejects([](ExperimentConfig& c) { c.assumed_l = 7; });
  rejects([](ExperimentConfig& c) { c.true_l = 0; });
  rejects([](ExperimentConfig& c) { c.trials = 0; });
  rejects([](ExperimentConfig& c) { c.geometry = ArrayKind::upa; c.n_t = 140; });
  rejects([](ExperimentConfig& c) { c.dict_size = 100; });
  rejects([](ExperimentConfig& c) { c.rank_tol = 0.0; });
  rejects([](ExperimentConfig& c) { c.snr_db = std::nan(""); });
}

TEST(RunTrial, NoiselessUnconstrainedIsExact) {
  ExperimentConfig c;
  c.mode = SaseMode::unconstrained;
  c.snr_db = kInf;
  for (Index t = 0; t < 5; ++t) {
    const AccuracyReport r = run_trial(c, t);
    EXPECT_NEAR(r.eta, 1.0, 1e-9);
    EXPECT_LE(r.nmse, 1e-12);
    EXPECT_EQ(r.channel_uses, 244);
    EXPECT_EQ(r.col_bound, 1.0);
    EXPECT_EQ(r.row_bound, 1.0);
    EXPECT_TRUE(std::isinf(r.rate));
  }
}

TEST(RunTrial, DeterministicPerTrialIndex) {
  ExperimentConfig c;
  c.snr_db = 0.0;
  EXPECT_EQ(run_trial(c, 3), run_trial(c, 3));
  EXPECT_FALSE(run_trial(c, 3) == run_trial(c, 4));
  // Changing the noise level leaves the channel untouched.
  ExperimentConfig d = c;
  d.snr_db = 20.0;
  EXPECT_TRUE(draw_channel(c, 3).matrix == draw_channel(d, 3).matrix);
}

TEST(RunTrial, ReportInvariants) {
  ExperimentConfig c;
  c.snr_db = 5.0;
  for (Index t = 0; t < 20; ++t) {
    const AccuracyReport r = run_trial(c, t);
    EXPECT_LE(r.eta, std::min(r.eta_c, r.eta_r) + 1e-9);
    for (double x : {r.eta, r.eta_c, r.eta_r, r.col_bound, r.row_bound, r.joint_bound}) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0 + 1e-9);
    }
    EXPECT_GE(r.rate, 0.0);
    EXPECT_GE(r.gamma, 0.0);
    EXPECT_GE(r.nmse, 0.0);
    EXPECT_GE(r.rate_perfect_csi + 1e-9, r.rate);
  }
}

TEST(RunTrial, ErrorsCarryTheTrialIndex) {
  TrialContext ctx = prepare(small_config());
  ctx.m = 0;  // bypasses validation; stage one rejects it
  try {
    run_trial(ctx, 7);
    FAIL() << "expected an error";
  } catch (const InvalidParameter& e) {
    EXPECT_EQ(std::string(e.what()).rfind("trial 7: ", 0), 0u) << e.what();
  }
}

TEST(ParallelFor, ThreadCountDoesNotChangeResults) {
  ExperimentConfig c = small_config();
  c.trials = 12;
  const auto one = run_trials(c);
  c.threads = 3;
  EXPECT_EQ(run_trials(c), one);
}

TEST(ParallelFor, LowestFailingIndexWins) {
  for (unsigned threads : {1u, 4u}) {
    try {
      parallel_for(40, threads, [](Index i) {
        if (i % 7 == 5) throw InvalidParameter("index " + std::to_string(i));
      });
      FAIL();
    } catch (const InvalidParameter& e) {
      EXPECT_STREQ(e.what(), "index 5");
    }
  }
}

TEST(Summarize, MeanAndStandardError) {
  const Stat s = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.se, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_EQ(summarize({}).mean, 0.0);
  EXPECT_EQ(summarize({7.0}).se, 0.0);
}

TEST(Sweep, GridShapes) {
  ExperimentConfig c;
  c.sweep = SweepKind::channel_uses;
  std::vector<double> ks;
  for (const auto& [x, p] : sweep_points(c)) ks.push_back(x);
  ASSERT_EQ(ks.size(), 12u);
  for (std::size_t i = 0; i < ks.size(); ++i) EXPECT_EQ(ks[i], 164.0 + 20.0 * static_cast<double>(i));

  c.sweep = SweepKind::mismatch;
  const auto pts = sweep_points(c);
  ASSERT_EQ(pts.size(), 4u);
  EXPECT_EQ(pts.front().second.assumed_l, 3);
  EXPECT_EQ(pts.back().second.assumed_l, 6);
  EXPECT_EQ(pts.back().second.true_l, 4);
}

TEST(Sweep, RunsEveryKind) {
  ExperimentConfig c = small_config();
  for (SweepKind k : {SweepKind::snr, SweepKind::channel_uses, SweepKind::paths, SweepKind::mismatch}) {
    c.sweep = k;
    const SweepResult res = run_sweep(c);
    EXPECT_EQ(res.grid_size(), static_cast<Index>(sweep_points(c).size())) << to_string(k);
    for (const auto& row : res.rows) EXPECT_EQ(row.trials, c.trials);
  }
}

TEST(Sweep, InvalidGridPointAbortsBeforeRunning) {
  ExperimentConfig c = small_config();
  c.sweep = SweepKind::paths;
  c.l_grid = {1, 9};
  try {
    run_sweep(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("paths grid point 9"), std::string::npos) << e.what();
  }
}

TEST(Sweep, RankCheckIsConstant) {
  ExperimentConfig c;
  c.sweep = SweepKind::rank_check;
  c.m_grid = {4, 8, 20, 40};
  c.trials = 20;
  const SweepResult res = run_sweep(c);
  ASSERT_EQ(res.rank_rows.size(), 4u);
  for (const auto& row : res.rank_rows) {
    EXPECT_EQ(row.rank_min, 4);
    EXPECT_EQ(row.rank_max, 4);
    EXPECT_EQ(row.trials, 20);
  }
}

TEST(Sweep, MismatchUsesRequestedWidth) {
  ExperimentConfig c;
  c.trials = 5;
  c.assumed_l = 6;
  for (Index t = 0; t < 5; ++t) {
    const AccuracyReport r = run_trial(c, t);
    EXPECT_EQ(r.paths_used, 6);
    EXPECT_GE(r.row_bound, 0.0);
  }
  c.assumed_l = 3;
  const AccuracyReport r = run_trial(c, 0);
  EXPECT_EQ(r.paths_used, 3);
  EXPECT_EQ(r.row_bound, 0.0);
}
