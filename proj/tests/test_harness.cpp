// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mmwnoma/harness.hpp"

namespace fs = std::filesystem;
using namespace mmwnoma;
using namespace mmwnoma::harness;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mmwnoma_harness_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig tiny(const fs::path& out) {
  ExperimentConfig c;
  c.seed = 11;
  c.env.steering.n_antennas = 2;
  c.env.steps_per_episode = 10;
  c.agent.episodes = 10;
  c.agent.arch.hidden_width = 16;
  c.agent.batch_size = 16;
  c.agent.buffer_capacity = 1000;
  c.eval_draws = 200;
  c.oracle_grid = 11;
  c.out_dir = out;
  c.finalize();
  return c;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string without_last_column(const fs::path& p) {
  std::string out;
  for (const auto& row : read_csv(p)) {
    for (std::size_t i = 0; i + 1 < row.size(); ++i) out += row[i] + ",";
    out += "\n";
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, DefaultsFollowThePublishedSetup) {
  const ExperimentConfig c;
  EXPECT_DOUBLE_EQ(c.agent.gamma, 0.99);
  EXPECT_DOUBLE_EQ(c.agent.actor_lr, 1e-4);
  EXPECT_DOUBLE_EQ(c.agent.critic_lr, 5e-4);
  EXPECT_EQ(c.env.steps_per_episode, 250u);
  EXPECT_EQ(c.agent.score_window, 250u);
  EXPECT_EQ(c.agent.episodes, 1000u);
  EXPECT_EQ(c.env.steering.n_antennas, 16u);
  EXPECT_DOUBLE_EQ(c.snr_db, 30.0);
  EXPECT_DOUBLE_EQ(c.min_rate1, 1.0);
  EXPECT_DOUBLE_EQ(c.env.budget.total_power, 1000.0);
  EXPECT_DOUBLE_EQ(c.env.budget.noise_variance, 1.0);
}

TEST(Config, ParsesDottedKeysCommentsAndLists) {
  const auto c = parse_config(
      "# comment\n"
      "run.mode = sweep-snr\n"
      "run.seed = 42   # trailing\n"
      "\n"
      "link.snr_db = 20\n"
      "link.min_rate = 0.5\n"
      "channel.n_antennas = 4\n"
      "channel.angle_min_deg = 30\n"
      "channel.angle_max_deg = 150\n"
      "agent.actor_output = identity\n"
      "noise.kind = ou\n"
      "sweep.snr_db = -10, 0, 10.5\n");
  EXPECT_EQ(c.mode, Mode::sweep_snr);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_DOUBLE_EQ(c.snr_db, 20.0);
  EXPECT_DOUBLE_EQ(c.min_rate1, 0.5);
  EXPECT_DOUBLE_EQ(c.min_rate2, 0.5);
  EXPECT_EQ(c.env.steering.n_antennas, 4u);
  const auto& a = std::get<UniformAngles>(c.env.spec.angles);
  EXPECT_NEAR(a.lo, std::numbers::pi / 6.0, 1e-15);
  EXPECT_NEAR(a.hi, 5.0 * std::numbers::pi / 6.0, 1e-15);
  EXPECT_EQ(c.agent.arch.actor_output, nn::Activation::identity);
  EXPECT_EQ(c.agent.noise.kind, ddpg::NoiseKind::ornstein_uhlenbeck);
  EXPECT_EQ(c.sweep_snr_db, (std::vector<double>{-10.0, 0.0, 10.5}));
}

TEST(Config, FixedLawsRoundTrip) {
  auto c = parse_config(
      "channel.n_paths = 2\n"
      "channel.gain_values = 1:0, 0.25:-0.5\n"
      "channel.angle_values_deg = 45, 120\n");
  c.finalize();
  const auto& g = std::get<FixedGains>(c.env.spec.gains);
  ASSERT_EQ(g.values.size(), 2u);
  EXPECT_EQ(g.values[1], Complex(0.25, -0.5));
  const auto again = parse_config(dump_config(c));
  EXPECT_EQ(dump_config(again), dump_config(c));
}

TEST(Config, DumpParsesBackToTheSameConfig) {
  ExperimentConfig c;
  c.seed = 987654321987ull;
  c.snr_db = 17.25;
  c.agent.tau = 0.0123;
  c.sweep_min_rate = {0.0, 0.75};
  c.checkpoint = "some/where.ckpt";
  c.fixed_channel = true;
  c.finalize();
  const auto back = parse_config(dump_config(c));
  EXPECT_EQ(dump_config(back), dump_config(c));
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(*back.checkpoint, *c.checkpoint);
}

TEST(Config, RejectsUnknownKeysAndBadValuesWithLineNumbers) {
  try {
    parse_config("run.seed = 1\nagent.gama = 0.9\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("agent.gama"), std::string::npos);
  }
  EXPECT_THROW(parse_config("agent.gamma = abc\n"), ConfigError);
  EXPECT_THROW(parse_config("agent.gamma\n"), ConfigError);
  EXPECT_THROW(parse_config("run.mode = dance\n"), ConfigError);
  EXPECT_THROW(parse_config("eval.oracle = maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("run.seed = -3\n"), ConfigError);
}

TEST(Config, FinalizeValidatesNestedConfigs) {
  ExperimentConfig c;
  c.agent.gamma = 1.5;
  EXPECT_THROW(c.finalize(), ConfigError);
  ExperimentConfig d;
  d.env.steering.n_antennas = 0;
  EXPECT_THROW(d.finalize(), ConfigError);
  ExperimentConfig e;
  e.snr_db = 10.0;
  e.finalize();
  EXPECT_DOUBLE_EQ(e.env.budget.total_power, 10.0);
}

TEST(Config, ModeNames) {
  for (Mode m : {Mode::train, Mode::eval, Mode::sweep_snr, Mode::sweep_minrate, Mode::baseline,
                 Mode::oracle_check})
    EXPECT_EQ(mode_from_string(to_string(m)), m);
  EXPECT_EQ(mode_from_string("oracle_check"), Mode::oracle_check);
}

TEST(Train, TinyRunWritesOneRowPerStep) {
  const auto out = scratch("tiny");
  const auto o = run_train(tiny(out));
  const auto rows = read_csv(o.metrics_csv);
  ASSERT_EQ(rows.size(), 101u);
  EXPECT_EQ(slurp(o.metrics_csv).substr(0, std::string(kMetricsHeader).size()), kMetricsHeader);
  std::size_t prev = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 9u);
    EXPECT_EQ(rows[i][0], "train-seed11");
    const std::size_t key = std::stoul(rows[i][1]) * 1000 + std::stoul(rows[i][2]);
    if (i > 1) EXPECT_GT(key, prev);
    prev = key;
    const double reward = std::stod(rows[i][3]);
    const int alpha = std::stoi(rows[i][7]);
    EXPECT_TRUE(alpha == 0 || alpha == 1);
    if (alpha == 1) EXPECT_EQ(reward, 0.0);
  }
  EXPECT_EQ(read_csv(o.episodes_csv).size(), 11u);
  EXPECT_TRUE(fs::exists(o.final_checkpoint));
  EXPECT_TRUE(fs::exists(o.best_checkpoint));
  EXPECT_TRUE(fs::exists(out / "config.txt"));
  EXPECT_GE(o.best_score, o.final_score);
  const auto actor = load_actor(o.final_checkpoint);
  EXPECT_EQ(actor.in_width(), state_width(2));
}

TEST(Train, SameSeedGivesIdenticalMetricsApartFromTimestamps) {
  const auto a = run_train(tiny(scratch("det_a")));
  const auto b = run_train(tiny(scratch("det_b")));
  EXPECT_EQ(without_last_column(a.metrics_csv), without_last_column(b.metrics_csv));
  EXPECT_EQ(slurp(a.episodes_csv), slurp(b.episodes_csv));
  EXPECT_EQ(slurp(a.final_checkpoint), slurp(b.final_checkpoint));

  auto other = tiny(scratch("det_c"));
  other.seed = 12;
  const auto c = run_train(other);
  EXPECT_NE(without_last_column(a.metrics_csv), without_last_column(c.metrics_csv));
}

TEST(Train, UnwritableOutputPathIsAnError) {
  const auto blocker = scratch("blocker");
  { std::ofstream(blocker) << "x"; }
  auto c = tiny(blocker / "sub");
  EXPECT_THROW(run_train(c), std::runtime_error);
  fs::remove(blocker);
}

TEST(Train, FixedChannelModeReusesOneRealization) {
  auto c = tiny(scratch("fixed"));
  c.fixed_channel = true;
  c.fixed_channel_seed = 5;
  const auto ec = make_episode_config(c);
  ASSERT_TRUE(ec.fixed_channels.has_value());
  const auto draws = evaluation_draws(c);
  ASSERT_EQ(draws.size(), c.eval_draws);
  EXPECT_TRUE(draws.front().h1.isApprox(draws.back().h1, 0.0));
  EXPECT_TRUE(draws.front().h1.isApprox(ec.fixed_channels->h1, 0.0));
}

TEST(Eval, DrawsArePairedAndSeeded) {
  const auto c = tiny(scratch("draws"));
  const auto a = evaluation_draws(c);
  const auto b = evaluation_draws(c);
  ASSERT_EQ(a.size(), 200u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a[i].h1.isApprox(b[i].h1, 0.0));
    EXPECT_LE(a[i].h1.norm(), a[i].h2.norm());
  }
  auto d = c;
  d.snr_db = -20.0;
  d.finalize();
  EXPECT_TRUE(evaluation_draws(d)[7].h2.isApprox(a[7].h2, 0.0));
}

TEST(Eval, MissingCheckpointWithTrainingDisabledIsAnError) {
  auto c = tiny(scratch("missing"));
  c.allow_train = false;
  EXPECT_THROW(run_eval(c), std::runtime_error);
  EXPECT_THROW(run_sweep_snr(c), std::runtime_error);
}

TEST(Eval, TrainsWhenCheckpointIsAbsentThenReusesIt) {
  const auto out = scratch("eval_train");
  auto c = tiny(out);
  const auto path = run_eval(c);
  EXPECT_TRUE(fs::exists(out / "final.ckpt"));
  const auto rows = read_csv(path);
  ASSERT_GE(rows.size(), 5u);
  EXPECT_EQ(rows[1][0], "ddpg");
  const std::string first = slurp(path);
  c.allow_train = false;
  run_eval(c);
  EXPECT_EQ(slurp(path), first);
}

TEST(Sweep, SnrTableHasPositiveTdmaAndVanishingRewardAtLowSnr) {
  auto c = tiny(scratch("sweep_snr"));
  c.sweep_snr_db = {-50.0, 20.0};
  const auto rows = read_csv(run_sweep_snr(c));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].size(), 9u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 9u);
    EXPECT_GT(std::stod(rows[i][5]), 0.0);  // tdma
    EXPECT_FALSE(rows[i][7].empty());      // oracle, N = 2
    EXPECT_FALSE(rows[i][8].empty());      // train score
  }
  EXPECT_NEAR(std::stod(rows[1][3]), 0.0, 1e-12);
}

TEST(Sweep, OracleColumnIsEmptyAboveFourAntennas) {
  auto c = tiny(scratch("sweep_big"));
  c.env.steering.n_antennas = 5;
  c.sweep_snr_db = {10.0};
  c.eval_draws = 20;
  c.finalize();
  const auto rows = read_csv(run_sweep_snr(c));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[1][7].empty());
}

TEST(Sweep, MinRateFloorsWithASharedPolicy) {
  const auto out = scratch("sweep_r");
  auto c = tiny(out);
  c.snr_db = 10.0;
  c.checkpoint = out / "shared" / "final.ckpt";
  c.sweep_min_rate = {0.0, 0.5, 1.0, 2.0, 4.0};
  c.finalize();
  const auto rows = read_csv(run_sweep_minrate(c));
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_DOUBLE_EQ(std::stod(rows[1][0]), 10.0);
  // r = 0: every draw is feasible, so the reward is the sum-rate.
  EXPECT_EQ(std::stod(rows[1][4]), 0.0);
  EXPECT_NEAR(std::stod(rows[1][2]), std::stod(rows[1][3]), 1e-12);
  for (std::size_t i = 2; i < rows.size(); ++i) {
    EXPECT_GE(std::stod(rows[i][4]), std::stod(rows[i - 1][4]));
    EXPECT_EQ(rows[i][2], rows[1][2]);  // sum-rate does not depend on the floors
  }
}

TEST(Sweep, MinRatePointMatchesTheSnrSweepAtTheSameSetting) {
  const auto out = scratch("sweep_consistent");
  auto c = tiny(out);
  c.snr_db = 30.0;
  c.sweep_snr_db = {30.0};
  c.sweep_min_rate = {1.0};
  c.finalize();
  const auto snr_rows = read_csv(run_sweep_snr(c));
  const auto r_rows = read_csv(run_sweep_minrate(c));
  ASSERT_EQ(snr_rows.size(), 2u);
  ASSERT_EQ(r_rows.size(), 2u);
  EXPECT_EQ(snr_rows[1], r_rows[1]);
}

TEST(OracleCheck, ControlsOrderAndSelfRatio) {
  auto c = tiny(scratch("ocheck"));
  c.snr_db = 10.0;
  c.min_rate1 = c.min_rate2 = 0.5;
  c.finalize();
  const auto draws = evaluation_draws(c);
  const auto r = oracle_ratios(c, draws, nullptr);
  EXPECT_GT(r.draws_used, 100u);
  EXPECT_LT(r.random_ratio, r.matched_filter_ratio);
  EXPECT_NEAR(r.oracle_ratio, 1.0, 1e-9);
  EXPECT_LE(r.matched_filter_ratio, 1.0 + 1e-9);
}

TEST(OracleCheck, RejectsLargeArrays) {
  auto c = tiny(scratch("ocheck_big"));
  c.env.steering.n_antennas = 8;
  c.finalize();
  try {
    run_oracle_check(c);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("N <= 4"), std::string::npos);
  }
}

TEST(Baseline, WritesAllControlMethods) {
  const auto rows = read_csv(run_baseline(tiny(scratch("baseline"))));
  std::vector<std::string> names;
  for (std::size_t i = 1; i < rows.size(); ++i) names.push_back(rows[i][0]);
  EXPECT_EQ(names, (std::vector<std::string>{"tdma", "matched_filter", "random", "oracle"}));
}
