// SPDX-License-Identifier: Apache-2.0
//
// Experiment drivers: configuration file handling, training runs with CSV
// metrics and checkpoints, and paired evaluations of the learned policy against
// TDMA, the matched-filter heuristic, a random policy and the brute-force oracle.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmwnoma/ddpg.hpp"
#include "mmwnoma/env.hpp"

namespace mmwnoma::harness {

enum class Mode { train, eval, sweep_snr, sweep_minrate, baseline, oracle_check };

std::string to_string(Mode m);
// Accepts the CLI spelling ("sweep-snr") and the underscore form.
Mode mode_from_string(const std::string& s);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Mode mode = Mode::train;
  std::uint64_t seed = 1;
  std::string run_id;  // empty: derived from mode and seed

  double snr_db = 30.0;
  double min_rate1 = 1.0;
  double min_rate2 = 1.0;

  EpisodeConfig env;
  ddpg::AgentConfig agent;

  // Train on one frozen realization drawn from `fixed_channel_seed`.
  bool fixed_channel = false;
  std::uint64_t fixed_channel_seed = 0;

  std::size_t eval_draws = 1000;
  bool eval_oracle = true;  // only honoured for N <= kOracleMaxAntennas
  std::size_t oracle_grid = 41;

  std::vector<double> sweep_snr_db{0.0, 10.0, 20.0, 30.0};
  std::vector<double> sweep_min_rate{0.0, 0.5, 1.0, 1.5, 2.0};

  std::filesystem::path out_dir = "out";
  std::optional<std::filesystem::path> checkpoint;
  bool allow_train = true;

  ExperimentConfig();

  // Applies snr_db and the rate floors to env.budget and validates everything.
  void finalize();
  void validate() const;
  std::string effective_run_id() const;
};

inline constexpr std::size_t kOracleMaxAntennas = 4;

// Flat "key = value" text, '#' comments, dotted section names.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
// Applies one "key=value" override.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
// Round-trips through parse_config.
std::string dump_config(const ExperimentConfig& cfg);

std::vector<double> parse_number_list(const std::string& s);

// ---- training ----

inline constexpr const char* kMetricsHeader =
    "run_id,episode,step,reward,score,rate1,rate2,alpha,timestamp";
inline constexpr const char* kEpisodeHeader =
    "run_id,episode,mean_reward,score,feasible_fraction";

struct TrainOutcome {
  std::filesystem::path metrics_csv;
  std::filesystem::path episodes_csv;
  std::filesystem::path final_checkpoint;
  std::filesystem::path best_checkpoint;
  double first_full_score = 0.0;  // score once the window first fills
  double final_score = 0.0;
  double best_score = 0.0;
  double random_mean_reward = 0.0;
  ddpg::Networks nets;
};

// Channels the environment is built with; fixed when cfg.fixed_channel is set.
EpisodeConfig make_episode_config(const ExperimentConfig& cfg);

TrainOutcome run_train(const ExperimentConfig& cfg);

// ---- evaluation ----

struct MethodStats {
  double mean_sum_rate = 0.0;
  double mean_reward = 0.0;
  double zero_reward_fraction = 0.0;
  std::size_t draws = 0;
};

struct EvalReport {
  MethodStats ddpg;
  MethodStats tdma;
  MethodStats matched_filter;
  MethodStats random;
  std::optional<MethodStats> oracle;
  std::size_t oracle_infeasible = 0;
};

// Channel realizations shared by every method of one evaluation.
std::vector<ChannelRealization> evaluation_draws(const ExperimentConfig& cfg);

// `actor` may be empty, in which case the ddpg entry stays zero.
EvalReport evaluate(const ExperimentConfig& cfg, const std::vector<ChannelRealization>& draws,
                    const nn::MlpParams* actor);

// Loads the actor from a checkpoint written by run_train.
nn::MlpParams load_actor(const std::filesystem::path& path);

struct PolicySource {
  nn::MlpParams actor;
  std::optional<double> train_score;
  std::filesystem::path checkpoint;
};

// Uses cfg.checkpoint (or `default_path`) when it exists, otherwise trains into
// the directory of that path. Throws std::runtime_error when training is
// disabled and the checkpoint is missing.
PolicySource obtain_policy(const ExperimentConfig& cfg, const std::filesystem::path& default_path);

std::filesystem::path run_eval(const ExperimentConfig& cfg);
std::filesystem::path run_baseline(const ExperimentConfig& cfg);

inline constexpr const char* kSweepHeader =
    "snr_db,min_rate,ddpg_sum_rate,ddpg_reward,ddpg_zero_reward_fraction,tdma_sum_rate,"
    "matched_filter_reward,oracle_sum_rate,train_score";

std::filesystem::path run_sweep_snr(const ExperimentConfig& cfg);
std::filesystem::path run_sweep_minrate(const ExperimentConfig& cfg);

struct OracleCheck {
  double ddpg_ratio = 0.0;
  double tdma_ratio = 0.0;
  double random_ratio = 0.0;
  double matched_filter_ratio = 0.0;
  double oracle_ratio = 0.0;
  std::size_t draws_used = 0;
};

// Mean per-draw ratio of each method's reward to the oracle's sum-rate over the
// draws where the oracle finds a feasible point. `actor` may be null.
OracleCheck oracle_ratios(const ExperimentConfig& cfg, const std::vector<ChannelRealization>& draws,
                          const nn::MlpParams* actor);

std::filesystem::path run_oracle_check(const ExperimentConfig& cfg);

// Dispatches on cfg.mode; returns the main output file.
std::filesystem::path run(const ExperimentConfig& cfg);

}  // namespace mmwnoma::harness
