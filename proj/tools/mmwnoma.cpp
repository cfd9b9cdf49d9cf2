// SPDX-License-Identifier: Apache-2.0
//
// mmwnoma: train, evaluate and sweep the two-user mmWave NOMA agent.
#include <fmt/format.h>

#include <CLI11.hpp>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "mmwnoma/harness.hpp"

namespace h = mmwnoma::harness;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checkpoint;
  std::optional<std::size_t> episodes;
  std::vector<double> snr_db;
  std::vector<double> min_rate;
  std::vector<std::string> settings;
  bool no_train = false;
  bool print_config = false;
};

void add_common(CLI::App* sub, Options& o, bool lists) {
  sub->add_option("--config", o.config, "key = value config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--checkpoint", o.checkpoint, "checkpoint path to load or write");
  sub->add_option("--episodes", o.episodes, "training episodes")->check(CLI::PositiveNumber);
  auto* snr = sub->add_option("--snr-db", o.snr_db, "SNR in dB (list for sweep-snr)");
  auto* rate = sub->add_option("--min-rate", o.min_rate, "rate floor r1 = r2 (list for sweep-minrate)");
  snr->delimiter(',');
  rate->delimiter(',');
  if (!lists) {
    snr->expected(1);
    rate->expected(1);
  }
  sub->add_option("--set", o.settings, "extra key=value override, repeatable");
  sub->add_flag("--no-train", o.no_train, "fail instead of training when the checkpoint is missing");
  sub->add_flag("--print-config", o.print_config, "print the effective config and exit");
}

h::ExperimentConfig build_config(h::Mode mode, const Options& o) {
  h::ExperimentConfig cfg;
  if (!o.config.empty()) cfg = h::load_config(o.config, cfg);
  cfg.mode = mode;
  for (const auto& kv : o.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw h::ConfigError(fmt::format("--set expects key=value, got '{}'", kv));
    h::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (!o.checkpoint.empty()) cfg.checkpoint = o.checkpoint;
  if (o.episodes) cfg.agent.episodes = *o.episodes;
  if (o.no_train) cfg.allow_train = false;

  if (mode == h::Mode::sweep_snr) {
    if (!o.snr_db.empty()) cfg.sweep_snr_db = o.snr_db;
    if (!o.min_rate.empty()) cfg.min_rate1 = cfg.min_rate2 = o.min_rate.front();
  } else if (mode == h::Mode::sweep_minrate) {
    if (!o.min_rate.empty()) cfg.sweep_min_rate = o.min_rate;
    if (!o.snr_db.empty()) cfg.snr_db = o.snr_db.front();
  } else {
    if (!o.snr_db.empty()) cfg.snr_db = o.snr_db.front();
    if (!o.min_rate.empty()) cfg.min_rate1 = cfg.min_rate2 = o.min_rate.front();
  }
  cfg.finalize();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-user mmWave NOMA beamforming and power allocation with DDPG"};
  app.require_subcommand(1);

  Options opts;
  const std::vector<std::pair<h::Mode, std::string>> commands = {
      {h::Mode::train, "train an agent, write metrics and checkpoints"},
      {h::Mode::eval, "evaluate a checkpoint against the baselines"},
      {h::Mode::sweep_snr, "compare methods over a list of SNR values"},
      {h::Mode::sweep_minrate, "compare methods over a list of rate floors"},
      {h::Mode::baseline, "evaluate TDMA, matched filter, random and oracle only"},
      {h::Mode::oracle_check, "ratio of each method to the brute-force oracle (N <= 4)"},
  };
  std::vector<std::pair<CLI::App*, h::Mode>> subs;
  for (const auto& [mode, help] : commands) {
    const bool lists = mode == h::Mode::sweep_snr || mode == h::Mode::sweep_minrate;
    CLI::App* sub = app.add_subcommand(h::to_string(mode), help);
    add_common(sub, opts, lists);
    subs.emplace_back(sub, mode);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [sub, mode] : subs) {
      if (!sub->parsed()) continue;
      const h::ExperimentConfig cfg = build_config(mode, opts);
      if (opts.print_config) {
        fmt::print("{}", h::dump_config(cfg));
        return 0;
      }
      if (mode == h::Mode::train) {
        const h::TrainOutcome o = h::run_train(cfg);
        fmt::print("metrics: {}\ncheckpoint: {}\nfirst full-window score: {:.4f}\nfinal score: {:.4f}\n"
                   "best score: {:.4f}\nrandom policy mean reward: {:.4f}\n",
                   o.metrics_csv.string(), o.final_checkpoint.string(), o.first_full_score, o.final_score,
                   o.best_score, o.random_mean_reward);
      } else {
        fmt::print("wrote {}\n", h::run(cfg).string());
      }
      return 0;
    }
  } catch (const h::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 1;
}
