// SPDX-License-Identifier: Apache-2.0
//
// Deep deterministic policy gradient agent for the NOMA environment.
//
// Per environment step, once the replay buffer holds a full batch:
//   critic: minimize mean (Q(s,a) - y)^2 with y = r + gamma * Q'(s', pi'(s'))
//   actor:  ascend mean Q(s, pi(s)) by chaining dQ/da through the actor
//   targets: theta' <- tau * theta + (1 - tau) * theta'
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mmwnoma/env.hpp"
#include "mmwnoma/neural.hpp"

namespace mmwnoma::ddpg {

using nn::MlpParams;

struct Transition {
  RVector state;
  RVector action;  // raw actor output plus exploration noise, before projection
  double reward = 0.0;
  RVector next_state;
};

// Column i of each matrix is sample i.
struct Batch {
  RMatrix states;
  RMatrix actions;
  RVector rewards;
  RMatrix next_states;

  std::size_t size() const { return static_cast<std::size_t>(rewards.size()); }
};

Batch make_batch(const std::vector<Transition>& transitions);

// Bounded FIFO; once full, each push overwrites the oldest transition.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  // i = 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const;
  // Uniform sampling with replacement. Throws std::logic_error if size() < batch_size.
  Batch sample(std::size_t batch_size, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::vector<Transition> data_;
};

enum class NoiseKind { gaussian, ornstein_uhlenbeck };

struct NoiseConfig {
  NoiseKind kind = NoiseKind::gaussian;
  // Linearly decayed from start to end over the whole run.
  double sigma_start = 0.2;
  double sigma_end = 0.02;
  double ou_theta = 0.15;
};

double noise_sigma(const NoiseConfig& cfg, std::size_t global_step, std::size_t total_steps);

class ExplorationNoise {
 public:
  ExplorationNoise(NoiseConfig cfg, std::size_t dim);

  RVector sample(double sigma, Rng& rng);
  void reset();

 private:
  NoiseConfig cfg_;
  RVector ou_state_;
};

struct AgentConfig {
  double gamma = 0.99;
  double actor_lr = 1e-4;
  double critic_lr = 5e-4;
  double tau = 0.005;
  std::size_t batch_size = 64;
  std::size_t buffer_capacity = 100000;
  NoiseConfig noise;
  std::size_t episodes = 1000;
  std::size_t score_window = 250;
  // Gradient steps taken per environment step once the buffer holds a batch.
  std::size_t updates_per_step = 1;
  // Rewards are multiplied by this before entering the replay buffer.
  double reward_scale = 1.0;
  nn::ArchitectureConfig arch;

  void validate() const;
};

struct Networks {
  MlpParams actor;
  MlpParams critic;
  MlpParams actor_target;
  MlpParams critic_target;
};

Networks init_networks(std::size_t n_antennas, const nn::ArchitectureConfig& arch, Rng& rng);

// Deterministic policy output.
RVector act(const MlpParams& actor, const RVector& state);
// Policy output plus one exploration draw.
RVector act(const MlpParams& actor, const RVector& state, ExplorationNoise& noise, double sigma,
            Rng& rng);

RMatrix critic_input(const RMatrix& states, const RMatrix& actions);

// y_i = r_i + gamma * Q'(s'_i, pi'(s'_i))
RVector critic_target(const MlpParams& critic_target, const MlpParams& actor_target,
                      const Batch& batch, double gamma);

// One Adam step on the mean squared Bellman error; returns the loss before the step.
double update_critic(MlpParams& critic, nn::AdamState& opt, const Batch& batch,
                     const RVector& targets);

// One Adam step on -mean Q(s, pi(s)); returns mean Q before the step.
double update_actor(MlpParams& actor, nn::AdamState& opt, const MlpParams& critic,
                    const Batch& batch);

// Analytic gradient of mean_i Q(s_i, pi(s_i)) with respect to the actor parameters.
nn::ParamGrads actor_objective_gradient(const MlpParams& actor, const MlpParams& critic,
                                        const RMatrix& states, double* mean_q = nullptr);

void soft_update(MlpParams& target, const MlpParams& online, double tau);

struct StepRecord {
  std::size_t episode = 0;
  std::size_t step = 0;
  double reward = 0.0;
  double score = 0.0;  // moving average of the last score_window rewards
  RateReport report;
};

struct EpisodeSummary {
  std::size_t episode = 0;
  double mean_reward = 0.0;
  double score = 0.0;
  double feasible_fraction = 0.0;
};

struct TrainingObserver {
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const EpisodeSummary&, const Networks&)> on_episode;
};

struct TrainResult {
  Networks nets;
  std::vector<double> rewards;  // one per step
  std::vector<double> scores;   // moving average after each step
  std::size_t transitions_stored = 0;
  std::size_t updates = 0;
};

class TrainingDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fully determined by `seed`. Throws TrainingDivergence on a non-finite loss.
TrainResult train(const EpisodeConfig& env_config, const AgentConfig& agent_config,
                  std::uint64_t seed, const TrainingObserver& observer = {});

// Mean reward of i.i.d. standard-normal raw actions on the environment stream
// that `train` would see with the same seed.
double random_policy_mean_reward(const EpisodeConfig& env_config, std::uint64_t seed,
                                 std::size_t steps);

}  // namespace mmwnoma::ddpg
