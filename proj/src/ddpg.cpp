// SPDX-License-Identifier: Apache-2.0
#include "mmwnoma/ddpg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>
#include <utility>

namespace mmwnoma::ddpg {

namespace {

struct RunSeeds {
  std::uint64_t env;
  std::uint64_t init;
  std::uint64_t explore;
};

RunSeeds derive_seeds(std::uint64_t seed) {
  Rng master(seed);
  RunSeeds s{};
  s.env = master();
  s.init = master();
  s.explore = master();
  return s;
}

}  // namespace

Batch make_batch(const std::vector<Transition>& transitions) {
  if (transitions.empty()) throw std::invalid_argument("make_batch: empty batch");
  const auto b = static_cast<Eigen::Index>(transitions.size());
  const auto sw = transitions.front().state.size();
  const auto aw = transitions.front().action.size();
  Batch out;
  out.states.resize(sw, b);
  out.actions.resize(aw, b);
  out.rewards.resize(b);
  out.next_states.resize(sw, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& t = transitions[static_cast<std::size_t>(i)];
    if (t.state.size() != sw || t.next_state.size() != sw || t.action.size() != aw)
      throw std::invalid_argument("make_batch: inconsistent transition widths");
    out.states.col(i) = t.state;
    out.actions.col(i) = t.action;
    out.rewards[i] = t.reward;
    out.next_states.col(i) = t.next_state;
  }
  return out;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer: capacity must be >= 1");
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
    return;
  }
  data_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw std::out_of_range("replay buffer: index out of range");
  return data_[(head_ + i) % data_.size()];
}

Batch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (batch_size == 0 || data_.size() < batch_size)
    throw std::logic_error("replay buffer: not enough transitions to sample a batch");
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  const auto& first = data_.front();
  const auto b = static_cast<Eigen::Index>(batch_size);
  Batch out;
  out.states.resize(first.state.size(), b);
  out.actions.resize(first.action.size(), b);
  out.rewards.resize(b);
  out.next_states.resize(first.state.size(), b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& t = data_[pick(rng)];
    out.states.col(i) = t.state;
    out.actions.col(i) = t.action;
    out.rewards[i] = t.reward;
    out.next_states.col(i) = t.next_state;
  }
  return out;
}

double noise_sigma(const NoiseConfig& cfg, std::size_t global_step, std::size_t total_steps) {
  if (total_steps <= 1) return cfg.sigma_start;
  const double frac = std::min(1.0, static_cast<double>(global_step) /
                                        static_cast<double>(total_steps - 1));
  return cfg.sigma_start + (cfg.sigma_end - cfg.sigma_start) * frac;
}

ExplorationNoise::ExplorationNoise(NoiseConfig cfg, std::size_t dim)
    : cfg_(cfg), ou_state_(RVector::Zero(static_cast<Eigen::Index>(dim))) {}

RVector ExplorationNoise::sample(double sigma, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RVector draw(ou_state_.size());
  for (Eigen::Index i = 0; i < draw.size(); ++i) draw[i] = normal(rng);
  if (cfg_.kind == NoiseKind::gaussian) return sigma * draw;
  ou_state_ += -cfg_.ou_theta * ou_state_ + sigma * draw;
  return ou_state_;
}

void ExplorationNoise::reset() { ou_state_.setZero(); }

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("agent: gamma must lie in [0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("agent: tau must lie in (0, 1]");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0))
    throw std::invalid_argument("agent: learning rates must be positive");
  if (batch_size == 0) throw std::invalid_argument("agent: batch_size must be >= 1");
  if (buffer_capacity < batch_size)
    throw std::invalid_argument("agent: buffer_capacity must be >= batch_size");
  if (score_window == 0) throw std::invalid_argument("agent: score_window must be >= 1");
  if (updates_per_step == 0) throw std::invalid_argument("agent: updates_per_step must be >= 1");
  if (!(reward_scale > 0.0) || !std::isfinite(reward_scale))
    throw std::invalid_argument("agent: reward_scale must be positive");
  if (arch.hidden_width == 0) throw std::invalid_argument("agent: hidden_width must be >= 1");
  if (!(noise.sigma_start >= 0.0) || !(noise.sigma_end >= 0.0))
    throw std::invalid_argument("agent: noise sigmas must be >= 0");
}

Networks init_networks(std::size_t n_antennas, const nn::ArchitectureConfig& arch, Rng& rng) {
  Networks n;
  n.actor = nn::build_actor(n_antennas, rng, arch);
  n.critic = nn::build_critic(n_antennas, rng, arch);
  n.actor_target = n.actor;
  n.critic_target = n.critic;
  return n;
}

RVector act(const MlpParams& actor, const RVector& state) { return nn::forward(actor, state); }

RVector act(const MlpParams& actor, const RVector& state, ExplorationNoise& noise, double sigma,
            Rng& rng) {
  return nn::forward(actor, state) + noise.sample(sigma, rng);
}

RMatrix critic_input(const RMatrix& states, const RMatrix& actions) {
  if (states.cols() != actions.cols())
    throw std::invalid_argument("critic_input: state and action batch sizes differ");
  RMatrix x(states.rows() + actions.rows(), states.cols());
  x.topRows(states.rows()) = states;
  x.bottomRows(actions.rows()) = actions;
  return x;
}

RVector critic_target(const MlpParams& critic_target, const MlpParams& actor_target,
                      const Batch& batch, double gamma) {
  if (batch.size() == 0) throw std::invalid_argument("critic_target: empty batch");
  const RMatrix next_actions = nn::forward(actor_target, batch.next_states);
  const RMatrix q_next = nn::forward(critic_target, critic_input(batch.next_states, next_actions));
  return batch.rewards + gamma * q_next.row(0).transpose();
}

double update_critic(MlpParams& critic, nn::AdamState& opt, const Batch& batch,
                     const RVector& targets) {
  if (targets.size() != batch.rewards.size())
    throw std::invalid_argument("update_critic: target count does not match batch");
  nn::ForwardCache cache;
  const RMatrix q = nn::forward(critic, critic_input(batch.states, batch.actions), &cache);
  const RVector residual = q.row(0).transpose() - targets;
  const double b = static_cast<double>(batch.size());
  const double loss = residual.squaredNorm() / b;
  const RMatrix dq = (2.0 / b) * residual.transpose();
  const auto back = nn::backward(critic, cache, dq);
  nn::adam_step(critic, back.grads, opt);
  return loss;
}

nn::ParamGrads actor_objective_gradient(const MlpParams& actor, const MlpParams& critic,
                                        const RMatrix& states, double* mean_q) {
  nn::ForwardCache actor_cache;
  const RMatrix actions = nn::forward(actor, states, &actor_cache);
  nn::ForwardCache critic_cache;
  const RMatrix q = nn::forward(critic, critic_input(states, actions), &critic_cache);
  const double b = static_cast<double>(states.cols());
  if (mean_q) *mean_q = q.sum() / b;

  const RMatrix dq = RMatrix::Constant(1, states.cols(), 1.0 / b);
  const auto critic_back = nn::backward(critic, critic_cache, dq);
  const RMatrix da = critic_back.input_grad.bottomRows(actions.rows());
  return nn::backward(actor, actor_cache, da).grads;
}

double update_actor(MlpParams& actor, nn::AdamState& opt, const MlpParams& critic,
                    const Batch& batch) {
  double mean_q = 0.0;
  nn::ParamGrads g = actor_objective_gradient(actor, critic, batch.states, &mean_q);
  // Ascent on mean Q is descent on its negation.
  for (auto& w : g.weight) w = -w;
  for (auto& v : g.bias) v = -v;
  nn::adam_step(actor, g, opt);
  return mean_q;
}

void soft_update(MlpParams& target, const MlpParams& online, double tau) {
  if (target.layers.size() != online.layers.size())
    throw std::invalid_argument("soft_update: layer count mismatch");
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    auto& t = target.layers[i];
    const auto& o = online.layers[i];
    if (t.weight.rows() != o.weight.rows() || t.weight.cols() != o.weight.cols() ||
        t.bias.size() != o.bias.size())
      throw std::invalid_argument("soft_update: shape mismatch at layer " + std::to_string(i));
    t.weight = tau * o.weight + (1.0 - tau) * t.weight;
    t.bias = tau * o.bias + (1.0 - tau) * t.bias;
  }
}

TrainResult train(const EpisodeConfig& env_config, const AgentConfig& agent_config,
                  std::uint64_t seed, const TrainingObserver& observer) {
  env_config.validate();
  agent_config.validate();
  const RunSeeds seeds = derive_seeds(seed);
  const std::size_t n = env_config.steering.n_antennas;

  Environment env(env_config, seeds.env);
  Rng init_rng(seeds.init);
  Rng explore_rng(seeds.explore);

  TrainResult out;
  out.nets = init_networks(n, agent_config.arch, init_rng);
  auto actor_opt = nn::AdamState::for_params(out.nets.actor, agent_config.actor_lr);
  auto critic_opt = nn::AdamState::for_params(out.nets.critic, agent_config.critic_lr);
  ReplayBuffer buffer(agent_config.buffer_capacity);
  ExplorationNoise noise(agent_config.noise, action_width(n));

  const std::size_t steps = env_config.steps_per_episode;
  const std::size_t total = agent_config.episodes * steps;
  out.rewards.reserve(total);
  out.scores.reserve(total);

  std::deque<double> window;
  std::size_t global = 0;

  for (std::size_t ep = 0; ep < agent_config.episodes; ++ep) {
    RVector state = env.reset();
    noise.reset();
    double episode_sum = 0.0;
    std::size_t feasible = 0;

    for (std::size_t t = 0; t < steps; ++t, ++global) {
      const double sigma = noise_sigma(agent_config.noise, global, total);
      RVector action = act(out.nets.actor, state, noise, sigma, explore_rng);
      StepResult sr = env.step(action);
      buffer.push({state, std::move(action), agent_config.reward_scale * sr.reward, sr.next_state});

      for (std::size_t u = 0;
           u < agent_config.updates_per_step && buffer.size() >= agent_config.batch_size; ++u) {
        const Batch batch = buffer.sample(agent_config.batch_size, explore_rng);
        const RVector y = critic_target(out.nets.critic_target, out.nets.actor_target, batch,
                                        agent_config.gamma);
        const double loss = update_critic(out.nets.critic, critic_opt, batch, y);
        const double objective = update_actor(out.nets.actor, actor_opt, out.nets.critic, batch);
        if (!std::isfinite(loss) || !std::isfinite(objective))
          throw TrainingDivergence("training diverged at episode " + std::to_string(ep) +
                                   ", step " + std::to_string(t));
        soft_update(out.nets.critic_target, out.nets.critic, agent_config.tau);
        soft_update(out.nets.actor_target, out.nets.actor, agent_config.tau);
        ++out.updates;
      }

      window.push_back(sr.reward);
      if (window.size() > agent_config.score_window) window.pop_front();
      // Summed afresh each step so the score carries no running-sum drift.
      double window_sum = 0.0;
      for (double r : window) window_sum += r;
      const double score = window_sum / static_cast<double>(window.size());
      out.rewards.push_back(sr.reward);
      out.scores.push_back(score);
      episode_sum += sr.reward;
      feasible += sr.report.alpha == 0 ? 1 : 0;

      if (observer.on_step) observer.on_step({ep, t, sr.reward, score, sr.report});
      state = std::move(sr.next_state);
    }

    if (observer.on_episode) {
      EpisodeSummary s;
      s.episode = ep;
      s.mean_reward = episode_sum / static_cast<double>(steps);
      s.score = out.scores.back();
      s.feasible_fraction = static_cast<double>(feasible) / static_cast<double>(steps);
      observer.on_episode(s, out.nets);
    }
  }
  out.transitions_stored = buffer.size();
  return out;
}

double random_policy_mean_reward(const EpisodeConfig& env_config, std::uint64_t seed,
                                 std::size_t steps) {
  if (steps == 0) return 0.0;
  const RunSeeds seeds = derive_seeds(seed);
  Environment env(env_config, seeds.env);
  Rng action_rng(seeds.explore);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto aw = static_cast<Eigen::Index>(action_width(env.n_antennas()));
  double sum = 0.0;
  std::size_t in_episode = env_config.steps_per_episode;
  for (std::size_t i = 0; i < steps; ++i) {
    if (in_episode == env_config.steps_per_episode) {
      env.reset();
      in_episode = 0;
    }
    RVector a(aw);
    for (Eigen::Index k = 0; k < aw; ++k) a[k] = normal(action_rng);
    sum += env.step(a).reward;
    ++in_episode;
  }
  return sum / static_cast<double>(steps);
}

}  // namespace mmwnoma::ddpg
