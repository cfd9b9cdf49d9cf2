// SPDX-License-Identifier: Apache-2.0
//
// Episodic MDP view of the NOMA downlink.
//
// State  (4N+1): [Re h1, Im h1, Re h2, Im h2, alpha_prev]
// Action (4N+2): [Re w1, Im w1, Re w2, Im w2, p1_raw, p2_raw]
//
// Raw actions are projected onto the feasible set before evaluation: each
// beamformer is normalized and the powers are p_k = P * softplus(raw_k) / sum.
// A fresh channel pair is drawn after every step unless the environment is
// pinned to a fixed realization.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "mmwnoma/noma.hpp"

namespace mmwnoma {

constexpr std::size_t state_width(std::size_t n_antennas) { return 4 * n_antennas + 1; }
constexpr std::size_t action_width(std::size_t n_antennas) { return 4 * n_antennas + 2; }

inline constexpr double kDefaultPowerLogitScale = 5.0;

struct EpisodeConfig {
  std::size_t steps_per_episode = 250;
  LinkBudget budget;
  MultipathSpec spec;
  SteeringConfig steering;
  // Multiplies the raw power slots before the softplus; lets a bounded actor
  // output reach lopsided power splits.
  double power_logit_scale = kDefaultPowerLogitScale;
  // When set, every reset and step reuses this realization.
  std::optional<ChannelRealization> fixed_channels;

  void validate() const;
};

double softplus(double x);
double inverse_softplus(double y);

RVector flatten_state(const ChannelRealization& channels, int alpha);

struct UnflattenedState {
  ChannelRealization channels;
  int alpha = 0;
};
UnflattenedState unflatten_state(const RVector& state, std::size_t n_antennas);

// Inverse of project_action on feasible actions: beamformer parts verbatim and
// power slots set to inverse_softplus(p_k / P) / power_logit_scale.
RVector flatten_action(const NomaAction& action, const LinkBudget& budget,
                       double power_logit_scale = kDefaultPowerLogitScale);

// Total: any finite raw vector maps to an action meeting every NomaAction
// invariant. A beamformer with norm below 1e-12 is replaced by the matched
// filter of that user's channel.
NomaAction project_action(const RVector& raw, const ChannelRealization& channels,
                          const LinkBudget& budget, double power_logit_scale = kDefaultPowerLogitScale);

struct StepResult {
  RVector next_state;
  double reward = 0.0;
  RateReport report;
};

class Environment {
 public:
  Environment(EpisodeConfig config, std::uint64_t seed);

  RVector reset();

  // Scores `raw_action` against the current channels, then advances to a new
  // draw whose alpha slot carries this step's feasibility flag.
  StepResult step(const RVector& raw_action);

  const ChannelRealization& channels() const { return current_; }
  const EpisodeConfig& config() const { return config_; }
  std::size_t n_antennas() const { return config_.steering.n_antennas; }

 private:
  ChannelRealization draw();

  EpisodeConfig config_;
  Rng rng_;
  ChannelRealization current_;
};

}  // namespace mmwnoma
