// SPDX-License-Identifier: Apache-2.0
#include "mmwnoma/env.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace mmwnoma {

namespace {

CVector assemble(const RVector& raw, Eigen::Index offset, Eigen::Index n) {
  CVector w(n);
  for (Eigen::Index m = 0; m < n; ++m) w[m] = Complex(raw[offset + m], raw[offset + n + m]);
  return w;
}

CVector normalized_or_matched(CVector w, const CVector& h) {
  const double n = w.norm();
  if (n >= 1e-12) return w / n;
  const double nh = h.norm();
  if (nh > 0.0) return h / nh;
  CVector e = CVector::Zero(h.size());
  e[0] = 1.0;
  return e;
}

void require_width(const RVector& v, std::size_t expected, const char* what) {
  if (static_cast<std::size_t>(v.size()) != expected)
    throw std::invalid_argument(std::string(what) + ": expected length " +
                                std::to_string(expected) + ", got " + std::to_string(v.size()));
}

}  // namespace

void EpisodeConfig::validate() const {
  if (steps_per_episode == 0) throw std::invalid_argument("episode: steps_per_episode must be >= 1");
  budget.validate();
  spec.validate();
  steering.validate();
  if (!(power_logit_scale > 0.0) || !std::isfinite(power_logit_scale))
    throw std::invalid_argument("episode: power_logit_scale must be positive");
  if (fixed_channels && fixed_channels->n_antennas() != steering.n_antennas)
    throw std::invalid_argument("episode: fixed channel length does not match n_antennas");
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double inverse_softplus(double y) {
  if (!(y > 0.0)) y = std::numeric_limits<double>::min();
  return y + std::log(-std::expm1(-y));
}

RVector flatten_state(const ChannelRealization& channels, int alpha) {
  const auto n = channels.h1.size();
  RVector s(4 * n + 1);
  s.segment(0, n) = channels.h1.real();
  s.segment(n, n) = channels.h1.imag();
  s.segment(2 * n, n) = channels.h2.real();
  s.segment(3 * n, n) = channels.h2.imag();
  s[4 * n] = static_cast<double>(alpha);
  return s;
}

UnflattenedState unflatten_state(const RVector& state, std::size_t n_antennas) {
  require_width(state, state_width(n_antennas), "unflatten_state");
  const auto n = static_cast<Eigen::Index>(n_antennas);
  UnflattenedState out;
  out.channels.h1 = assemble(state, 0, n);
  out.channels.h2 = assemble(state, 2 * n, n);
  out.alpha = state[4 * n] != 0.0 ? 1 : 0;
  return out;
}

RVector flatten_action(const NomaAction& action, const LinkBudget& budget,
                       double power_logit_scale) {
  const auto n = action.w1.size();
  if (action.w2.size() != n) throw std::invalid_argument("flatten_action: beamformer lengths differ");
  RVector a(4 * n + 2);
  a.segment(0, n) = action.w1.real();
  a.segment(n, n) = action.w1.imag();
  a.segment(2 * n, n) = action.w2.real();
  a.segment(3 * n, n) = action.w2.imag();
  a[4 * n] = inverse_softplus(action.p1 / budget.total_power) / power_logit_scale;
  a[4 * n + 1] = inverse_softplus(action.p2 / budget.total_power) / power_logit_scale;
  return a;
}

NomaAction project_action(const RVector& raw, const ChannelRealization& channels,
                          const LinkBudget& budget, double power_logit_scale) {
  const auto n = channels.h1.size();
  require_width(raw, action_width(static_cast<std::size_t>(n)), "project_action");

  NomaAction a;
  a.w1 = normalized_or_matched(assemble(raw, 0, n), channels.h1);
  a.w2 = normalized_or_matched(assemble(raw, 2 * n, n), channels.h2);

  // share1 = s1 / (s1 + s2), written so neither huge nor underflowed softplus
  // values can overflow or divide by zero.
  const double s1 = softplus(power_logit_scale * raw[4 * n]);
  const double s2 = softplus(power_logit_scale * raw[4 * n + 1]);
  double share1 = 0.5;
  if (s1 >= s2 && s1 > 0.0) {
    share1 = 1.0 / (1.0 + s2 / s1);
  } else if (s2 > s1) {
    const double q = s1 / s2;
    share1 = q / (1.0 + q);
  }
  a.p1 = budget.total_power * share1;
  a.p2 = budget.total_power - a.p1;
  return a;
}

Environment::Environment(EpisodeConfig config, std::uint64_t seed)
    : config_(std::move(config)), rng_(seed) {
  config_.validate();
  current_ = draw();
}

ChannelRealization Environment::draw() {
  if (config_.fixed_channels) return *config_.fixed_channels;
  return sample_ordered_pair(config_.spec, config_.steering, rng_);
}

RVector Environment::reset() {
  current_ = draw();
  return flatten_state(current_, 0);
}

StepResult Environment::step(const RVector& raw_action) {
  require_width(raw_action, action_width(n_antennas()), "step");
  const NomaAction action = project_action(raw_action, current_, config_.budget, config_.power_logit_scale);
  StepResult out;
  out.report = evaluate_action(current_, action, config_.budget);
  out.reward = reward(out.report);
  current_ = draw();
  out.next_state = flatten_state(current_, out.report.alpha);
  return out;
}

}  // namespace mmwnoma
