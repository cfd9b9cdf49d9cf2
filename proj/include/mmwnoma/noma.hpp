// SPDX-License-Identifier: Apache-2.0
//
// Two-user downlink NOMA link model with SIC at the strong user:
//
//   SINR1 = |h1^H w1|^2 p1 / (|h1^H w2|^2 p2 + sigma^2)
//   SINR2 = |h2^H w2|^2 p2 / sigma^2
//   R_k   = log2(1 + SINR_k)
//
// plus the feasibility flag, the penalized reward, and two comparators: a TDMA
// baseline and an exhaustive grid-search oracle for small arrays.
#pragma once

#include <cstddef>
#include <optional>

#include "mmwnoma/channel.hpp"

namespace mmwnoma {

struct NomaAction {
  CVector w1;
  CVector w2;
  double p1 = 0.0;
  double p2 = 0.0;
};

struct LinkBudget {
  double total_power = 1000.0;  // linear
  double noise_variance = 1.0;  // linear
  double min_rate1 = 1.0;       // bps/Hz
  double min_rate2 = 1.0;

  // sigma^2 = 1 and P = 10^(snr/10).
  static LinkBudget from_snr_db(double snr_db, double min_rate1, double min_rate2);

  void validate() const;
};

struct SinrPair {
  double sinr1 = 0.0;
  double sinr2 = 0.0;
};

struct RateReport {
  double sinr1 = 0.0;
  double sinr2 = 0.0;
  double rate1 = 0.0;
  double rate2 = 0.0;
  double sum_rate = 0.0;
  int alpha = 0;
};

// Relative tolerance applied to the unit-norm and power-sum constraints.
inline constexpr double kConstraintTolerance = 1e-6;

SinrPair compute_sinr(const ChannelRealization& channels, const NomaAction& action,
                      const LinkBudget& budget);

// Fills SINRs, rates and sum-rate; alpha is left at 0.
RateReport compute_rates(const SinrPair& sinr);

// Unit-norm beamformers, nonnegative powers, p1 + p2 = P.
bool satisfies_action_constraints(const NomaAction& action, const LinkBudget& budget);

// 0 iff both rate floors hold and the action is feasible, else 1.
int check_constraints(const RateReport& report, const NomaAction& action,
                      const LinkBudget& budget);

double reward(const RateReport& report);

// SINRs, rates and alpha in one call.
RateReport evaluate_action(const ChannelRealization& channels, const NomaAction& action,
                           const LinkBudget& budget);

// Each user gets half the slot at full power with a matched filter.
double tdma_baseline(const ChannelRealization& channels, const LinkBudget& budget);

// Matched-filter beams for both users with the best feasible power split over a
// uniform grid of `split_points` fractions. Used as a simple heuristic policy.
NomaAction matched_filter_action(const ChannelRealization& channels, const LinkBudget& budget,
                                 std::size_t split_points = 101);

struct OracleResult {
  NomaAction action;
  double sum_rate = 0.0;       // best over both stages
  double grid_sum_rate = -1.0;  // grid stage alone; -1 when infeasible on the grid
};

// Brute-force optimum for small arrays, in two stages:
//
//  1. Grid: w_k = normalize(c*h1 + (1-c)*exp(j*phi)*h2) and p1 = rho*P with c, phi
//     and rho each on an M-point grid including both endpoints.
//  2. Reduced search: w1 = h1/||h1|| is always optimal, and writing
//     w2 = cos(t)*u1 + exp(j*psi)*sin(t)*u2 over an orthonormal basis of
//     span{h1, h2} (u1 along h1) leaves psi in closed form. The remaining (t, rho)
//     square is scanned on a fine grid and zoomed around the incumbent.
//
// Stage 2 does not depend on M, so the result is non-decreasing over nested grids.
// Returns std::nullopt when neither stage finds a point meeting the rate floors.
// Throws std::domain_error on non-finite channel data and std::invalid_argument
// for M < 3.
std::optional<OracleResult> oracle_grid_search(const ChannelRealization& channels,
                                               const LinkBudget& budget,
                                               std::size_t grid_resolution);

}  // namespace mmwnoma
