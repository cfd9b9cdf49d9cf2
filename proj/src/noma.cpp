// SPDX-License-Identifier: Apache-2.0
#include "mmwnoma/noma.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace mmwnoma {

namespace {

double rate_of(double sinr) { return std::log2(1.0 + sinr); }

bool close_rel(double value, double target, double tol) {
  return std::abs(value - target) <= tol * std::max(1.0, std::abs(target));
}

CVector unit_or_first_axis(const CVector& h) {
  const double n = h.norm();
  if (n > 0.0) return h / n;
  CVector e = CVector::Zero(h.size());
  e[0] = 1.0;
  return e;
}

}  // namespace

LinkBudget LinkBudget::from_snr_db(double snr_db, double min_rate1, double min_rate2) {
  LinkBudget b;
  b.noise_variance = 1.0;
  b.total_power = std::pow(10.0, snr_db / 10.0);
  b.min_rate1 = min_rate1;
  b.min_rate2 = min_rate2;
  b.validate();
  return b;
}

void LinkBudget::validate() const {
  if (!(total_power > 0.0) || !std::isfinite(total_power))
    throw std::invalid_argument("link budget: total power must be positive and finite");
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance))
    throw std::invalid_argument("link budget: noise variance must be positive and finite");
  if (!(min_rate1 >= 0.0) || !(min_rate2 >= 0.0))
    throw std::invalid_argument("link budget: minimum rates must be >= 0");
}

SinrPair compute_sinr(const ChannelRealization& channels, const NomaAction& action,
                      const LinkBudget& budget) {
  if (!(budget.noise_variance > 0.0))
    throw std::invalid_argument("compute_sinr: noise variance must be positive");
  const auto n = channels.h1.size();
  if (channels.h2.size() != n || action.w1.size() != n || action.w2.size() != n)
    throw std::invalid_argument("compute_sinr: channel and beamformer lengths differ");

  // Eigen's complex dot conjugates the left operand: h.dot(w) = h^H w.
  const double g11 = std::norm(channels.h1.dot(action.w1));
  const double g12 = std::norm(channels.h1.dot(action.w2));
  const double g22 = std::norm(channels.h2.dot(action.w2));
  const double s2 = budget.noise_variance;
  return {g11 * action.p1 / (g12 * action.p2 + s2), g22 * action.p2 / s2};
}

RateReport compute_rates(const SinrPair& sinr) {
  RateReport r;
  r.sinr1 = sinr.sinr1;
  r.sinr2 = sinr.sinr2;
  r.rate1 = rate_of(sinr.sinr1);
  r.rate2 = rate_of(sinr.sinr2);
  r.sum_rate = r.rate1 + r.rate2;
  return r;
}

bool satisfies_action_constraints(const NomaAction& action, const LinkBudget& budget) {
  if (!(action.p1 >= 0.0) || !(action.p2 >= 0.0)) return false;
  if (!close_rel(action.w1.norm(), 1.0, kConstraintTolerance)) return false;
  if (!close_rel(action.w2.norm(), 1.0, kConstraintTolerance)) return false;
  return close_rel(action.p1 + action.p2, budget.total_power, kConstraintTolerance);
}

int check_constraints(const RateReport& report, const NomaAction& action,
                      const LinkBudget& budget) {
  const bool floors = report.rate1 >= budget.min_rate1 && report.rate2 >= budget.min_rate2;
  return floors && satisfies_action_constraints(action, budget) ? 0 : 1;
}

double reward(const RateReport& report) {
  return report.alpha == 0 ? report.rate1 + report.rate2 : 0.0;
}

RateReport evaluate_action(const ChannelRealization& channels, const NomaAction& action,
                           const LinkBudget& budget) {
  RateReport r = compute_rates(compute_sinr(channels, action, budget));
  r.alpha = check_constraints(r, action, budget);
  return r;
}

double tdma_baseline(const ChannelRealization& channels, const LinkBudget& budget) {
  const double snr = budget.total_power / budget.noise_variance;
  return 0.5 * (rate_of(snr * channels.h1.squaredNorm()) + rate_of(snr * channels.h2.squaredNorm()));
}

NomaAction matched_filter_action(const ChannelRealization& channels, const LinkBudget& budget,
                                 std::size_t split_points) {
  if (split_points < 2) throw std::invalid_argument("matched_filter_action: need >= 2 splits");
  NomaAction best{unit_or_first_axis(channels.h1), unit_or_first_axis(channels.h2),
                  budget.total_power / 2.0, budget.total_power / 2.0};
  double best_feasible = -1.0;
  double best_any = -1.0;
  NomaAction candidate = best;
  for (std::size_t k = 0; k < split_points; ++k) {
    const double rho = static_cast<double>(k) / static_cast<double>(split_points - 1);
    candidate.p1 = rho * budget.total_power;
    candidate.p2 = budget.total_power - candidate.p1;
    const RateReport r = evaluate_action(channels, candidate, budget);
    if (r.alpha == 0 && r.sum_rate > best_feasible) {
      best_feasible = r.sum_rate;
      best = candidate;
    } else if (best_feasible < 0.0 && r.sum_rate > best_any) {
      best_any = r.sum_rate;
      best = candidate;
    }
  }
  return best;
}

namespace {

struct Candidate {
  double sum = -1.0;
  NomaAction action;
};

// Points are accepted a hair above the floors so that re-evaluating the chosen
// action through compute_rates cannot round it below them.
constexpr double kFloorMargin = 1e-12;

// Exhaustive (c, phi, rho) grid.
Candidate grid_stage(const ChannelRealization& channels, const LinkBudget& budget, std::size_t m) {
  const double step = 1.0 / static_cast<double>(m - 1);
  const double scale = channels.h1.norm() + channels.h2.norm();

  std::vector<CVector> beams;
  std::vector<double> g1;
  std::vector<double> g2;
  beams.reserve(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    const double c = static_cast<double>(i) * step;
    for (std::size_t j = 0; j < m; ++j) {
      const double phi = 2.0 * std::numbers::pi * static_cast<double>(j) * step;
      CVector v = c * channels.h1 + (1.0 - c) * std::polar(1.0, phi) * channels.h2;
      const double nv = v.norm();
      if (!(nv > 1e-12 * scale)) continue;
      v /= nv;
      g1.push_back(std::norm(channels.h1.dot(v)));
      g2.push_back(std::norm(channels.h2.dot(v)));
      beams.push_back(std::move(v));
    }
  }
  Candidate best;
  if (beams.empty()) return best;

  // R1 grows with |h1^H w1|^2 and R2 does not depend on w1, so for every (w2, rho)
  // the best w1 on the grid is the one maximizing that gain. This gives the same
  // optimum as enumerating w1 as well.
  std::size_t best_w1 = 0;
  for (std::size_t a = 1; a < g1.size(); ++a)
    if (g1[a] > g1[best_w1]) best_w1 = a;

  const double p = budget.total_power;
  const double s2 = budget.noise_variance;
  std::size_t best_w2 = 0;
  double best_rho = 0.0;
  for (std::size_t b = 0; b < beams.size(); ++b) {
    for (std::size_t k = 0; k < m; ++k) {
      const double rho = static_cast<double>(k) * step;
      const double p1 = rho * p;
      const double p2 = p - p1;
      const double r2 = rate_of(g2[b] * p2 / s2);
      if (!(r2 >= budget.min_rate2 + kFloorMargin)) continue;
      const double r1 = rate_of(g1[best_w1] * p1 / (g1[b] * p2 + s2));
      if (!(r1 >= budget.min_rate1 + kFloorMargin)) continue;
      const double sum = r1 + r2;
      if (!std::isfinite(sum)) throw std::domain_error("oracle_grid_search: non-finite rate");
      if (sum > best.sum) {
        best.sum = sum;
        best_w2 = b;
        best_rho = rho;
      }
    }
  }
  if (best.sum < 0.0) return best;
  best.action.w1 = beams[best_w1];
  best.action.w2 = beams[best_w2];
  best.action.p1 = best_rho * p;
  best.action.p2 = p - best.action.p1;
  return best;
}

// Exact two-parameter reduction scanned with a zooming grid.
Candidate reduced_stage(const ChannelRealization& channels, const LinkBudget& budget) {
  constexpr int kPoints = 129;
  constexpr int kZooms = 10;
  constexpr double kHalfPi = std::numbers::pi / 2.0;

  Candidate best;
  const double n1 = channels.h1.norm();
  if (!(n1 > 0.0)) return best;
  const CVector u1 = channels.h1 / n1;
  CVector q = channels.h2 - u1 * u1.dot(channels.h2);
  const double nq = q.norm();
  const bool collinear = !(nq > 1e-12 * channels.h2.norm());
  const CVector u2 = collinear ? CVector::Zero(u1.size()) : CVector(q / nq);

  const Complex a = channels.h2.dot(u1);  // h2^H u1
  const Complex b = channels.h2.dot(u2);  // h2^H u2
  const double abs_a = std::abs(a);
  const double abs_b = std::abs(b);
  // exp(j*psi) that phase-aligns both terms of h2^H w2.
  const Complex align = (abs_a > 0.0 && abs_b > 0.0) ? (a / abs_a) / (b / abs_b) : Complex(1.0);

  const double g11 = n1 * n1;
  const double p = budget.total_power;
  const double s2 = budget.noise_variance;
  const double t_max = collinear ? 0.0 : kHalfPi;

  double t_lo = 0.0, t_hi = t_max;
  double r_lo = 0.0, r_hi = 1.0;
  double best_t = 0.0, best_rho = 0.0;
  for (int zoom = 0; zoom < kZooms; ++zoom) {
    const double dt = (t_hi - t_lo) / (kPoints - 1);
    const double dr = (r_hi - r_lo) / (kPoints - 1);
    for (int i = 0; i < kPoints; ++i) {
      const double t = t_lo + dt * i;
      const double ct = std::cos(t);
      const double st = collinear ? 0.0 : std::sin(t);
      const double g12 = g11 * ct * ct;
      const double g22 = (abs_a * ct + abs_b * st) * (abs_a * ct + abs_b * st);
      for (int k = 0; k < kPoints; ++k) {
        const double rho = r_lo + dr * k;
        const double p1 = rho * p;
        const double p2 = p - p1;
        const double r2 = rate_of(g22 * p2 / s2);
        if (!(r2 >= budget.min_rate2 + kFloorMargin)) continue;
        const double r1 = rate_of(g11 * p1 / (g12 * p2 + s2));
        if (!(r1 >= budget.min_rate1 + kFloorMargin)) continue;
        if (r1 + r2 > best.sum) {
          best.sum = r1 + r2;
          best_t = t;
          best_rho = rho;
        }
      }
    }
    if (best.sum < 0.0) return best;
    t_lo = std::max(0.0, best_t - 2.0 * dt);
    t_hi = std::min(t_max, best_t + 2.0 * dt);
    r_lo = std::max(0.0, best_rho - 2.0 * dr);
    r_hi = std::min(1.0, best_rho + 2.0 * dr);
  }
  if (!std::isfinite(best.sum)) throw std::domain_error("oracle_grid_search: non-finite rate");

  best.action.w1 = u1;
  best.action.w2 = std::cos(best_t) * u1;
  if (!collinear) best.action.w2 += std::sin(best_t) * align * u2;
  best.action.w2 /= best.action.w2.norm();
  best.action.p1 = best_rho * p;
  best.action.p2 = p - best.action.p1;
  return best;
}

}  // namespace

std::optional<OracleResult> oracle_grid_search(const ChannelRealization& channels,
                                               const LinkBudget& budget,
                                               std::size_t grid_resolution) {
  if (grid_resolution < 3) throw std::invalid_argument("oracle_grid_search: M must be >= 3");
  budget.validate();
  if (!channels.h1.allFinite() || !channels.h2.allFinite())
    throw std::domain_error("oracle_grid_search: non-finite channel");

  Candidate grid = grid_stage(channels, budget, grid_resolution);
  Candidate reduced = reduced_stage(channels, budget);
  // Report what the rate model itself says about the chosen actions.
  for (Candidate* c : {&grid, &reduced}) {
    if (c->sum < 0.0) continue;
    const RateReport r = evaluate_action(channels, c->action, budget);
    c->sum = r.alpha == 0 ? r.sum_rate : -1.0;
  }
  if (grid.sum < 0.0 && reduced.sum < 0.0) return std::nullopt;

  const Candidate& best = reduced.sum > grid.sum ? reduced : grid;
  OracleResult out;
  out.action = best.action;
  out.sum_rate = best.sum;
  out.grid_sum_rate = grid.sum;
  return out;
}

}  // namespace mmwnoma
