// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mmwnoma/noma.hpp"
#include "oracles.hpp"

namespace mmwnoma {
namespace {

using testing::random_channels;
using testing::random_feasible_action;

CVector vec(std::initializer_list<Complex> xs) {
  CVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (const auto& x : xs) v[i++] = x;
  return v;
}

ChannelRealization orthogonal_pair() {
  return order_pair(vec({1.0, 0.0}), vec({0.0, 1.0}), MultipathSpec{});
}

LinkBudget budget(double p, double s2, double r1, double r2) {
  LinkBudget b;
  b.total_power = p;
  b.noise_variance = s2;
  b.min_rate1 = r1;
  b.min_rate2 = r2;
  return b;
}

TEST(ComputeSinr, OrthogonalChannelsNoLeakage) {
  const NomaAction a{vec({1.0, 0.0}), vec({0.0, 1.0}), 1.0, 1.0};
  const auto s = compute_sinr(orthogonal_pair(), a, budget(2.0, 1.0, 0, 0));
  EXPECT_DOUBLE_EQ(s.sinr1, 1.0);
  EXPECT_DOUBLE_EQ(s.sinr2, 1.0);
}

TEST(ComputeSinr, MatchedFilterStrongUser) {
  ChannelRealization ch = order_pair(vec({0.5, 0.0}), vec({0.0, Complex(0.0, 2.0)}), MultipathSpec{});
  ASSERT_DOUBLE_EQ(ch.h2.squaredNorm(), 4.0);
  NomaAction a{vec({1.0, 0.0}), ch.h2 / ch.h2.norm(), 1.0, 2.0};
  EXPECT_NEAR(compute_sinr(ch, a, budget(3.0, 1.0, 0, 0)).sinr2, 8.0, 1e-12);
}

TEST(ComputeSinr, MatchesScalarEvaluation) {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto ch = random_channels(4, rng);
    const auto a = random_feasible_action(4, 5.0, rng);
    const auto b = budget(5.0, 0.7, 0, 0);
    const auto s = compute_sinr(ch, a, b);
    const auto ref = testing::scalar_rates(ch.h1, ch.h2, a.w1, a.w2, a.p1, a.p2, 0.7);
    EXPECT_NEAR(s.sinr1, ref.sinr1, 1e-12 * std::max(1.0, ref.sinr1));
    EXPECT_NEAR(s.sinr2, ref.sinr2, 1e-12 * std::max(1.0, ref.sinr2));
  }
}

TEST(ComputeSinr, RejectsNonPositiveNoise) {
  const NomaAction a{vec({1.0, 0.0}), vec({0.0, 1.0}), 1.0, 1.0};
  EXPECT_THROW(compute_sinr(orthogonal_pair(), a, budget(2.0, 0.0, 0, 0)), std::invalid_argument);
  EXPECT_THROW(compute_sinr(orthogonal_pair(), a, budget(2.0, -1.0, 0, 0)), std::invalid_argument);
}

TEST(ComputeSinr, PhaseRotationInvariance) {
  Rng rng(8);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < 200; ++i) {
    const auto ch = random_channels(6, rng);
    auto a = random_feasible_action(6, 10.0, rng);
    const auto b = budget(10.0, 1.0, 0, 0);
    const auto s0 = compute_sinr(ch, a, b);
    a.w1 *= std::polar(1.0, phase(rng));
    a.w2 *= std::polar(1.0, phase(rng));
    const auto s1 = compute_sinr(ch, a, b);
    EXPECT_NEAR(s0.sinr1, s1.sinr1, 1e-12 * std::max(1.0, s0.sinr1));
    EXPECT_NEAR(s0.sinr2, s1.sinr2, 1e-12 * std::max(1.0, s0.sinr2));
  }
}

TEST(ComputeSinr, JointPowerNoiseScalingInvariance) {
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const auto ch = random_channels(3, rng);
    auto a = random_feasible_action(3, 4.0, rng);
    const auto s0 = compute_sinr(ch, a, budget(4.0, 0.5, 0, 0));
    a.p1 *= 7.5;
    a.p2 *= 7.5;
    const auto s1 = compute_sinr(ch, a, budget(30.0, 0.5 * 7.5, 0, 0));
    EXPECT_NEAR(s0.sinr1, s1.sinr1, 1e-12 * std::max(1.0, s0.sinr1));
    EXPECT_NEAR(s0.sinr2, s1.sinr2, 1e-12 * std::max(1.0, s0.sinr2));
  }
}

TEST(ComputeSinr, StrongUserIgnoresWeakUserSignal) {
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const auto ch = random_channels(4, rng);
    auto a = random_feasible_action(4, 4.0, rng);
    const auto b = budget(4.0, 1.0, 0, 0);
    const double before = compute_sinr(ch, a, b).sinr2;
    a.w1 = testing::random_unit_cvector(4, rng);
    a.p1 = 123.0;
    EXPECT_EQ(compute_sinr(ch, a, b).sinr2, before);
  }
}

TEST(ComputeRates, Examples) {
  auto r = compute_rates({1.0, 1.0});
  EXPECT_DOUBLE_EQ(r.rate1, 1.0);
  EXPECT_DOUBLE_EQ(r.rate2, 1.0);
  EXPECT_DOUBLE_EQ(r.sum_rate, 2.0);

  r = compute_rates({0.0, 0.0});
  EXPECT_DOUBLE_EQ(r.rate1, 0.0);
  EXPECT_DOUBLE_EQ(r.rate2, 0.0);

  r = compute_rates({3.0, 7.0});
  EXPECT_NEAR(r.rate1, 2.0, 1e-12);
  EXPECT_NEAR(r.rate2, 3.0, 1e-12);
  EXPECT_NEAR(r.sum_rate, 5.0, 1e-12);
}

NomaAction valid_action() { return {vec({1.0, 0.0}), vec({0.0, 1.0}), 1.0, 1.0}; }

TEST(CheckConstraints, Examples) {
  const auto b = budget(2.0, 1.0, 1.0, 1.0);
  RateReport r;
  r.rate1 = 1.5;
  r.rate2 = 2.0;
  EXPECT_EQ(check_constraints(r, valid_action(), b), 0);

  r.rate1 = 0.5;
  EXPECT_EQ(check_constraints(r, valid_action(), b), 1);

  r.rate1 = 1.5;
  NomaAction short_power = valid_action();
  short_power.p1 = 0.9;
  short_power.p2 = 0.9;  // 0.9 P
  EXPECT_EQ(check_constraints(r, short_power, b), 1);
}

TEST(CheckConstraints, RateFloorIsExact) {
  const auto b = budget(2.0, 1.0, 1.0, 1.0);
  RateReport r;
  r.rate1 = 1.0;
  r.rate2 = 1.0;
  EXPECT_EQ(check_constraints(r, valid_action(), b), 0);
  r.rate1 = std::nextafter(1.0, 0.0);
  EXPECT_EQ(check_constraints(r, valid_action(), b), 1);
}

TEST(CheckConstraints, NormAndPowerToleranceIsRelative) {
  const auto b = budget(2.0, 1.0, 0.0, 0.0);
  RateReport r;
  NomaAction a = valid_action();
  a.w1 *= 1.0 + 1e-8;
  a.p1 *= 1.0 + 1e-8;
  EXPECT_EQ(check_constraints(r, a, b), 0);
  a.w1 *= 1.0 + 1e-4;
  EXPECT_EQ(check_constraints(r, a, b), 1);
  a = valid_action();
  a.p1 = -0.1;
  a.p2 = 2.1;
  EXPECT_EQ(check_constraints(r, a, b), 1);
}

TEST(Reward, Examples) {
  RateReport r;
  r.rate1 = 1.5;
  r.rate2 = 2.0;
  r.alpha = 0;
  EXPECT_DOUBLE_EQ(reward(r), 3.5);
  r.alpha = 1;
  EXPECT_DOUBLE_EQ(reward(r), 0.0);
  r.rate1 = r.rate2 = 0.0;
  r.alpha = 0;
  EXPECT_DOUBLE_EQ(reward(r), 0.0);
}

TEST(Reward, InvalidActionWithNanRatesGivesZero) {
  const auto ch = order_pair(vec({1.0, 0.0}), vec({0.0, 2.0}), MultipathSpec{});
  NomaAction a;
  a.w1 = vec({1.0, 0.0});
  a.w2 = vec({0.0, 1.0});
  a.p1 = 30.0;
  a.p2 = -20.0;
  const auto rep = evaluate_action(ch, a, budget(10.0, 1.0, 0, 0));
  EXPECT_EQ(rep.alpha, 1);
  EXPECT_TRUE(std::isnan(rep.rate2));
  EXPECT_EQ(reward(rep), 0.0);
}

TEST(Tdma, Examples) {
  EXPECT_NEAR(tdma_baseline(orthogonal_pair(), budget(1.0, 1.0, 0, 0)), 1.0, 1e-12);

  const auto ch = order_pair(vec({std::sqrt(3.0)}), vec({std::sqrt(7.0)}), MultipathSpec{});
  EXPECT_NEAR(tdma_baseline(ch, budget(1.0, 1.0, 0, 0)), 2.5, 1e-12);
}

TEST(Tdma, AtLeastEitherUserAlone) {
  Rng rng(21);
  for (int i = 0; i < 200; ++i) {
    const auto ch = random_channels(4, rng);
    const auto b = budget(10.0, 1.0, 0, 0);
    const double t = tdma_baseline(ch, b);
    EXPECT_GE(t, 0.5 * std::log2(1.0 + 10.0 * ch.h1.squaredNorm()));
    EXPECT_GE(t, 0.5 * std::log2(1.0 + 10.0 * ch.h2.squaredNorm()));
  }
}

TEST(MatchedFilter, UsesChannelDirections) {
  Rng rng(3);
  const auto ch = random_channels(4, rng);
  const auto a = matched_filter_action(ch, budget(100.0, 1.0, 0.5, 0.5));
  EXPECT_NEAR(std::abs(ch.h1.dot(a.w1)), ch.h1.norm(), 1e-12);
  EXPECT_NEAR(std::abs(ch.h2.dot(a.w2)), ch.h2.norm(), 1e-12);
  EXPECT_TRUE(satisfies_action_constraints(a, budget(100.0, 1.0, 0.5, 0.5)));
}

TEST(Oracle, OrthogonalEqualNormOptimum) {
  const auto b = budget(2.0, 1.0, 0.0, 0.0);
  const auto res = oracle_grid_search(orthogonal_pair(), b, 11);
  ASSERT_TRUE(res.has_value());
  EXPECT_NEAR(res->sum_rate, 2.0, 1e-12);
  EXPECT_NEAR(res->action.p1, 1.0, 1e-12);
  EXPECT_NEAR(std::abs(res->action.w1[0]), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(res->action.w2[1]), 1.0, 1e-12);
}

TEST(Oracle, HugeFloorsAreInfeasibleOnGrid) {
  Rng rng(5);
  const auto res = oracle_grid_search(random_channels(2, rng), budget(10.0, 1.0, 100.0, 100.0), 9);
  EXPECT_FALSE(res.has_value());
}

TEST(Oracle, RejectsCoarseGridAndBadChannels) {
  Rng rng(5);
  EXPECT_THROW(oracle_grid_search(random_channels(2, rng), budget(1, 1, 0, 0), 2),
               std::invalid_argument);
  auto ch = random_channels(2, rng);
  ch.h1[0] = Complex(std::nan(""), 0.0);
  EXPECT_THROW(oracle_grid_search(ch, budget(1, 1, 0, 0), 5), std::domain_error);
}

TEST(Oracle, ReturnedActionIsFeasibleAndReproducesValue) {
  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    const auto ch = random_channels(3, rng);
    const auto b = budget(30.0, 1.0, 0.5, 0.5);
    const auto res = oracle_grid_search(ch, b, 9);
    if (!res) continue;
    const auto rep = evaluate_action(ch, res->action, b);
    EXPECT_EQ(rep.alpha, 0);
    EXPECT_NEAR(rep.sum_rate, res->sum_rate, 1e-9);
  }
}

// Full enumeration of (w1, w2, rho) without the w1 shortcut.
double brute_force_grid(const ChannelRealization& ch, const LinkBudget& b, std::size_t m) {
  std::vector<CVector> beams;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double c = static_cast<double>(i) / static_cast<double>(m - 1);
      const double phi = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m - 1);
      CVector v = c * ch.h1 + (1.0 - c) * std::polar(1.0, phi) * ch.h2;
      if (v.norm() > 1e-12) beams.push_back(v / v.norm());
    }
  double best = -1.0;
  for (const auto& w1 : beams)
    for (const auto& w2 : beams)
      for (std::size_t k = 0; k < m; ++k) {
        const double rho = static_cast<double>(k) / static_cast<double>(m - 1);
        const auto r = testing::scalar_rates(ch.h1, ch.h2, w1, w2, rho * b.total_power,
                                             (1.0 - rho) * b.total_power, b.noise_variance);
        if (r.rate1 >= b.min_rate1 && r.rate2 >= b.min_rate2) best = std::max(best, r.rate1 + r.rate2);
      }
  return best;
}

TEST(Oracle, AgreesWithFullEnumeration) {
  Rng rng(31);
  for (int i = 0; i < 6; ++i) {
    const auto ch = random_channels(2, rng);
    const auto b = budget(20.0, 1.0, 0.5, 0.5);
    const auto res = oracle_grid_search(ch, b, 7);
    const double ref = brute_force_grid(ch, b, 7);
    ASSERT_TRUE(res.has_value());
    EXPECT_NEAR(res->grid_sum_rate, ref, 1e-9);
    EXPECT_GE(res->sum_rate, res->grid_sum_rate);
  }
}

TEST(Oracle, NonDecreasingUnderNestedRefinement) {
  // Grids with M and 2M-1 points are nested, so refining can only add candidates.
  Rng rng(41);
  for (int i = 0; i < 10; ++i) {
    const auto ch = random_channels(2, rng);
    const auto b = budget(100.0, 1.0, 1.0, 1.0);
    double prev = -1.0;
    for (std::size_t m : {3u, 5u, 9u, 17u, 33u}) {
      const auto res = oracle_grid_search(ch, b, m);
      const double v = res ? res->sum_rate : -1.0;
      EXPECT_GE(v, prev - 1e-12) << "M=" << m;
      prev = v;
    }
  }
}

TEST(Oracle, NeverBeatenByRandomFeasibleActions) {
  Rng rng(2);
  for (int inst = 0; inst < 5; ++inst) {
    const auto ch = random_channels(2, rng);
    const auto b = budget(100.0, 1.0, 1.0, 1.0);
    const auto res = oracle_grid_search(ch, b, 41);
    ASSERT_TRUE(res.has_value());
    int feasible = 0;
    for (int k = 0; k < 1000; ++k) {
      const auto a = random_feasible_action(2, b.total_power, rng);
      const auto rep = evaluate_action(ch, a, b);
      if (rep.alpha != 0) continue;
      ++feasible;
      EXPECT_LE(rep.sum_rate, res->sum_rate + 1e-9);
    }
    EXPECT_GT(feasible, 0);
  }
}

TEST(EvaluateAction, RewardSemanticsOverRandomCases) {
  Rng rng(99);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int i = 0; i < 2000; ++i) {
    const auto ch = random_channels(3, rng);
    const auto b = budget(10.0, 1.0, u(rng), u(rng));
    auto a = random_feasible_action(3, b.total_power, rng);
    if (i % 3 == 0) a.p1 *= 0.5;  // breaks the power sum
    const auto rep = evaluate_action(ch, a, b);
    const bool violated = rep.rate1 < b.min_rate1 || rep.rate2 < b.min_rate2 ||
                          !satisfies_action_constraints(a, b);
    if (violated) {
      EXPECT_EQ(reward(rep), 0.0);
    } else {
      EXPECT_DOUBLE_EQ(reward(rep), rep.rate1 + rep.rate2);
    }
  }
}

}  // namespace
}  // namespace mmwnoma
