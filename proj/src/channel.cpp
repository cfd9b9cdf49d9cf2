// SPDX-License-Identifier: Apache-2.0
#include "mmwnoma/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace mmwnoma {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Complex draw_gain(const GainLaw& law, std::size_t path, Rng& rng) {
  return std::visit(
      Overloaded{[&](const GaussianGains& g) {
                   const double var = path == 0 ? g.dominant_variance : g.secondary_variance;
                   std::normal_distribution<double> normal(0.0, std::sqrt(var / 2.0));
                   const double re = normal(rng);
                   const double im = normal(rng);
                   return Complex(re, im);
                 },
                 [&](const FixedGains& g) { return g.values[path]; }},
      law);
}

double draw_angle(const AngleLaw& law, std::size_t path, Rng& rng) {
  return std::visit(Overloaded{[&](const UniformAngles& a) {
                                 std::uniform_real_distribution<double> u(a.lo, a.hi);
                                 return u(rng);
                               },
                               [&](const FixedAngles& a) { return a.radians[path]; }},
                    law);
}

}  // namespace

void SteeringConfig::validate() const {
  if (n_antennas == 0) throw std::invalid_argument("steering: n_antennas must be >= 1");
}

void MultipathSpec::validate() const {
  if (n_paths == 0) throw std::invalid_argument("multipath: n_paths must be >= 1");

  std::visit(Overloaded{[](const GaussianGains& g) {
                          if (!(g.dominant_variance >= 0.0) || !(g.secondary_variance >= 0.0))
                            throw std::invalid_argument("multipath: gain variances must be >= 0");
                        },
                        [&](const FixedGains& g) {
                          if (g.values.size() != n_paths)
                            throw std::invalid_argument("multipath: expected " +
                                                        std::to_string(n_paths) + " fixed gains");
                        }},
             gains);

  std::visit(Overloaded{[](const UniformAngles& a) {
                          if (!(a.lo >= 0.0 && a.lo < a.hi && a.hi <= std::numbers::pi))
                            throw std::invalid_argument(
                                "multipath: uniform angle range must lie in [0, pi) with lo < hi");
                        },
                        [&](const FixedAngles& a) {
                          if (a.radians.size() != n_paths)
                            throw std::invalid_argument("multipath: expected " +
                                                        std::to_string(n_paths) + " fixed angles");
                          for (double r : a.radians)
                            if (!(r >= 0.0 && r < std::numbers::pi))
                              throw std::invalid_argument("multipath: angle outside [0, pi)");
                        }},
             angles);
}

double MultipathSpec::mean_element_power() const {
  return std::visit(Overloaded{[&](const GaussianGains& g) {
                                 return g.dominant_variance +
                                        static_cast<double>(n_paths - 1) * g.secondary_variance;
                               },
                               [](const FixedGains& g) {
                                 double acc = 0.0;
                                 for (const auto& v : g.values) acc += std::norm(v);
                                 return acc;
                               }},
                    gains);
}

CVector steering_vector(std::size_t n_antennas, double angle) {
  if (n_antennas == 0) throw std::invalid_argument("steering_vector: n_antennas must be >= 1");
  if (!std::isfinite(angle)) throw std::invalid_argument("steering_vector: angle must be finite");
  const double phase_step = std::numbers::pi * std::cos(angle);
  CVector a(static_cast<Eigen::Index>(n_antennas));
  for (Eigen::Index m = 0; m < a.size(); ++m)
    a[m] = std::polar(1.0, phase_step * static_cast<double>(m));
  return a;
}

CVector sample_channel(const MultipathSpec& spec, const SteeringConfig& steering, Rng& rng) {
  spec.validate();
  steering.validate();
  CVector h = CVector::Zero(static_cast<Eigen::Index>(steering.n_antennas));
  for (std::size_t l = 0; l < spec.n_paths; ++l) {
    // Gain before angle, per path; changing this order changes every seeded draw.
    const Complex gain = draw_gain(spec.gains, l, rng);
    const double angle = draw_angle(spec.angles, l, rng);
    h += gain * steering_vector(steering.n_antennas, angle);
  }
  return h;
}

ChannelRealization order_pair(CVector first, CVector second, const MultipathSpec& spec,
                              std::uint64_t seed) {
  if (first.size() != second.size())
    throw std::invalid_argument("order_pair: channel lengths differ");
  if (first.squaredNorm() > second.squaredNorm()) std::swap(first, second);
  return ChannelRealization{std::move(first), std::move(second), spec, seed};
}

ChannelRealization sample_ordered_pair_from_seed(const MultipathSpec& spec,
                                                 const SteeringConfig& steering,
                                                 std::uint64_t seed) {
  Rng local(seed);
  CVector a = sample_channel(spec, steering, local);
  CVector b = sample_channel(spec, steering, local);
  return order_pair(std::move(a), std::move(b), spec, seed);
}

ChannelRealization sample_ordered_pair(const MultipathSpec& spec, const SteeringConfig& steering,
                                       Rng& rng) {
  return sample_ordered_pair_from_seed(spec, steering, rng());
}

}  // namespace mmwnoma
