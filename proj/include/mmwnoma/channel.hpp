// SPDX-License-Identifier: Apache-2.0
//
// Spatially sparse mmWave channels seen from a half-wavelength ULA at the base
// station. A user's channel is a short sum of steering vectors:
//
//   h = sum_l lambda_l * a(N, omega_l),   a(N, omega)[m] = exp(j*pi*m*cos(omega))
//
// The two users of a realization are ordered so that ||h1|| <= ||h2||; user 2 is
// the strong user that performs successive interference cancellation.
#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <variant>
#include <vector>

#include "mmwnoma/types.hpp"

namespace mmwnoma {

struct SteeringConfig {
  std::size_t n_antennas = 16;

  void validate() const;
};

// Circularly-symmetric complex Gaussian path gains. Path 0 is the dominant path.
struct GaussianGains {
  double dominant_variance = 1.0;
  double secondary_variance = 0.1;
};

// Deterministic gains, one per path.
struct FixedGains {
  std::vector<Complex> values;
};

// Angles of departure drawn uniformly from [lo, hi), radians.
struct UniformAngles {
  double lo = 0.0;
  double hi = std::numbers::pi;
};

struct FixedAngles {
  std::vector<double> radians;
};

using GainLaw = std::variant<GaussianGains, FixedGains>;
using AngleLaw = std::variant<UniformAngles, FixedAngles>;

struct MultipathSpec {
  std::size_t n_paths = 3;
  GainLaw gains = GaussianGains{};
  AngleLaw angles = UniformAngles{};

  // Throws std::invalid_argument when the laws are inconsistent with n_paths or
  // an angle leaves [0, pi).
  void validate() const;

  // Sum over paths of E|lambda_l|^2, i.e. the expected per-element power.
  double mean_element_power() const;
};

struct ChannelRealization {
  CVector h1;  // weak user
  CVector h2;  // strong user
  MultipathSpec spec_used;
  std::uint64_t seed = 0;

  std::size_t n_antennas() const { return static_cast<std::size_t>(h1.size()); }
};

CVector steering_vector(std::size_t n_antennas, double angle);

CVector sample_channel(const MultipathSpec& spec, const SteeringConfig& steering, Rng& rng);

// Puts the weaker-norm channel first. Equal norms keep the given order.
ChannelRealization order_pair(CVector first, CVector second, const MultipathSpec& spec,
                              std::uint64_t seed = 0);

// Draws one seed from `rng` and generates both users from an engine seeded with
// it, so the realization can be regenerated from `seed` alone.
ChannelRealization sample_ordered_pair(const MultipathSpec& spec, const SteeringConfig& steering,
                                       Rng& rng);
ChannelRealization sample_ordered_pair_from_seed(const MultipathSpec& spec,
                                                 const SteeringConfig& steering,
                                                 std::uint64_t seed);

}  // namespace mmwnoma
