// SPDX-License-Identifier: Apache-2.0
//
// Small dense-network engine used by the actor and critic. Batches are stored
// column-wise: an input of shape (in_width x B) holds B samples.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mmwnoma/types.hpp"

namespace mmwnoma::nn {

enum class Activation : std::uint8_t { identity = 0, relu = 1, tanh = 2 };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct LayerSpec {
  std::size_t in_width = 0;
  std::size_t out_width = 0;
  Activation activation = Activation::relu;
};

struct DenseLayer {
  RMatrix weight;  // out x in
  RVector bias;    // out
  Activation activation = Activation::relu;
};

struct MlpParams {
  std::vector<DenseLayer> layers;
  // Incremented by every optimizer step.
  std::uint64_t version = 0;

  std::size_t in_width() const;
  std::size_t out_width() const;
  std::size_t parameter_count() const;
  std::vector<LayerSpec> specs() const;
  // Widths chain and every entry is finite; throws std::invalid_argument otherwise.
  void validate() const;
};

// Gradient-shaped container; also holds the Adam moments.
struct ParamGrads {
  std::vector<RMatrix> weight;
  std::vector<RVector> bias;

  static ParamGrads zeros_like(const MlpParams& params);
  bool same_shape(const MlpParams& params) const;
};

struct ForwardCache {
  std::vector<RMatrix> inputs;          // input to each layer
  std::vector<RMatrix> preactivations;  // W x + b of each layer
};

RMatrix forward(const MlpParams& params, const RMatrix& input, ForwardCache* cache = nullptr);
RVector forward(const MlpParams& params, const RVector& input);

struct BackwardResult {
  ParamGrads grads;
  RMatrix input_grad;  // in_width x B
};

// `output_grad` is dLoss/dOutput for every sample; parameter gradients are summed
// over the batch. Throws std::invalid_argument if the cache does not match.
BackwardResult backward(const MlpParams& params, const ForwardCache& cache,
                        const RMatrix& output_grad);

struct AdamState {
  ParamGrads first_moment;
  ParamGrads second_moment;
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const MlpParams& params, double learning_rate);
};

void adam_step(MlpParams& params, const ParamGrads& grads, AdamState& state);

// Hidden layers: weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
// Output layer: U(-final_init, final_init).
MlpParams build_mlp(const std::vector<LayerSpec>& layers, Rng& rng, double final_init = 3e-3);

struct ArchitectureConfig {
  std::size_t hidden_width = 128;
  Activation actor_output = Activation::tanh;
};

// (4N+1) -> 4 x [hidden, relu] -> (4N+2)
MlpParams build_actor(std::size_t n_antennas, Rng& rng, const ArchitectureConfig& arch = {});
// (4N+1)+(4N+2) -> 3 x [hidden, relu] -> 1
MlpParams build_critic(std::size_t n_antennas, Rng& rng, const ArchitectureConfig& arch = {});

// Checkpoint file layout (all integers and doubles little-endian):
//
//   "MWNOMACK"                      8-byte magic
//   u32 format version              currently 1
//   u8  byte order tag              1 = little-endian
//   u8[3] reserved                  zero
//   u32 network count
//   per network:
//     u32 name length, name bytes
//     u64 version tag
//     u32 layer count
//     per layer: u32 in_width, u32 out_width, u8 activation
//     per layer: weights (out x in, row-major f64), then bias (out f64)
struct NamedNetwork {
  std::string name;
  MlpParams params;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const std::vector<NamedNetwork>& networks);
std::vector<NamedNetwork> decode_checkpoint(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedNetwork>& networks);
std::vector<NamedNetwork> load_checkpoint(const std::filesystem::path& path);

}  // namespace mmwnoma::nn
