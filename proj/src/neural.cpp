// SPDX-License-Identifier: Apache-2.0
#include "mmwnoma/neural.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mmwnoma::nn {

namespace {

void apply_activation(Activation a, RMatrix& z) {
  switch (a) {
    case Activation::identity:
      break;
    case Activation::relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::tanh:
      z = z.array().tanh().matrix();
      break;
  }
}

// dL/dz given dL/da and the pre-activation z.
RMatrix activation_backward(Activation a, const RMatrix& z, const RMatrix& upstream) {
  switch (a) {
    case Activation::identity:
      return upstream;
    case Activation::relu:
      return (z.array() > 0.0).select(upstream, 0.0);
    case Activation::tanh:
      return (upstream.array() * (1.0 - z.array().tanh().square())).matrix();
  }
  throw std::logic_error("unknown activation");
}

}  // namespace

const char* to_string(Activation a) {
  switch (a) {
    case Activation::identity:
      return "identity";
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
  }
  return "?";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::size_t MlpParams::in_width() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.cols());
}

std::size_t MlpParams::out_width() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.rows());
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::vector<LayerSpec> MlpParams::specs() const {
  std::vector<LayerSpec> out;
  out.reserve(layers.size());
  for (const auto& l : layers)
    out.push_back({static_cast<std::size_t>(l.weight.cols()),
                   static_cast<std::size_t>(l.weight.rows()), l.activation});
  return out;
}

void MlpParams::validate() const {
  if (layers.empty()) throw std::invalid_argument("mlp: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.weight.rows() < 1 || l.weight.cols() < 1)
      throw std::invalid_argument("mlp: layer " + std::to_string(i) + " has zero width");
    if (l.bias.size() != l.weight.rows())
      throw std::invalid_argument("mlp: layer " + std::to_string(i) + " bias width mismatch");
    if (i > 0 && l.weight.cols() != layers[i - 1].weight.rows())
      throw std::invalid_argument("mlp: layer " + std::to_string(i) + " does not chain");
    if (!l.weight.allFinite() || !l.bias.allFinite())
      throw std::invalid_argument("mlp: layer " + std::to_string(i) + " has non-finite entries");
  }
}

ParamGrads ParamGrads::zeros_like(const MlpParams& params) {
  ParamGrads g;
  for (const auto& l : params.layers) {
    g.weight.push_back(RMatrix::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(RVector::Zero(l.bias.size()));
  }
  return g;
}

bool ParamGrads::same_shape(const MlpParams& params) const {
  if (weight.size() != params.layers.size() || bias.size() != params.layers.size()) return false;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    const auto& l = params.layers[i];
    if (weight[i].rows() != l.weight.rows() || weight[i].cols() != l.weight.cols()) return false;
    if (bias[i].size() != l.bias.size()) return false;
  }
  return true;
}

RMatrix forward(const MlpParams& params, const RMatrix& input, ForwardCache* cache) {
  if (params.layers.empty()) throw std::invalid_argument("forward: empty network");
  if (static_cast<std::size_t>(input.rows()) != params.in_width())
    throw std::invalid_argument("forward: input width " + std::to_string(input.rows()) +
                                " does not match network width " +
                                std::to_string(params.in_width()));
  if (cache) {
    cache->inputs.clear();
    cache->preactivations.clear();
  }
  RMatrix x = input;
  for (const auto& l : params.layers) {
    RMatrix z = l.weight * x;
    z.colwise() += l.bias;
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->preactivations.push_back(z);
    }
    apply_activation(l.activation, z);
    x = std::move(z);
  }
  return x;
}

RVector forward(const MlpParams& params, const RVector& input) {
  return forward(params, RMatrix(input), nullptr).col(0);
}

BackwardResult backward(const MlpParams& params, const ForwardCache& cache,
                        const RMatrix& output_grad) {
  const std::size_t n = params.layers.size();
  if (cache.inputs.size() != n || cache.preactivations.size() != n)
    throw std::invalid_argument("backward: cache depth does not match network");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = params.layers[i];
    if (cache.inputs[i].rows() != l.weight.cols() || cache.preactivations[i].rows() != l.weight.rows())
      throw std::invalid_argument("backward: stale cache for layer " + std::to_string(i));
  }
  const auto batch = cache.inputs.front().cols();
  if (output_grad.rows() != params.layers.back().weight.rows() || output_grad.cols() != batch)
    throw std::invalid_argument("backward: output gradient shape mismatch");

  BackwardResult out;
  out.grads.weight.resize(n);
  out.grads.bias.resize(n);
  RMatrix upstream = output_grad;
  for (std::size_t k = n; k-- > 0;) {
    const auto& l = params.layers[k];
    const RMatrix dz = activation_backward(l.activation, cache.preactivations[k], upstream);
    out.grads.weight[k].noalias() = dz * cache.inputs[k].transpose();
    out.grads.bias[k] = dz.rowwise().sum();
    upstream.noalias() = l.weight.transpose() * dz;
  }
  out.input_grad = std::move(upstream);
  return out;
}

AdamState AdamState::for_params(const MlpParams& params, double learning_rate) {
  AdamState s;
  s.first_moment = ParamGrads::zeros_like(params);
  s.second_moment = ParamGrads::zeros_like(params);
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(MlpParams& params, const ParamGrads& grads, AdamState& state) {
  if (!grads.same_shape(params) || !state.first_moment.same_shape(params) ||
      !state.second_moment.same_shape(params))
    throw std::invalid_argument("adam_step: shape mismatch between params, grads and state");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double lr = state.learning_rate;
  const double eps = state.epsilon;

  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    update(params.layers[i].weight, grads.weight[i], state.first_moment.weight[i],
           state.second_moment.weight[i]);
    update(params.layers[i].bias, grads.bias[i], state.first_moment.bias[i],
           state.second_moment.bias[i]);
  }
  ++params.version;
}

MlpParams build_mlp(const std::vector<LayerSpec>& layers, Rng& rng, double final_init) {
  if (layers.empty()) throw std::invalid_argument("build_mlp: no layers");
  MlpParams p;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& spec = layers[i];
    if (spec.in_width == 0 || spec.out_width == 0)
      throw std::invalid_argument("build_mlp: widths must be >= 1");
    if (i > 0 && spec.in_width != layers[i - 1].out_width)
      throw std::invalid_argument("build_mlp: layer widths do not chain");
    const bool last = i + 1 == layers.size();
    const double bound = last ? final_init : 1.0 / std::sqrt(static_cast<double>(spec.in_width));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer l;
    l.activation = spec.activation;
    l.weight.resize(static_cast<Eigen::Index>(spec.out_width),
                    static_cast<Eigen::Index>(spec.in_width));
    l.bias.resize(static_cast<Eigen::Index>(spec.out_width));
    // Row-major fill so the draw order matches the checkpoint payload order.
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = u(rng);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = u(rng);
    p.layers.push_back(std::move(l));
  }
  return p;
}

MlpParams build_actor(std::size_t n_antennas, Rng& rng, const ArchitectureConfig& arch) {
  if (n_antennas == 0) throw std::invalid_argument("build_actor: n_antennas must be >= 1");
  const std::size_t in = 4 * n_antennas + 1;
  const std::size_t out = 4 * n_antennas + 2;
  const std::size_t h = arch.hidden_width;
  return build_mlp({{in, h, Activation::relu},
                    {h, h, Activation::relu},
                    {h, h, Activation::relu},
                    {h, h, Activation::relu},
                    {h, out, arch.actor_output}},
                   rng);
}

MlpParams build_critic(std::size_t n_antennas, Rng& rng, const ArchitectureConfig& arch) {
  if (n_antennas == 0) throw std::invalid_argument("build_critic: n_antennas must be >= 1");
  const std::size_t in = (4 * n_antennas + 1) + (4 * n_antennas + 2);
  const std::size_t h = arch.hidden_width;
  return build_mlp({{in, h, Activation::relu},
                    {h, h, Activation::relu},
                    {h, h, Activation::relu},
                    {h, 1, Activation::identity}},
                   rng);
}

}  // namespace mmwnoma::nn
