// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// Declarative network configs and the desk-scale model built from them:
// stacked conv blocks (vanilla or AFDC, sharing one kernel across dilation
// branches), relu/pool blocks, and the spatial-pyramid composition head
// feeding a 10-bin score-distribution output. The same config type doubles
// as the layer inventory for the static cost model.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "afdc/afdc_conv.hpp"
#include "afdc/ops.hpp"
#include "afdc/rng.hpp"
#include "afdc/score.hpp"

namespace afdc {

enum class LayerKind { conv, relu, avg_pool, max_pool, global_pool, dense };

struct LayerDesc {
  LayerKind kind = LayerKind::conv;
  std::string name;

  // conv fields
  Index in_channels = 0;  // 0 = chain from previous layer
  Index out_channels = 0;
  Index kernel = 3;
  Index stride = 1;
  bool afdc = false;

  // pool fields
  Index pool_k = 2;
  Index pool_stride = 2;
  Index pool_pad = 0;  // cost-chain only; the runnable model pools unpadded

  // dense fields
  Index dense_out = 0;

  // Cost-model attributes: `shortcut` rows branch off the main path (their
  // input is snapshotted, they do not advance the chain); `macs_counted`
  // mirrors the upstream accounting that reports projection shortcuts in
  // #Params but not in #Mult-Adds.
  bool shortcut = false;
  bool macs_counted = true;
};

struct SppHead {
  std::vector<Index> scales;  // e.g. {1,2,3}; {1} is the global-pool head
  Index feature_dim = 96;
};

struct NetworkConfig {
  std::string name = "net";
  Index input_channels = 1;
  std::vector<LayerDesc> blocks;
  std::optional<SppHead> head;
  Index score_bins = kScoreBins;
};

// Fills chained in_channels, checks channel compatibility and the SPP
// divisibility rule; failures name the layer index.
void validate_network_config(NetworkConfig& config);

// JSON schema (afdc-net/1) parsing and serialization; see README for the
// documented schema.
NetworkConfig parse_network_config_json(const std::string& text);
NetworkConfig load_network_config(const std::string& path);
std::string network_config_to_json(const NetworkConfig& config);

// Channel count after the conv/pool stack (the SPP input width).
Index final_feature_channels(const NetworkConfig& config);

// --- the runnable model -----------------------------------------------------

template <typename Scalar>
struct Param {
  std::string name;
  Tensor<Scalar> value;  // gradient lives in value.grad()
};

template <typename Scalar>
class Model {
 public:
  struct Cache {
    std::vector<Tensor<Scalar>> block_inputs;     // per block
    Tensor<Scalar> features;                      // SPP input
    std::vector<Tensor<Scalar>> spp_pooled;       // per scale (N,C,g,g)
    std::vector<Tensor<Scalar>> spp_pre_relu;     // per scale (N,F/ns,1,1)
    Tensor<Scalar> concat;                        // (N,F,1,1)
    Tensor<Scalar> logits;                        // (N,bins,1,1)
    Tensor<Scalar> probs;                         // (N,bins,1,1)
    std::vector<InterpolationWeights> weights;    // per sample
    DilationRateSet rates;
  };

  static Model build(const NetworkConfig& config, std::uint64_t seed);

  const NetworkConfig& config() const { return cfg_; }
  bool has_afdc_layers() const { return has_afdc_; }

  Index parameter_count() const {
    Index count = 0;
    for (const auto& p : params_) count += p.value.size();
    return count;
  }
  std::vector<Param<Scalar>>& params() { return params_; }
  const std::vector<Param<Scalar>>& params() const { return params_; }
  void zero_grads() {
    for (auto& p : params_) p.value.grad().setZero();
  }

  // Forward pass over one warped batch. `ratios` supplies one original
  // aspect ratio per sample; `mode` selects the weight construction
  // (fractional for training, the ablation modes for eval). Returns
  // (N, bins, 1, 1) probabilities; every row is a simplex.
  Tensor<Scalar> forward(const Tensor<Scalar>& batch,
                         std::span<const AspectRatio> ratios,
                         const DilationRateSet& rates, WeightMode mode,
                         Cache* cache = nullptr) const;

  // Accumulates parameter gradients for the batch that produced `cache`.
  // `grad_logits` is dL/dlogits, shaped like the logits.
  void backward(const Cache& cache, const Tensor<Scalar>& grad_logits);

  void save_checkpoint(const std::string& dir) const;
  static Model load_checkpoint(const std::string& dir);

 private:
  struct ConvLayer {
    Index block_index;  // position in cfg_.blocks
    Index weight_param;
    Index bias_param;
    Index in_c, out_c, k, stride;
    bool afdc;
  };

  ConvKernel<Scalar> make_kernel(const ConvLayer& layer) const;

  NetworkConfig cfg_;
  std::vector<Param<Scalar>> params_;
  std::vector<ConvLayer> conv_layers_;      // parallel to conv blocks
  std::vector<Index> spp_weight_params_;    // per scale
  std::vector<Index> spp_bias_params_;
  Index out_weight_param_ = -1;
  Index out_bias_param_ = -1;
  bool has_afdc_ = false;
};

// --- implementation ---------------------------------------------------------

template <typename Scalar>
Model<Scalar> Model<Scalar>::build(const NetworkConfig& config,
                                   std::uint64_t seed) {
  NetworkConfig cfg = config;
  validate_network_config(cfg);
  require(cfg.head.has_value(), "model build requires a head");
  require(cfg.score_bins == kScoreBins, "score_bins must be ", kScoreBins);

  Model model;
  model.cfg_ = cfg;
  RngStream rng = RngStream::derive(seed, rng_purpose::kParamInit);

  auto kaiming_uniform = [&rng](Tensor<Scalar>& t, Index fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (Index i = 0; i < t.size(); ++i)
      t.array()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
  };
  auto add_param = [&model](const std::string& name, Tensor<Scalar> value) {
    model.params_.push_back({name, std::move(value)});
    return static_cast<Index>(model.params_.size() - 1);
  };

  for (std::size_t b = 0; b < cfg.blocks.size(); ++b) {
    const LayerDesc& d = cfg.blocks[b];
    switch (d.kind) {
      case LayerKind::conv: {
        ConvLayer layer;
        layer.block_index = static_cast<Index>(b);
        layer.in_c = d.in_channels;
        layer.out_c = d.out_channels;
        layer.k = d.kernel;
        layer.stride = d.stride;
        layer.afdc = d.afdc;
        Tensor<Scalar> w(d.out_channels, d.in_channels, d.kernel, d.kernel);
        kaiming_uniform(w, d.in_channels * d.kernel * d.kernel);
        layer.weight_param = add_param(d.name + ".weight", std::move(w));
        layer.bias_param =
            add_param(d.name + ".bias", Tensor<Scalar>(d.out_channels, 1, 1, 1));
        model.conv_layers_.push_back(layer);
        model.has_afdc_ |= d.afdc;
        break;
      }
      case LayerKind::relu:
      case LayerKind::avg_pool:
        break;
      default:
        fail("model build: block ", b, " (", d.name,
             ") is not supported by the desk-scale builder");
    }
  }

  const Index feat_c = final_feature_channels(cfg);
  const auto& head = *cfg.head;
  const Index num_scales = static_cast<Index>(head.scales.size());
  const Index per_scale = head.feature_dim / num_scales;
  for (Index s = 0; s < num_scales; ++s) {
    const Index g = head.scales[s];
    const Index in_dim = feat_c * g * g;
    Tensor<Scalar> w(per_scale, in_dim, 1, 1);
    kaiming_uniform(w, in_dim);
    model.spp_weight_params_.push_back(
        add_param(detail::concat("spp", g, ".weight"), std::move(w)));
    model.spp_bias_params_.push_back(add_param(
        detail::concat("spp", g, ".bias"), Tensor<Scalar>(per_scale, 1, 1, 1)));
  }
  Tensor<Scalar> w_out(cfg.score_bins, head.feature_dim, 1, 1);
  kaiming_uniform(w_out, head.feature_dim);
  model.out_weight_param_ = add_param("out.weight", std::move(w_out));
  model.out_bias_param_ =
      add_param("out.bias", Tensor<Scalar>(cfg.score_bins, 1, 1, 1));
  return model;
}

template <typename Scalar>
ConvKernel<Scalar> Model<Scalar>::make_kernel(const ConvLayer& layer) const {
  ConvKernel<Scalar> k(layer.out_c, layer.in_c, layer.k, layer.k,
                       Dilation{1, 1}, Stride{layer.stride, layer.stride},
                       Padding{(layer.k - 1) / 2, (layer.k - 1) / 2});
  k.weights = params_[layer.weight_param].value.array();
  k.bias = params_[layer.bias_param].value.array();
  return k;
}

template <typename Scalar>
Tensor<Scalar> Model<Scalar>::forward(const Tensor<Scalar>& batch,
                                      std::span<const AspectRatio> ratios,
                                      const DilationRateSet& rates,
                                      WeightMode mode, Cache* cache) const {
  require(batch.channels() == cfg_.input_channels,
          "batch has ", batch.channels(), " channels, config expects ",
          cfg_.input_channels);
  std::vector<InterpolationWeights> weights;
  if (has_afdc_) {
    require(static_cast<Index>(ratios.size()) == batch.batch(),
            "need one aspect ratio per sample: ", ratios.size(), " vs ",
            batch.batch());
    weights.reserve(ratios.size());
    for (const AspectRatio& r : ratios)
      weights.push_back(test_mode_weights(r, rates, mode));
  }

  Cache local;
  Cache& c = cache ? *cache : local;
  c.block_inputs.clear();
  c.spp_pooled.clear();
  c.spp_pre_relu.clear();
  c.weights = weights;
  c.rates = rates;

  Tensor<Scalar> x = batch;
  std::size_t conv_i = 0;
  for (const LayerDesc& d : cfg_.blocks) {
    c.block_inputs.push_back(x);
    switch (d.kind) {
      case LayerKind::conv: {
        const ConvLayer& layer = conv_layers_[conv_i++];
        const ConvKernel<Scalar> kernel = make_kernel(layer);
        if (layer.afdc && has_afdc_)
          x = afdc_batch_forward<Scalar>(x, weights, kernel, rates);
        else
          x = conv2d_forward(x, kernel);
        break;
      }
      case LayerKind::relu:
        x = relu(x);
        break;
      case LayerKind::avg_pool:
        x = avg_pool(x, d.pool_k, d.pool_stride);
        break;
      default:
        fail("unsupported block in forward");
    }
  }
  c.features = x;

  // SPP head: per scale, adaptive pool -> dense to F/num_scales -> relu;
  // concatenate to F, then the final dense map to the score bins.
  const auto& head = *cfg_.head;
  const Index num_scales = static_cast<Index>(head.scales.size());
  const Index per_scale = head.feature_dim / num_scales;
  const Index n = x.batch();
  Tensor<Scalar> concat(Dims{n, head.feature_dim, 1, 1});
  for (Index s = 0; s < num_scales; ++s) {
    const Tensor<Scalar> pooled =
        adaptive_avg_pool(x, PoolSpec{head.scales[s]});
    const Tensor<Scalar> pre_relu =
        linear(pooled, params_[spp_weight_params_[s]].value.array(),
               params_[spp_bias_params_[s]].value.array());
    c.spp_pooled.push_back(pooled);
    c.spp_pre_relu.push_back(pre_relu);
    for (Index b = 0; b < n; ++b)
      for (Index f = 0; f < per_scale; ++f)
        concat.at(b, s * per_scale + f, 0, 0) =
            std::max(Scalar(0), pre_relu.at(b, f, 0, 0));
  }
  c.concat = concat;
  c.logits = linear(concat, params_[out_weight_param_].value.array(),
                    params_[out_bias_param_].value.array());
  c.probs = softmax(c.logits);
  return c.probs;
}

template <typename Scalar>
void Model<Scalar>::backward(const Cache& cache,
                             const Tensor<Scalar>& grad_logits) {
  const auto& head = *cfg_.head;
  const Index num_scales = static_cast<Index>(head.scales.size());
  const Index per_scale = head.feature_dim / num_scales;
  const Index n = grad_logits.batch();

  // final dense
  auto out_grads =
      linear_backward(cache.concat, params_[out_weight_param_].value.array(),
                      grad_logits);
  params_[out_weight_param_].value.grad() += out_grads.weights;
  params_[out_bias_param_].value.grad() += out_grads.bias;

  // head scales
  Tensor<Scalar> grad_features(cache.features.dims());
  for (Index s = 0; s < num_scales; ++s) {
    Tensor<Scalar> grad_pre(Dims{n, per_scale, 1, 1});
    for (Index b = 0; b < n; ++b)
      for (Index f = 0; f < per_scale; ++f) {
        const Scalar upstream = out_grads.input.at(b, s * per_scale + f, 0, 0);
        grad_pre.at(b, f, 0, 0) =
            cache.spp_pre_relu[s].at(b, f, 0, 0) > Scalar(0) ? upstream
                                                             : Scalar(0);
      }
    auto spp_grads = linear_backward(
        cache.spp_pooled[s], params_[spp_weight_params_[s]].value.array(),
        grad_pre);
    params_[spp_weight_params_[s]].value.grad() += spp_grads.weights;
    params_[spp_bias_params_[s]].value.grad() += spp_grads.bias;
    grad_features.array() +=
        adaptive_avg_pool_backward(spp_grads.input, cache.features.dims())
            .array();
  }

  // conv stack, in reverse
  Tensor<Scalar> grad = grad_features;
  std::size_t conv_i = conv_layers_.size();
  for (std::size_t bi = cfg_.blocks.size(); bi-- > 0;) {
    const LayerDesc& d = cfg_.blocks[bi];
    const Tensor<Scalar>& input = cache.block_inputs[bi];
    switch (d.kind) {
      case LayerKind::conv: {
        const ConvLayer& layer = conv_layers_[--conv_i];
        const ConvKernel<Scalar> kernel = make_kernel(layer);
        ConvGrads<Scalar> grads;
        if (layer.afdc && has_afdc_)
          grads = afdc_batch_backward<Scalar>(input, cache.weights, kernel,
                                              cache.rates, grad);
        else
          grads = conv2d_backward(input, kernel, grad);
        params_[layer.weight_param].value.grad() += grads.weights;
        params_[layer.bias_param].value.grad() += grads.bias;
        grad = std::move(grads.input);
        break;
      }
      case LayerKind::relu:
        grad = relu_backward(input, grad);
        break;
      case LayerKind::avg_pool:
        grad = avg_pool_backward(grad, input.dims(), d.pool_k, d.pool_stride);
        break;
      default:
        fail("unsupported block in backward");
    }
  }
}

}  // namespace afdc

#include "afdc/net_checkpoint.hpp"
