// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// The adaptive fractional dilated convolution operator: K integer dilated
// convolutions sharing one parameter set, blended per sample by the
// interpolation weight vector. afdc_direct is the single-image reference
// path; afdc_batch_forward/backward is the mini-batch form that computes
// each dilation branch over the whole batch.

#pragma once

#include <span>
#include <vector>

#include "afdc/conv.hpp"
#include "afdc/rates.hpp"

namespace afdc {

// Padding for a dilated branch so its output grid matches the (1,1) branch:
// p_d = p_1 + (k-1)(d-1)/2 per axis. The division must be exact, otherwise
// the branch outputs cannot be stacked; even kernels with even dilation steps
// are rejected here.
template <typename Scalar>
Padding branch_padding(const ConvKernel<Scalar>& base, const RatePair& rate) {
  const Index dh = (base.k_h - 1) * (rate.v - 1);
  const Index dw = (base.k_w - 1) * (rate.h - 1);
  require(dh % 2 == 0 && dw % 2 == 0, "rate pair ", rate.to_string(),
          " incompatible with padding geometry for kernel ", base.k_h, "x",
          base.k_w, " (branch padding not integral)");
  return Padding{base.padding.h + dh / 2, base.padding.w + dw / 2};
}

template <typename Scalar>
ConvKernel<Scalar> branch_kernel(const ConvKernel<Scalar>& base,
                                 const RatePair& rate) {
  ConvKernel<Scalar> k = base;
  k.dilation = Dilation{rate.v, rate.h};
  k.padding = branch_padding(base, rate);
  return k;
}

// Reference path for one image: materialize the two bracketing integer
// dilated convolutions (same parameters, shape-matched padding) and blend.
// The bias is added once, after blending, so an integer ratio reproduces the
// plain dilated conv bitwise.
template <typename Scalar>
Tensor<Scalar> afdc_direct(const Tensor<Scalar>& input,
                           const ConvKernel<Scalar>& base,
                           const AspectRatio& ratio,
                           const DilationRateSet& rates =
                               DilationRateSet::seven_kernel()) {
  require(input.batch() == 1, "afdc_direct expects a single-image batch");
  const InterpolationWeights weights = interpolation_weights(ratio, rates);
  Tensor<Scalar> out;
  bool first = true;
  for (std::size_t k = 0; k < rates.size(); ++k) {
    if (weights.w[k] == 0.0) continue;
    const ConvKernel<Scalar> branch = branch_kernel(base, rates[k]);
    Tensor<Scalar> f = conv2d_forward(input, branch, /*add_bias=*/false);
    const Scalar wk = static_cast<Scalar>(weights.w[k]);
    if (first) {
      out = std::move(f);
      if (wk != Scalar(1)) out.array() *= wk;
      first = false;
    } else {
      out.array() += wk * f.array();
    }
  }
  require(!first, "interpolation weights are all zero");
  for (Index n = 0; n < out.batch(); ++n)
    for (Index c = 0; c < out.channels(); ++c)
      for (Index y = 0; y < out.height(); ++y)
        for (Index x = 0; x < out.width(); ++x)
          out.at(n, c, y, x) += static_cast<Scalar>(base.bias[c]);
  return out;
}

// Mini-batch form: every dilation branch with any nonzero weight is computed
// over the whole batch with the shared parameters, then samples take their
// weighted sum. Branch order is the rate-set order, so the reduction is
// deterministic.
template <typename Scalar>
Tensor<Scalar> afdc_batch_forward(const Tensor<Scalar>& batch,
                                  std::span<const InterpolationWeights> weights,
                                  const ConvKernel<Scalar>& base,
                                  const DilationRateSet& rates) {
  require(static_cast<Index>(weights.size()) == batch.batch(),
          "weight count ", weights.size(), " does not match batch size ",
          batch.batch());
  for (const auto& w : weights)
    require(w.w.size() == rates.size(), "weight vector length ", w.w.size(),
            " does not match rate set size ", rates.size());

  const Dims out_dims = conv_output_dims(
      batch.dims(), branch_kernel(base, RatePair{1, 1}));
  Tensor<Scalar> out(out_dims);
  const Index per_sample = out_dims.c * out_dims.h * out_dims.w;

  for (std::size_t k = 0; k < rates.size(); ++k) {
    bool active = false;
    for (const auto& w : weights) active |= w.w[k] != 0.0;
    if (!active) continue;
    const Tensor<Scalar> f =
        conv2d_forward(batch, branch_kernel(base, rates[k]),
                       /*add_bias=*/false);
    for (Index n = 0; n < batch.batch(); ++n) {
      const Scalar wk = static_cast<Scalar>(weights[n].w[k]);
      if (wk == Scalar(0)) continue;
      out.array().segment(n * per_sample, per_sample) +=
          wk * f.array().segment(n * per_sample, per_sample);
    }
  }
  // Shared bias contributes exactly once per output element.
  for (Index n = 0; n < out_dims.n; ++n)
    for (Index c = 0; c < out_dims.c; ++c)
      for (Index y = 0; y < out_dims.h; ++y)
        for (Index x = 0; x < out_dims.w; ++x)
          out.at(n, c, y, x) += static_cast<Scalar>(base.bias[c]);
  return out;
}

// Gradients of the batch form. The K dilation branches accumulate into ONE
// weight gradient buffer (the branches share parameters); the bias gradient
// is the plain sum of upstream gradients since the bias is added once.
template <typename Scalar>
ConvGrads<Scalar> afdc_batch_backward(const Tensor<Scalar>& batch,
                                      std::span<const InterpolationWeights>
                                          weights,
                                      const ConvKernel<Scalar>& base,
                                      const DilationRateSet& rates,
                                      const Tensor<Scalar>& grad_out) {
  require(static_cast<Index>(weights.size()) == batch.batch(),
          "weight count ", weights.size(), " does not match batch size ",
          batch.batch());
  const Dims out_dims = conv_output_dims(
      batch.dims(), branch_kernel(base, RatePair{1, 1}));
  require(grad_out.dims() == out_dims, "grad_out dims ",
          grad_out.dims().to_string(), " do not match forward output ",
          out_dims.to_string());

  ConvGrads<Scalar> grads;
  grads.input = Tensor<Scalar>(batch.dims());
  grads.weights = Tensor<Scalar>::Array::Zero(base.weight_count());
  grads.bias = Tensor<Scalar>::Array::Zero(base.out_channels);

  const Index per_sample = out_dims.c * out_dims.h * out_dims.w;
  Tensor<Scalar> weighted_gout(out_dims);
  for (std::size_t k = 0; k < rates.size(); ++k) {
    bool active = false;
    for (const auto& w : weights) active |= w.w[k] != 0.0;
    if (!active) continue;
    weighted_gout.array().setZero();
    for (Index n = 0; n < batch.batch(); ++n) {
      const Scalar wk = static_cast<Scalar>(weights[n].w[k]);
      if (wk == Scalar(0)) continue;
      weighted_gout.array().segment(n * per_sample, per_sample) =
          wk * grad_out.array().segment(n * per_sample, per_sample);
    }
    const ConvGrads<Scalar> branch = conv2d_backward(
        batch, branch_kernel(base, rates[k]), weighted_gout,
        /*with_bias=*/false);
    grads.weights += branch.weights;
    grads.input.array() += branch.input.array();
  }
  using MatrixRM =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Index spatial = out_dims.h * out_dims.w;
  for (Index n = 0; n < out_dims.n; ++n) {
    Eigen::Map<const MatrixRM> go_mat(
        grad_out.data() + n * out_dims.c * spatial, out_dims.c, spatial);
    grads.bias += go_mat.rowwise().sum().array();
  }
  return grads;
}

}  // namespace afdc
