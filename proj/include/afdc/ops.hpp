// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// Non-conv layer primitives: resizing, adaptive average pooling, dense maps,
// relu and softmax, with reverse-mode gradients where training needs them.

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "afdc/tensor.hpp"

namespace afdc {

struct PoolSpec {
  Index grid = 1;  // target g x g grid for adaptive average pooling
};

// output(y, x) = input(floor(y*in_h/out_h), floor(x*in_w/out_w))
template <typename Scalar>
Tensor<Scalar> resize_nearest(const Tensor<Scalar>& input, Index out_h,
                              Index out_w) {
  require(out_h >= 1 && out_w >= 1, "resize target must be positive, got ",
          out_h, "x", out_w);
  Tensor<Scalar> out(Dims{input.batch(), input.channels(), out_h, out_w});
  for (Index n = 0; n < input.batch(); ++n)
    for (Index c = 0; c < input.channels(); ++c)
      for (Index y = 0; y < out_h; ++y) {
        const Index sy = y * input.height() / out_h;
        for (Index x = 0; x < out_w; ++x) {
          const Index sx = x * input.width() / out_w;
          out.at(n, c, y, x) = input.at(n, c, sy, sx);
        }
      }
  return out;
}

namespace detail {
struct LerpTap {
  Index lo, hi;
  double frac;
};

// align-corners=false half-pixel centers; taps are clamped at the border.
inline LerpTap bilinear_tap(Index dst, Index out_n, Index in_n) {
  const double src =
      (static_cast<double>(dst) + 0.5) * static_cast<double>(in_n) /
          static_cast<double>(out_n) -
      0.5;
  const double lo_f = std::floor(src);
  LerpTap tap;
  tap.frac = src - lo_f;
  tap.lo = std::clamp<Index>(static_cast<Index>(lo_f), 0, in_n - 1);
  tap.hi = std::clamp<Index>(static_cast<Index>(lo_f) + 1, 0, in_n - 1);
  return tap;
}
}  // namespace detail

// Bilinear sampling with align-corners=false semantics. The lerp is written
// as v0 + t*(v1-v0) so constant images map to exactly constant images.
template <typename Scalar>
Tensor<Scalar> resize_bilinear(const Tensor<Scalar>& input, Index out_h,
                               Index out_w) {
  require(out_h >= 1 && out_w >= 1, "resize target must be positive, got ",
          out_h, "x", out_w);
  Tensor<Scalar> out(Dims{input.batch(), input.channels(), out_h, out_w});
  std::vector<detail::LerpTap> xs(out_w);
  for (Index x = 0; x < out_w; ++x)
    xs[x] = detail::bilinear_tap(x, out_w, input.width());
  for (Index n = 0; n < input.batch(); ++n)
    for (Index c = 0; c < input.channels(); ++c)
      for (Index y = 0; y < out_h; ++y) {
        const auto ty = detail::bilinear_tap(y, out_h, input.height());
        for (Index x = 0; x < out_w; ++x) {
          const auto& tx = xs[x];
          const Scalar a = input.at(n, c, ty.lo, tx.lo);
          const Scalar b = input.at(n, c, ty.lo, tx.hi);
          const Scalar d = input.at(n, c, ty.hi, tx.lo);
          const Scalar e = input.at(n, c, ty.hi, tx.hi);
          const Scalar top = a + static_cast<Scalar>(tx.frac) * (b - a);
          const Scalar bot = d + static_cast<Scalar>(tx.frac) * (e - d);
          out.at(n, c, y, x) = top + static_cast<Scalar>(ty.frac) * (bot - top);
        }
      }
  return out;
}

// Adaptive average pooling to a g x g grid. Cell (i, j) averages the input
// window [floor(i*H/g), ceil((i+1)*H/g)) x [floor(j*W/g), ceil((j+1)*W/g)).
template <typename Scalar>
Tensor<Scalar> adaptive_avg_pool(const Tensor<Scalar>& input,
                                 const PoolSpec& spec) {
  const Index g = spec.grid;
  require(g >= 1, "pool grid must be >= 1");
  require(g <= input.height() && g <= input.width(), "pool grid ", g,
          " larger than input ", input.height(), "x", input.width());
  Tensor<Scalar> out(Dims{input.batch(), input.channels(), g, g});
  for (Index n = 0; n < input.batch(); ++n)
    for (Index c = 0; c < input.channels(); ++c)
      for (Index i = 0; i < g; ++i) {
        const Index y0 = i * input.height() / g;
        const Index y1 = ((i + 1) * input.height() + g - 1) / g;
        for (Index j = 0; j < g; ++j) {
          const Index x0 = j * input.width() / g;
          const Index x1 = ((j + 1) * input.width() + g - 1) / g;
          Scalar sum = 0;
          for (Index y = y0; y < y1; ++y)
            for (Index x = x0; x < x1; ++x) sum += input.at(n, c, y, x);
          out.at(n, c, i, j) = sum / static_cast<Scalar>((y1 - y0) * (x1 - x0));
        }
      }
  return out;
}

template <typename Scalar>
Tensor<Scalar> adaptive_avg_pool_backward(const Tensor<Scalar>& grad_out,
                                          const Dims& input_dims) {
  const Index g = grad_out.height();
  Tensor<Scalar> grad_in(input_dims);
  for (Index n = 0; n < grad_out.batch(); ++n)
    for (Index c = 0; c < grad_out.channels(); ++c)
      for (Index i = 0; i < g; ++i) {
        const Index y0 = i * input_dims.h / g;
        const Index y1 = ((i + 1) * input_dims.h + g - 1) / g;
        for (Index j = 0; j < g; ++j) {
          const Index x0 = j * input_dims.w / g;
          const Index x1 = ((j + 1) * input_dims.w + g - 1) / g;
          const Scalar share = grad_out.at(n, c, i, j) /
                               static_cast<Scalar>((y1 - y0) * (x1 - x0));
          for (Index y = y0; y < y1; ++y)
            for (Index x = x0; x < x1; ++x) grad_in.at(n, c, y, x) += share;
        }
      }
  return grad_in;
}

// Fixed-window average pooling (used by model "pool" blocks).
template <typename Scalar>
Tensor<Scalar> avg_pool(const Tensor<Scalar>& input, Index k, Index stride) {
  require(k >= 1 && stride >= 1, "pool window/stride must be positive");
  require(input.height() >= k && input.width() >= k, "pool window ", k,
          " larger than input");
  const Index oh = (input.height() - k) / stride + 1;
  const Index ow = (input.width() - k) / stride + 1;
  Tensor<Scalar> out(Dims{input.batch(), input.channels(), oh, ow});
  const Scalar inv = Scalar(1) / static_cast<Scalar>(k * k);
  for (Index n = 0; n < input.batch(); ++n)
    for (Index c = 0; c < input.channels(); ++c)
      for (Index y = 0; y < oh; ++y)
        for (Index x = 0; x < ow; ++x) {
          Scalar sum = 0;
          for (Index dy = 0; dy < k; ++dy)
            for (Index dx = 0; dx < k; ++dx)
              sum += input.at(n, c, y * stride + dy, x * stride + dx);
          out.at(n, c, y, x) = sum * inv;
        }
  return out;
}

template <typename Scalar>
Tensor<Scalar> avg_pool_backward(const Tensor<Scalar>& grad_out,
                                 const Dims& input_dims, Index k,
                                 Index stride) {
  Tensor<Scalar> grad_in(input_dims);
  const Scalar inv = Scalar(1) / static_cast<Scalar>(k * k);
  for (Index n = 0; n < grad_out.batch(); ++n)
    for (Index c = 0; c < grad_out.channels(); ++c)
      for (Index y = 0; y < grad_out.height(); ++y)
        for (Index x = 0; x < grad_out.width(); ++x) {
          const Scalar share = grad_out.at(n, c, y, x) * inv;
          for (Index dy = 0; dy < k; ++dy)
            for (Index dx = 0; dx < k; ++dx)
              grad_in.at(n, c, y * stride + dy, x * stride + dx) += share;
        }
  return grad_in;
}

// Dense map over flattened per-sample features: out = W x + b.
// Input (N, D, 1, 1) or any shape with c*h*w == D; weights (out, D) row-major.
template <typename Scalar>
Tensor<Scalar> linear(const Tensor<Scalar>& input,
                      const typename Tensor<Scalar>::Array& weights,
                      const typename Tensor<Scalar>::Array& bias) {
  using MatrixRM =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Index d = input.channels() * input.height() * input.width();
  const Index out_d = bias.size();
  require(weights.size() == out_d * d, "shape mismatch in linear: weights ",
          weights.size(), " vs ", out_d, "x", d);
  Tensor<Scalar> out(Dims{input.batch(), out_d, 1, 1});
  Eigen::Map<const MatrixRM> w(weights.data(), out_d, d);
  Eigen::Map<const MatrixRM> x(input.data(), input.batch(), d);
  Eigen::Map<MatrixRM> y(out.data(), input.batch(), out_d);
  y.noalias() = x * w.transpose();
  y.rowwise() += bias.matrix().transpose();
  return out;
}

template <typename Scalar>
struct LinearGrads {
  Tensor<Scalar> input;
  typename Tensor<Scalar>::Array weights;
  typename Tensor<Scalar>::Array bias;
};

template <typename Scalar>
LinearGrads<Scalar> linear_backward(const Tensor<Scalar>& input,
                                    const typename Tensor<Scalar>::Array&
                                        weights,
                                    const Tensor<Scalar>& grad_out) {
  using MatrixRM =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Index d = input.channels() * input.height() * input.width();
  const Index out_d = grad_out.channels();
  LinearGrads<Scalar> grads;
  grads.input = Tensor<Scalar>(input.dims());
  grads.weights = Tensor<Scalar>::Array::Zero(out_d * d);
  grads.bias = Tensor<Scalar>::Array::Zero(out_d);
  Eigen::Map<const MatrixRM> w(weights.data(), out_d, d);
  Eigen::Map<const MatrixRM> x(input.data(), input.batch(), d);
  Eigen::Map<const MatrixRM> gy(grad_out.data(), input.batch(), out_d);
  Eigen::Map<MatrixRM> gx(grads.input.data(), input.batch(), d);
  Eigen::Map<MatrixRM> gw(grads.weights.data(), out_d, d);
  gx.noalias() = gy * w;
  gw.noalias() = gy.transpose() * x;
  grads.bias = gy.colwise().sum().array().transpose();
  return grads;
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& input) {
  Tensor<Scalar> out(input.dims());
  out.array() = input.array().max(Scalar(0));
  return out;
}

template <typename Scalar>
Tensor<Scalar> relu_backward(const Tensor<Scalar>& input,
                             const Tensor<Scalar>& grad_out) {
  Tensor<Scalar> grad_in(input.dims());
  grad_in.array() =
      (input.array() > Scalar(0)).template cast<Scalar>() * grad_out.array();
  return grad_in;
}

// Row-wise softmax over the channel axis (logits laid out as (N, bins, 1, 1)).
template <typename Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& logits) {
  require(logits.height() == 1 && logits.width() == 1,
          "softmax expects (N, bins, 1, 1) logits, got ",
          logits.dims().to_string());
  Tensor<Scalar> out(logits.dims());
  const Index bins = logits.channels();
  for (Index n = 0; n < logits.batch(); ++n) {
    Scalar max_v = logits.at(n, 0, 0, 0);
    for (Index c = 1; c < bins; ++c) max_v = std::max(max_v, logits.at(n, c, 0, 0));
    Scalar sum = 0;
    for (Index c = 0; c < bins; ++c) {
      const Scalar e = std::exp(logits.at(n, c, 0, 0) - max_v);
      out.at(n, c, 0, 0) = e;
      sum += e;
    }
    for (Index c = 0; c < bins; ++c) out.at(n, c, 0, 0) /= sum;
  }
  return out;
}

}  // namespace afdc
