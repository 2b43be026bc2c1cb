// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// 2-D convolution with per-axis integer dilation, stride and symmetric zero
// padding, plus its exact reverse-mode gradients. Implemented as im2col + one
// Eigen GEMM per batch item; accumulation order is fixed, so results are
// bitwise reproducible run to run.

#pragma once

#include <Eigen/Core>

#include "afdc/tensor.hpp"

namespace afdc {

struct Stride {
  Index h = 1, w = 1;
};
struct Padding {
  Index h = 0, w = 0;
};
struct Dilation {
  Index h = 1, w = 1;
};

template <typename Scalar>
struct ConvKernel {
  using Array = typename Tensor<Scalar>::Array;

  Index out_channels = 0;
  Index in_channels = 0;
  Index k_h = 0;
  Index k_w = 0;
  Array weights;  // (out_c, in_c, k_h, k_w) row-major
  Array bias;     // (out_c)
  Dilation dilation;
  Stride stride;
  Padding padding;

  ConvKernel() = default;
  ConvKernel(Index out_c, Index in_c, Index kh, Index kw, Dilation d = {},
             Stride s = {}, Padding p = {})
      : out_channels(out_c),
        in_channels(in_c),
        k_h(kh),
        k_w(kw),
        weights(Array::Zero(out_c * in_c * kh * kw)),
        bias(Array::Zero(out_c)),
        dilation(d),
        stride(s),
        padding(p) {
    require(out_c >= 1 && in_c >= 1 && kh >= 1 && kw >= 1,
            "kernel dims must be positive");
    require(d.h >= 1 && d.w >= 1, "dilation must be >= 1, got (", d.h, ",",
            d.w, ")");
    require(s.h >= 1 && s.w >= 1, "stride must be >= 1");
    require(p.h >= 0 && p.w >= 0, "padding must be >= 0");
  }

  Scalar& weight_at(Index oc, Index ic, Index ky, Index kx) {
    return weights[((oc * in_channels + ic) * k_h + ky) * k_w + kx];
  }
  Scalar weight_at(Index oc, Index ic, Index ky, Index kx) const {
    return weights[((oc * in_channels + ic) * k_h + ky) * k_w + kx];
  }

  Index weight_count() const { return weights.size(); }
  Index parameter_count() const { return weights.size() + bias.size(); }
};

// Effective extent of a dilated kernel along one axis: (k-1)*d + 1.
inline Index dilated_extent(Index k, Index d) { return (k - 1) * d + 1; }

// Output extent of the standard dilated-conv formula; throws when the dilated
// kernel does not fit in the padded input, naming the axis.
inline Index conv_output_extent(Index in, Index k, Index d, Index s, Index p,
                                const char* axis) {
  const Index extent = dilated_extent(k, d);
  require(extent <= in + 2 * p, "dilation too large on ", axis,
          " axis: effective extent ", extent, " exceeds padded input ",
          in + 2 * p);
  return (in + 2 * p - extent) / s + 1;
}

template <typename Scalar>
Dims conv_output_dims(const Dims& in, const ConvKernel<Scalar>& k) {
  require(in.c == k.in_channels, "shape mismatch on channel axis: input has ",
          in.c, " channels, kernel expects ", k.in_channels);
  return Dims{in.n, k.out_channels,
              conv_output_extent(in.h, k.k_h, k.dilation.h, k.stride.h,
                                 k.padding.h, "height"),
              conv_output_extent(in.w, k.k_w, k.dilation.w, k.stride.w,
                                 k.padding.w, "width")};
}

namespace detail {

// Gathers the (in_c*k_h*k_w) x (out_h*out_w) patch matrix for one batch item.
// Out-of-bounds taps read as zero (symmetric zero padding).
template <typename Scalar>
void im2col(const Tensor<Scalar>& input, Index n, const ConvKernel<Scalar>& k,
            const Dims& out,
            Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& cols) {
  const Index in_h = input.height(), in_w = input.width();
  cols.setZero();
  Index row = 0;
  for (Index ic = 0; ic < k.in_channels; ++ic) {
    for (Index ky = 0; ky < k.k_h; ++ky) {
      for (Index kx = 0; kx < k.k_w; ++kx, ++row) {
        Index col = 0;
        for (Index oy = 0; oy < out.h; ++oy) {
          const Index iy = oy * k.stride.h - k.padding.h + ky * k.dilation.h;
          if (iy < 0 || iy >= in_h) {
            col += out.w;
            continue;
          }
          for (Index ox = 0; ox < out.w; ++ox, ++col) {
            const Index ix = ox * k.stride.w - k.padding.w + kx * k.dilation.w;
            if (ix >= 0 && ix < in_w) cols(row, col) = input.at(n, ic, iy, ix);
          }
        }
      }
    }
  }
}

// Scatter-add of a patch-matrix gradient back onto the input gradient.
template <typename Scalar>
void col2im_add(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>&
                    cols,
                Index n, const ConvKernel<Scalar>& k, const Dims& out,
                Tensor<Scalar>& grad_input) {
  const Index in_h = grad_input.height(), in_w = grad_input.width();
  Index row = 0;
  for (Index ic = 0; ic < k.in_channels; ++ic) {
    for (Index ky = 0; ky < k.k_h; ++ky) {
      for (Index kx = 0; kx < k.k_w; ++kx, ++row) {
        Index col = 0;
        for (Index oy = 0; oy < out.h; ++oy) {
          const Index iy = oy * k.stride.h - k.padding.h + ky * k.dilation.h;
          if (iy < 0 || iy >= in_h) {
            col += out.w;
            continue;
          }
          for (Index ox = 0; ox < out.w; ++ox, ++col) {
            const Index ix = ox * k.stride.w - k.padding.w + kx * k.dilation.w;
            if (ix >= 0 && ix < in_w)
              grad_input.at(n, ic, iy, ix) += cols(row, col);
          }
        }
      }
    }
  }
}

}  // namespace detail

// Forward dilated convolution. Each output element is the dilated dot product
// plus (optionally) the bias.
template <typename Scalar>
Tensor<Scalar> conv2d_forward(const Tensor<Scalar>& input,
                              const ConvKernel<Scalar>& kernel,
                              bool add_bias = true) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using MatrixRM =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Dims out_dims = conv_output_dims(input.dims(), kernel);
  Tensor<Scalar> output(out_dims);

  const Index patch = kernel.in_channels * kernel.k_h * kernel.k_w;
  const Index spatial = out_dims.h * out_dims.w;
  Matrix cols(patch, spatial);
  Eigen::Map<const MatrixRM> w_mat(kernel.weights.data(), kernel.out_channels,
                                   patch);
  for (Index n = 0; n < input.batch(); ++n) {
    detail::im2col(input, n, kernel, out_dims, cols);
    Eigen::Map<MatrixRM> out_mat(
        output.data() + n * kernel.out_channels * spatial,
        kernel.out_channels, spatial);
    out_mat.noalias() = w_mat * cols;
    if (add_bias)
      out_mat.colwise() += kernel.bias.matrix().template cast<Scalar>();
  }
  return output;
}

template <typename Scalar>
struct ConvGrads {
  Tensor<Scalar> input;                     // dL/dinput
  typename Tensor<Scalar>::Array weights;   // dL/dweights, kernel layout
  typename Tensor<Scalar>::Array bias;      // dL/dbias
};

// Exact analytic gradients of conv2d_forward. `with_bias=false` skips the
// bias gradient (the AFDC blend adds its bias once outside the branches).
template <typename Scalar>
ConvGrads<Scalar> conv2d_backward(const Tensor<Scalar>& input,
                                  const ConvKernel<Scalar>& kernel,
                                  const Tensor<Scalar>& grad_out,
                                  bool with_bias = true) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using MatrixRM =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Dims out_dims = conv_output_dims(input.dims(), kernel);
  require(grad_out.dims() == out_dims, "grad_out dims ",
          grad_out.dims().to_string(), " do not match forward output ",
          out_dims.to_string());

  ConvGrads<Scalar> grads;
  grads.input = Tensor<Scalar>(input.dims());
  grads.weights = Tensor<Scalar>::Array::Zero(kernel.weight_count());
  grads.bias = Tensor<Scalar>::Array::Zero(kernel.out_channels);

  const Index patch = kernel.in_channels * kernel.k_h * kernel.k_w;
  const Index spatial = out_dims.h * out_dims.w;
  Matrix cols(patch, spatial);
  Matrix cols_grad(patch, spatial);
  Eigen::Map<const MatrixRM> w_mat(kernel.weights.data(), kernel.out_channels,
                                   patch);
  Eigen::Map<MatrixRM> gw_mat(grads.weights.data(), kernel.out_channels,
                              patch);
  for (Index n = 0; n < input.batch(); ++n) {
    Eigen::Map<const MatrixRM> go_mat(
        grad_out.data() + n * kernel.out_channels * spatial,
        kernel.out_channels, spatial);
    detail::im2col(input, n, kernel, out_dims, cols);
    gw_mat.noalias() += go_mat * cols.transpose();
    if (with_bias) grads.bias += go_mat.rowwise().sum().array();
    cols_grad.noalias() = w_mat.transpose() * go_mat;
    detail::col2im_add(cols_grad, n, kernel, out_dims, grads.input);
  }
  return grads;
}

}  // namespace afdc
