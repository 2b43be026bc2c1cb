// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// Heavy-ball SGD with momentum and the step learning-rate schedule:
//   v <- momentum * v + grad;  theta <- theta - lr * v

#pragma once

#include <Eigen/Core>
#include <string>

#include "afdc/common.hpp"

namespace afdc {

struct LrDrop {
  int epoch = 0;  // first epoch at which the dropped rate applies
  double factor = 1.0;
};

inline double lr_schedule(int epoch, double lr_initial, const LrDrop& drop) {
  return epoch < drop.epoch ? lr_initial : lr_initial * drop.factor;
}

// One parameter update. Throws on non-finite gradients so the caller can
// halt with its last good checkpoint; `velocity` must be zero-initialized to
// the parameter's size before the first step.
template <typename Scalar>
void sgd_momentum_step(Eigen::Array<Scalar, Eigen::Dynamic, 1>& params,
                       const Eigen::Array<Scalar, Eigen::Dynamic, 1>& grads,
                       Eigen::Array<Scalar, Eigen::Dynamic, 1>& velocity,
                       double lr, double momentum,
                       const std::string& name = "") {
  require(params.size() == grads.size() && params.size() == velocity.size(),
          "sgd step: shape mismatch for '", name, "'");
  require(grads.isFinite().all(),
          "sgd step aborted: non-finite gradient in '", name, "'");
  velocity = static_cast<Scalar>(momentum) * velocity + grads;
  params -= static_cast<Scalar>(lr) * velocity;
}

}  // namespace afdc
