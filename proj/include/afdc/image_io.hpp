// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary netpbm decoding/encoding: P5 (grayscale) and P6 (RGB), maxval 255
// only. Decoded pixels are scaled to [0,1] in a (1,C,H,W) tensor.

#pragma once

#include <string>

#include "afdc/tensor.hpp"

namespace afdc {

Tensor<float> load_netpbm(const std::string& path);
void save_netpbm(const Tensor<float>& image, const std::string& path);

// True when the file starts with a P5/P6 magic (cheap format sniff).
bool is_netpbm(const std::string& path);

}  // namespace afdc
