// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense 4-D NCHW tensor templated on scalar (float for training, double for
// gradient/oracle work), backed by an Eigen array. All layer operations are
// free functions over this type.

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "afdc/common.hpp"

namespace afdc {

struct Dims {
  Index n = 0, c = 0, h = 0, w = 0;

  Index count() const { return n * c * h * w; }
  bool operator==(const Dims&) const = default;
  std::string to_string() const {
    return detail::concat(n, "x", c, "x", h, "x", w);
  }
};

template <typename Scalar>
class Tensor {
  static_assert(std::is_floating_point_v<Scalar>);

 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Tensor() = default;
  explicit Tensor(Dims dims) : dims_(dims), values_(Array::Zero(dims.count())) {
    require(dims.n >= 1 && dims.c >= 1 && dims.h >= 1 && dims.w >= 1,
            "tensor dims must be positive, got ", dims.to_string());
  }
  Tensor(Index n, Index c, Index h, Index w) : Tensor(Dims{n, c, h, w}) {}

  static Tensor from_values(Dims dims, std::initializer_list<Scalar> values) {
    Tensor t(dims);
    require(static_cast<Index>(values.size()) == dims.count(),
            "value count ", values.size(), " does not match dims ",
            dims.to_string());
    Index i = 0;
    for (Scalar v : values) t.values_[i++] = v;
    return t;
  }

  const Dims& dims() const { return dims_; }
  Index batch() const { return dims_.n; }
  Index channels() const { return dims_.c; }
  Index height() const { return dims_.h; }
  Index width() const { return dims_.w; }
  Index size() const { return values_.size(); }

  Scalar& at(Index n, Index c, Index y, Index x) {
    return values_[offset(n, c, y, x)];
  }
  Scalar at(Index n, Index c, Index y, Index x) const {
    return values_[offset(n, c, y, x)];
  }

  Array& array() { return values_; }
  const Array& array() const { return values_; }
  Scalar* data() { return values_.data(); }
  const Scalar* data() const { return values_.data(); }

  // Optional same-shape gradient slot, used by parameter tensors.
  bool has_grad() const { return grad_.has_value(); }
  Array& grad() {
    if (!grad_) grad_ = Array::Zero(values_.size());
    return *grad_;
  }
  const Array& grad() const {
    require(grad_.has_value(), "tensor has no gradient slot");
    return *grad_;
  }
  void zero_grad() {
    if (grad_) grad_->setZero();
  }
  void drop_grad() { grad_.reset(); }

  bool all_finite() const { return values_.isFinite().all(); }

  // View of one batch item as a 1-batch tensor (copy; desk-scale sizes).
  Tensor slice(Index n) const {
    Tensor out(Dims{1, dims_.c, dims_.h, dims_.w});
    out.values_ = values_.segment(n * dims_.c * dims_.h * dims_.w,
                                  dims_.c * dims_.h * dims_.w);
    return out;
  }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(dims_);
    out.array() = values_.template cast<Other>();
    return out;
  }

 private:
  Index offset(Index n, Index c, Index y, Index x) const {
    return ((n * dims_.c + c) * dims_.h + y) * dims_.w + x;
  }

  Dims dims_;
  Array values_;
  std::optional<Array> grad_;
};

// --- AFDT binary file format ---------------------------------------------
// magic "AFDT" | u8 precision (0=f32, 1=f64) | 4x u32 LE dims (N,C,H,W) |
// values little-endian row-major. Round trips are bit-exact.

namespace tensor_io {

inline constexpr char kMagic[4] = {'A', 'F', 'D', 'T'};

template <typename Scalar>
void save(const Tensor<Scalar>& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open '", path, "' for writing");
  out.write(kMagic, 4);
  const char flag = std::is_same_v<Scalar, float> ? 0 : 1;
  out.put(flag);
  const Dims& d = t.dims();
  for (Index v : {d.n, d.c, d.h, d.w}) {
    const std::uint32_t u = static_cast<std::uint32_t>(v);
    out.write(reinterpret_cast<const char*>(&u), 4);
  }
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(Scalar)));
  require(out.good(), "write failed for '", path, "'");
}

struct Header {
  bool is_f64 = false;
  Dims dims;
};

inline Header read_header(std::istream& in, const std::string& path) {
  char magic[4];
  in.read(magic, 4);
  require(in.good() && std::memcmp(magic, kMagic, 4) == 0,
          "'", path, "' is not an AFDT tensor file");
  const int flag = in.get();
  require(flag == 0 || flag == 1, "'", path, "' has unknown precision flag ",
          flag);
  Header h;
  h.is_f64 = flag == 1;
  std::uint32_t dims[4];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  require(in.good(), "'", path, "' truncated in header");
  h.dims = Dims{static_cast<Index>(dims[0]), static_cast<Index>(dims[1]),
                static_cast<Index>(dims[2]), static_cast<Index>(dims[3])};
  return h;
}

template <typename Scalar>
Tensor<Scalar> load_payload(std::istream& in, const Header& h,
                            const std::string& path) {
  Tensor<Scalar> t(h.dims);
  in.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.size() * sizeof(Scalar)));
  require(in.gcount() ==
              static_cast<std::streamsize>(t.size() * sizeof(Scalar)),
          "'", path, "' truncated: expected ", t.size(), " values");
  return t;
}

// Loads with exact stored precision; throws if the file holds the other type.
template <typename Scalar>
Tensor<Scalar> load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open '", path, "'");
  const Header h = read_header(in, path);
  const bool want_f64 = std::is_same_v<Scalar, double>;
  require(h.is_f64 == want_f64, "'", path, "' stores ",
          h.is_f64 ? "f64" : "f32", ", caller requested ",
          want_f64 ? "f64" : "f32");
  return load_payload<Scalar>(in, h, path);
}

// Loads either precision and converts to the requested scalar.
template <typename Scalar>
Tensor<Scalar> load_as(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open '", path, "'");
  const Header h = read_header(in, path);
  if (h.is_f64) {
    if constexpr (std::is_same_v<Scalar, double>)
      return load_payload<double>(in, h, path);
    else
      return load_payload<double>(in, h, path).template cast<Scalar>();
  }
  if constexpr (std::is_same_v<Scalar, float>)
    return load_payload<float>(in, h, path);
  else
    return load_payload<float>(in, h, path).template cast<Scalar>();
}

}  // namespace tensor_io
}  // namespace afdc
