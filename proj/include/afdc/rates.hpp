// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// Aspect ratios, dilation-rate sets and the interpolation weight vector that
// realizes a fractional dilation as a blend of the two nearest integer
// dilations. Rate pairs are (vertical, horizontal): a tall original, warped
// to a square, was stretched horizontally, so it dilates horizontally via
// pairs (1, d); wide originals dilate vertically via (d, 1).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "afdc/common.hpp"

namespace afdc {

enum class Orientation { square, tall, wide };

inline const char* to_string(Orientation o) {
  switch (o) {
    case Orientation::square: return "square";
    case Orientation::tall: return "tall";
    case Orientation::wide: return "wide";
  }
  return "?";
}

struct AspectRatio {
  Index orig_h = 1;
  Index orig_w = 1;
  double r = 1.0;  // max(h,w)/min(h,w), always >= 1
  Orientation orientation = Orientation::square;
};

inline AspectRatio compute_ratio(Index orig_h, Index orig_w) {
  require(orig_h >= 1 && orig_w >= 1, "image dims must be positive, got ",
          orig_h, "x", orig_w);
  AspectRatio a;
  a.orig_h = orig_h;
  a.orig_w = orig_w;
  a.r = static_cast<double>(std::max(orig_h, orig_w)) /
        static_cast<double>(std::min(orig_h, orig_w));
  a.orientation = orig_h > orig_w   ? Orientation::tall
                  : orig_w > orig_h ? Orientation::wide
                                    : Orientation::square;
  return a;
}

struct RatePair {
  int v = 1;  // vertical dilation
  int h = 1;  // horizontal dilation
  bool operator==(const RatePair&) const = default;
  std::string to_string() const { return detail::concat("(", v, ",", h, ")"); }
};

// An ordered set of dilation-rate pairs. Must contain (1,1); every pair has
// at least one component equal to 1 (the paper never dilates both axes).
class DilationRateSet {
 public:
  DilationRateSet() : DilationRateSet({{1, 1}}) {}
  explicit DilationRateSet(std::vector<RatePair> pairs)
      : pairs_(std::move(pairs)) {
    require(!pairs_.empty(), "rate set must not be empty");
    bool has_identity = false;
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const RatePair& p = pairs_[i];
      require(p.v >= 1 && p.h >= 1, "rate pair ", p.to_string(), " invalid");
      require(p.v == 1 || p.h == 1, "rate pair ", p.to_string(),
              " must have one component equal to 1");
      if (p == RatePair{1, 1}) has_identity = true;
      for (std::size_t j = i + 1; j < pairs_.size(); ++j)
        require(!(pairs_[j] == p), "duplicate rate pair ", p.to_string());
    }
    require(has_identity, "rate set must contain (1,1)");
  }

  // The mini-batch curriculum sets from the training recipe.
  static DilationRateSet three_kernel() {
    return DilationRateSet({{2, 1}, {1, 1}, {1, 2}});
  }
  static DilationRateSet seven_kernel() {
    return DilationRateSet(
        {{1, 4}, {1, 3}, {1, 2}, {1, 1}, {2, 1}, {3, 1}, {4, 1}});
  }

  // The minimal set covering ratios in [lo, hi] for both orientations:
  // {(1,1)} plus (1,d) and (d,1) for every integer d in [floor(lo), ceil(hi)]
  // clamped to max_rate.
  static DilationRateSet covering(double lo, double hi, int max_rate) {
    require(lo >= 1.0 && hi >= lo, "invalid ratio band [", lo, ",", hi, "]");
    std::vector<RatePair> pairs{{1, 1}};
    const int d_lo = std::max(2, static_cast<int>(std::floor(lo)));
    const int d_hi = std::min(max_rate, static_cast<int>(std::ceil(hi)));
    for (int d = d_lo; d <= d_hi; ++d) pairs.push_back({1, d});
    for (int d = d_lo; d <= d_hi; ++d) pairs.push_back({d, 1});
    return DilationRateSet(std::move(pairs));
  }

  std::size_t size() const { return pairs_.size(); }
  const RatePair& operator[](std::size_t i) const { return pairs_[i]; }
  const std::vector<RatePair>& pairs() const { return pairs_; }

  int index_of(const RatePair& p) const {
    for (std::size_t i = 0; i < pairs_.size(); ++i)
      if (pairs_[i] == p) return static_cast<int>(i);
    return -1;
  }

  // Pair realizing dilation d for images of the given orientation.
  // Squares and d == 1 map to (1,1).
  static RatePair pair_for(Orientation o, int d) {
    if (d <= 1) return {1, 1};
    return o == Orientation::wide ? RatePair{d, 1} : RatePair{1, d};
  }

  // Largest dilating component available for an orientation, including 1.
  int max_rate(Orientation o) const {
    int best = 1;
    for (const RatePair& p : pairs_) {
      if (o != Orientation::wide && p.v == 1) best = std::max(best, p.h);
      if (o != Orientation::tall && p.h == 1) best = std::max(best, p.v);
    }
    return best;
  }

  int max_rate() const {
    int best = 1;
    for (const RatePair& p : pairs_) best = std::max({best, p.v, p.h});
    return best;
  }

  bool operator==(const DilationRateSet&) const = default;

  std::string to_string() const {
    std::string s = "{";
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      if (i) s += ",";
      s += pairs_[i].to_string();
    }
    return s + "}";
  }

 private:
  std::vector<RatePair> pairs_;
};

// Zero-padded interpolation weight vector aligned to a DilationRateSet:
// at most two nonzero entries, on the pairs whose dilating components are
// the two integers bracketing r, summing to 1.
struct InterpolationWeights {
  std::vector<double> w;

  double sum() const {
    double s = 0;
    for (double v : w) s += v;
    return s;
  }
  int nonzeros() const {
    int n = 0;
    for (double v : w) n += v != 0.0;
    return n;
  }
};

namespace detail {
// Clamps r to the largest dilating component the set can realize for this
// orientation; ratios past the set annihilate every Eq.-7 weight otherwise.
inline double clamp_ratio(const AspectRatio& ratio, const DilationRateSet& set,
                          bool warn_on_clamp) {
  const double max_r = static_cast<double>(set.max_rate(ratio.orientation));
  if (ratio.r > max_r) {
    if (warn_on_clamp)
      warn(concat("aspect ratio ", ratio.r, " (", to_string(ratio.orientation),
                  ") exceeds rate set max ", max_r, "; clamping"));
    return max_r;
  }
  return ratio.r;
}

inline int require_pair(const DilationRateSet& set, Orientation o, int d) {
  const int idx = set.index_of(DilationRateSet::pair_for(o, d));
  require(idx >= 0, "rate set ", set.to_string(), " lacks the pair ",
          DilationRateSet::pair_for(o, d).to_string(), " needed for a ",
          to_string(o), " image");
  return idx;
}
}  // namespace detail

// The fractional interpolation weights: (ceil(r)-r) on the floor(r) pair and
// (r-floor(r)) on the ceil(r) pair. The floor/ceil bracketing is half-open,
// so an exactly-integer r puts full weight on that integer's kernel.
inline InterpolationWeights interpolation_weights(const AspectRatio& ratio,
                                                  const DilationRateSet& set) {
  InterpolationWeights out;
  out.w.assign(set.size(), 0.0);
  const double r = detail::clamp_ratio(ratio, set, /*warn_on_clamp=*/true);
  const int lo = static_cast<int>(std::floor(r));
  const int hi = static_cast<int>(std::ceil(r));
  if (lo == hi) {
    out.w[detail::require_pair(set, ratio.orientation, lo)] = 1.0;
    return out;
  }
  out.w[detail::require_pair(set, ratio.orientation, lo)] = hi - r;
  out.w[detail::require_pair(set, ratio.orientation, hi)] = r - lo;
  return out;
}

// Test-time weight construction modes (the ablation axis). All but
// `fractional` and `mean_of_two` are one-hot vectors.
enum class WeightMode {
  vanilla,                  // one-hot (1,1)
  constant21,               // one-hot (2,1) regardless of the image
  nearest_integer,          // one-hot round(r), half away from zero
  second_nearest_integer,   // one-hot on the farther of floor/ceil
  mean_of_two,              // 0.5/0.5 on floor/ceil regardless of fraction
  fractional,               // interpolation_weights
};

inline const char* to_string(WeightMode m) {
  switch (m) {
    case WeightMode::vanilla: return "vanilla";
    case WeightMode::constant21: return "constant21";
    case WeightMode::nearest_integer: return "nearest";
    case WeightMode::second_nearest_integer: return "second-nearest";
    case WeightMode::mean_of_two: return "mean2";
    case WeightMode::fractional: return "fractional";
  }
  return "?";
}

inline WeightMode parse_weight_mode(const std::string& s) {
  if (s == "vanilla") return WeightMode::vanilla;
  if (s == "constant21") return WeightMode::constant21;
  if (s == "nearest") return WeightMode::nearest_integer;
  if (s == "second-nearest") return WeightMode::second_nearest_integer;
  if (s == "mean2") return WeightMode::mean_of_two;
  if (s == "fractional") return WeightMode::fractional;
  fail("unknown weight mode '", s,
       "' (expected vanilla|constant21|nearest|second-nearest|mean2|"
       "fractional)");
}

inline const std::array<WeightMode, 6>& all_weight_modes() {
  static const std::array<WeightMode, 6> modes = {
      WeightMode::vanilla,           WeightMode::constant21,
      WeightMode::nearest_integer,   WeightMode::second_nearest_integer,
      WeightMode::mean_of_two,       WeightMode::fractional};
  return modes;
}

// Debug logging: one CSV row per rate pair, `sample,rate_v,rate_h,weight`.
inline std::string weights_csv_rows(Index sample_index,
                                    const DilationRateSet& set,
                                    const InterpolationWeights& weights) {
  std::string out;
  for (std::size_t k = 0; k < set.size(); ++k)
    out += detail::concat(sample_index, ",", set[k].v, ",", set[k].h, ",",
                          weights.w[k], "\n");
  return out;
}

inline InterpolationWeights test_mode_weights(const AspectRatio& ratio,
                                              const DilationRateSet& set,
                                              WeightMode mode) {
  if (mode == WeightMode::fractional) return interpolation_weights(ratio, set);

  InterpolationWeights out;
  out.w.assign(set.size(), 0.0);
  if (mode == WeightMode::vanilla) {
    out.w[detail::require_pair(set, Orientation::square, 1)] = 1.0;
    return out;
  }
  if (mode == WeightMode::constant21) {
    const int idx = set.index_of(RatePair{2, 1});
    require(idx >= 0, "rate set ", set.to_string(), " lacks (2,1)");
    out.w[idx] = 1.0;
    return out;
  }

  const double r = detail::clamp_ratio(ratio, set, /*warn_on_clamp=*/false);
  const int lo = static_cast<int>(std::floor(r));
  const int hi = static_cast<int>(std::ceil(r));
  switch (mode) {
    case WeightMode::nearest_integer: {
      const int d = static_cast<int>(std::llround(r));
      out.w[detail::require_pair(set, ratio.orientation, d)] = 1.0;
      return out;
    }
    case WeightMode::second_nearest_integer: {
      // For an exact integer the two nearest dilations coincide.
      const int near = static_cast<int>(std::llround(r));
      const int second = lo == hi ? lo : (near == lo ? hi : lo);
      out.w[detail::require_pair(set, ratio.orientation, second)] = 1.0;
      return out;
    }
    case WeightMode::mean_of_two: {
      if (lo == hi) {
        out.w[detail::require_pair(set, ratio.orientation, lo)] = 1.0;
      } else {
        out.w[detail::require_pair(set, ratio.orientation, lo)] = 0.5;
        out.w[detail::require_pair(set, ratio.orientation, hi)] = 0.5;
      }
      return out;
    }
    default:
      fail("unknown weight mode");
  }
}

}  // namespace afdc
