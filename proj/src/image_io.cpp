// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0

#include "afdc/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <vector>

namespace afdc {
namespace {

// Reads the next header token, skipping whitespace and '#' comment lines.
std::string next_token(std::istream& in, const std::string& path) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  require(!token.empty(), "'", path, "': malformed netpbm header");
  return token;
}

Index parse_dim(const std::string& token, const std::string& path,
                const char* what) {
  require(!token.empty() &&
              std::all_of(token.begin(), token.end(),
                          [](unsigned char c) { return std::isdigit(c); }),
          "'", path, "': malformed ", what, " field '", token, "'");
  return static_cast<Index>(std::stoll(token));
}

}  // namespace

bool is_netpbm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  return in.good() && magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6');
}

Tensor<float> load_netpbm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open '", path, "'");

  const std::string magic = next_token(in, path);
  require(magic == "P5" || magic == "P6", "'", path,
          "': unsupported netpbm magic '", magic, "' (want binary P5/P6)");
  const Index channels = magic == "P6" ? 3 : 1;
  const Index width = parse_dim(next_token(in, path), path, "width");
  const Index height = parse_dim(next_token(in, path), path, "height");
  const Index maxval = parse_dim(next_token(in, path), path, "maxval");
  require(width >= 1 && height >= 1, "'", path, "': degenerate dims ", width,
          "x", height);
  require(maxval == 255, "'", path, "': unsupported maxval ", maxval,
          " (only 255)");

  // Exactly one whitespace byte separates the header from the payload; the
  // token reader has already consumed it.
  const Index count = width * height * channels;
  std::vector<unsigned char> raw(static_cast<std::size_t>(count));
  in.read(reinterpret_cast<char*>(raw.data()), count);
  require(in.gcount() == count, "'", path, "': truncated payload, expected ",
          count, " bytes, got ", in.gcount());

  // Interleaved rows -> planar NCHW, scaled to [0,1].
  Tensor<float> out(Dims{1, channels, height, width});
  for (Index y = 0; y < height; ++y)
    for (Index x = 0; x < width; ++x)
      for (Index c = 0; c < channels; ++c)
        out.at(0, c, y, x) =
            static_cast<float>(raw[(y * width + x) * channels + c]) / 255.0f;
  return out;
}

void save_netpbm(const Tensor<float>& image, const std::string& path) {
  require(image.batch() == 1, "netpbm writer expects a single image");
  require(image.channels() == 1 || image.channels() == 3,
          "netpbm writer expects 1 or 3 channels, got ", image.channels());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open '", path, "' for writing");
  out << (image.channels() == 3 ? "P6" : "P5") << "\n"
      << image.width() << " " << image.height() << "\n255\n";
  for (Index y = 0; y < image.height(); ++y)
    for (Index x = 0; x < image.width(); ++x)
      for (Index c = 0; c < image.channels(); ++c) {
        const float v = std::clamp(image.at(0, c, y, x), 0.0f, 1.0f);
        out.put(static_cast<char>(
            static_cast<int>(std::lround(v * 255.0f))));
      }
  require(out.good(), "write failed for '", path, "'");
}

}  // namespace afdc
