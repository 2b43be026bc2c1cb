// Copyright (c) 2026 afdc-net authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint layout: <dir>/manifest.json (format tag, config echo, parameter
// table) plus one AFDT tensor file per parameter.

#pragma once

#include <filesystem>
#include <fstream>

#include "afdc/net.hpp"
#include "json.hpp"

namespace afdc {

template <typename Scalar>
void Model<Scalar>::save_checkpoint(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "afdc-checkpoint/1";
  manifest["config"] = nlohmann::json::parse(network_config_to_json(cfg_));
  manifest["precision"] = std::is_same_v<Scalar, float> ? "f32" : "f64";
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    char file[32];
    std::snprintf(file, sizeof(file), "param%03zu.afdt", i);
    tensor_io::save(params_[i].value, (fs::path(dir) / file).string());
    const Dims& d = params_[i].value.dims();
    params.push_back({{"name", params_[i].name},
                      {"file", file},
                      {"dims", {d.n, d.c, d.h, d.w}}});
  }
  manifest["params"] = params;
  std::ofstream out(fs::path(dir) / "manifest.json");
  require(out.good(), "cannot write checkpoint manifest in '", dir, "'");
  out << manifest.dump(2) << "\n";
}

template <typename Scalar>
Model<Scalar> Model<Scalar>::load_checkpoint(const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  std::ifstream in(manifest_path);
  require(in.good(), "cannot open checkpoint manifest '", manifest_path, "'");
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const std::exception& e) {
    fail("checkpoint manifest '", manifest_path, "' is not valid JSON: ",
         e.what());
  }
  require(manifest.value("format", "") == "afdc-checkpoint/1",
          "'", manifest_path, "': unknown checkpoint format");
  NetworkConfig cfg = parse_network_config_json(manifest["config"].dump());
  Model model = Model::build(cfg, /*seed=*/0);
  const auto& params = manifest["params"];
  require(params.size() == model.params_.size(), "'", manifest_path,
          "': parameter count mismatch: ", params.size(), " vs ",
          model.params_.size());
  for (std::size_t i = 0; i < model.params_.size(); ++i) {
    const std::string file = params[i]["file"];
    Tensor<Scalar> value =
        tensor_io::load_as<Scalar>((fs::path(dir) / file).string());
    require(value.dims() == model.params_[i].value.dims(), "'", manifest_path,
            "': parameter '", model.params_[i].name, "' has dims ",
            value.dims().to_string(), ", expected ",
            model.params_[i].value.dims().to_string());
    model.params_[i].value = std::move(value);
  }
  return model;
}

}  // namespace afdc
