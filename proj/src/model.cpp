// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#include "proxyrender/model.hpp"

#include <json.hpp>

#include <fstream>
#include <string>

#include "proxyrender/tensor.hpp"
#include "proxyrender/train.hpp"

namespace prox {

using nlohmann::json;

json model_config_to_json(const ModelConfig& cfg) {
  return json{{"dim", cfg.dim},
              {"depth", cfg.depth},
              {"heads", cfg.heads},
              {"head_dim", cfg.head_dim},
              {"patch", cfg.patch},
              {"latent_channels", cfg.latent_channels},
              {"theta_base", cfg.theta_base}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.dim = j.at("dim").get<int>();
  cfg.depth = j.at("depth").get<int>();
  cfg.heads = j.at("heads").get<int>();
  cfg.head_dim = j.at("head_dim").get<int>();
  cfg.patch = j.at("patch").get<int>();
  cfg.latent_channels = j.at("latent_channels").get<int>();
  cfg.theta_base = j.at("theta_base").get<double>();
  cfg.validate();
  return cfg;
}

std::string checkpoint_sidecar_path(const std::string& weights_path) {
  return weights_path + ".json";
}

void save_checkpoint(const MiniDiT<float>& model, const std::string& weights_path) {
  const ParamStore<float>& ps = model.params();
  std::ofstream out(weights_path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + weights_path);
  json seg_list = json::array();
  for (const auto& seg : ps.segments) {
    Tensor t(seg.shape);
    std::copy(ps.values.begin() + static_cast<std::ptrdiff_t>(seg.offset),
              ps.values.begin() + static_cast<std::ptrdiff_t>(seg.offset + seg.size),
              t.data());
    write_tensor_record(out, t);
    seg_list.push_back(json{{"name", seg.name}, {"shape", seg.shape}});
  }
  if (!out) throw IoError("checkpoint write failed: " + weights_path);

  json sidecar{{"format", "minidit-checkpoint"},
               {"version", 1},
               {"config", model_config_to_json(model.config())},
               {"segments", seg_list}};
  const std::string side_path = checkpoint_sidecar_path(weights_path);
  std::ofstream side(side_path);
  if (!side) throw IoError("cannot open checkpoint sidecar for writing: " + side_path);
  side << sidecar.dump(2) << "\n";
}

MiniDiT<float> load_checkpoint(const std::string& weights_path) {
  const std::string side_path = checkpoint_sidecar_path(weights_path);
  std::ifstream side(side_path);
  if (!side) throw IoError("cannot open checkpoint sidecar: " + side_path);
  json sidecar;
  try {
    side >> sidecar;
  } catch (const json::exception& e) {
    throw IoError("checkpoint sidecar parse error (" + side_path + "): " + e.what());
  }
  if (sidecar.value("format", "") != "minidit-checkpoint") {
    throw IoError("not a checkpoint sidecar: " + side_path);
  }
  const ModelConfig cfg = model_config_from_json(sidecar.at("config"));
  MiniDiT<float> model(cfg, /*seed=*/0);

  const std::vector<Tensor> records = read_tensor_records(weights_path);
  ParamStore<float>& ps = model.params();
  const auto& seg_list = sidecar.at("segments");
  if (records.size() != ps.segments.size() || seg_list.size() != ps.segments.size()) {
    throw IoError("checkpoint segment count mismatch: " + weights_path);
  }
  for (std::size_t i = 0; i < ps.segments.size(); ++i) {
    const auto& seg = ps.segments[i];
    if (seg_list[i].at("name").get<std::string>() != seg.name) {
      throw IoError("checkpoint segment name mismatch at index " + std::to_string(i) +
                    ": expected " + seg.name);
    }
    if (records[i].dims() != seg.shape) {
      throw IoError("checkpoint segment shape mismatch: " + seg.name);
    }
    std::copy(records[i].data(), records[i].data() + records[i].size(),
              ps.values.begin() + static_cast<std::ptrdiff_t>(seg.offset));
  }
  return model;
}

}  // namespace prox
