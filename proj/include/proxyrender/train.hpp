// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "proxyrender/model.hpp"
#include "proxyrender/synthdata.hpp"

namespace prox {

/// Rectified-flow interpolation x_t = (1-t)*data + t*noise, t in [0, 1]
/// (t = 0 is clean data, t = 1 pure noise). The model learns the constant
/// velocity data - noise.
struct FlowState {
  double t = 1.0;
  Tensor x_t;  // [M, H, W, C]
};

FlowState make_flow_state(const Tensor& data, const Tensor& noise, double t);

struct TrainConfig {
  int steps = 2000;
  double lr = 2e-3;
  int warmup_steps = 100;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double adam_eps = 1e-8;
  double cfg_dropout = 0.1;  // probability of training on the null reference
  int gap = 3;               // temporal index gap g for reference tokens
  std::uint64_t seed = 0;
  bool shuffle_refs = true;
  bool augment = true;          // random scale/translation of proxy coords
  double aug_scale_min = 0.95;
  double aug_scale_max = 1.05;
  double aug_translate = 0.05;  // in normalized coordinate units
  double appearance_prob = 0.0; // teacher-forced appearance guidance
  int log_every = 0;            // 0 = silent
  double early_stop_fraction = 0.0;  // stop when smoothed loss < frac * initial
  int min_steps = 0;
};

struct TrainResult {
  std::vector<double> loss_curve;  // one entry per executed step
  int steps_run = 0;
  double initial_loss = 0.0;
  double final_smoothed_loss = 0.0;
};

/// Single-threaded rectified-flow training over the dataset; one sample per
/// step. Throws Divergence on a non-finite loss.
TrainResult train(MiniDiT<float>& model, const std::vector<DatasetSample>& data,
                  const TrainConfig& cfg, std::ostream* log = nullptr);

struct SamplerConfig {
  int steps = 20;        // Euler steps S
  double guidance = 1.0; // w; 1 disables the unconditional pass
  std::uint64_t seed = 0;
  int gap = 3;
};

/// Euler sampling from pure noise at t=1 down to t=0, with classifier-free
/// guidance over reference dropout when guidance != 1. Returns M frames
/// [H, W, 3] in [0, 1]. Deterministic for a fixed seed.
std::vector<Tensor> sample_frames(const MiniDiT<float>& model,
                                  const std::vector<ReferenceUnit>& refs,
                                  const std::vector<CoordinateMap>& target_maps,
                                  const std::optional<std::vector<Tensor>>& appearance,
                                  const SamplerConfig& cfg);

// Checkpoints: one tensor-container record per named parameter segment plus
// a JSON sidecar (same path + ".json") carrying the config and segment list.
std::string checkpoint_sidecar_path(const std::string& weights_path);
void save_checkpoint(const MiniDiT<float>& model, const std::string& weights_path);
MiniDiT<float> load_checkpoint(const std::string& weights_path);

}  // namespace prox
