// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "proxyrender/metrics.hpp"
#include "proxyrender/train.hpp"

namespace prox {

struct SweepRow {
  double sigma = 0.0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

/// For each sigma: perturb every sample's target coordinate maps, sample
/// frames, and average PSNR/SSIM against the ground-truth targets.
/// Deterministic reduction order (samples then frames); the same base seed
/// makes the sigma=0 row equal plain evaluation.
std::vector<SweepRow> robustness_sweep(const MiniDiT<float>& model,
                                       const std::vector<DatasetSample>& data,
                                       const std::vector<double>& sigmas,
                                       const SamplerConfig& sampler, std::uint64_t seed,
                                       bool foreground_only = false);

/// Fixed column order: sigma,mean_psnr,mean_ssim.
std::string sweep_to_csv(const std::vector<SweepRow>& rows);
std::string sweep_to_json(const std::vector<SweepRow>& rows);

struct AblationRow {
  int gap = 0;
  double final_loss = 0.0;
  double eval_psnr = 0.0;
};

/// One training run per temporal gap value, all from the same model seed
/// and train config; values are recorded for comparison, not asserted.
std::vector<AblationRow> g_ablation(const std::vector<DatasetSample>& data,
                                    const std::vector<int>& gaps, const ModelConfig& model_cfg,
                                    const TrainConfig& train_cfg, const SamplerConfig& sampler,
                                    std::uint64_t model_seed);

/// Fixed column order: g,final_loss,eval_psnr.
std::string ablation_to_csv(const std::vector<AblationRow>& rows);
std::string ablation_to_json(const std::vector<AblationRow>& rows);

/// Mean PSNR of sampled frames vs ground truth over the whole dataset.
double evaluate_psnr(const MiniDiT<float>& model, const std::vector<DatasetSample>& data,
                     const SamplerConfig& sampler, std::uint64_t seed);

}  // namespace prox
