// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#include "proxyrender/evalharness.hpp"

#include <json.hpp>

#include <cstdio>

#include "proxyrender/conditioning.hpp"

namespace prox {

using nlohmann::json;

namespace {

struct FramePair {
  double psnr_sum = 0.0;
  double ssim_sum = 0.0;
  std::size_t count = 0;
};

void accumulate(FramePair& acc, const Tensor& generated, const Tensor& truth,
                const std::vector<std::uint8_t>* mask) {
  acc.psnr_sum += mask ? psnr_masked(generated, truth, *mask) : psnr(generated, truth);
  acc.ssim_sum += mask ? ssim_masked(generated, truth, *mask) : ssim(generated, truth);
  acc.count += 1;
}

std::string format_row(double a, double b, double c, bool first_is_int) {
  char buf[96];
  if (first_is_int) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f\n", static_cast<int>(a), b, c);
  } else {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f\n", a, b, c);
  }
  return buf;
}

}  // namespace

std::vector<SweepRow> robustness_sweep(const MiniDiT<float>& model,
                                       const std::vector<DatasetSample>& data,
                                       const std::vector<double>& sigmas,
                                       const SamplerConfig& sampler, std::uint64_t seed,
                                       bool foreground_only) {
  if (data.empty()) throw InvalidInput("robustness_sweep: dataset is empty");
  std::vector<SweepRow> rows;
  rows.reserve(sigmas.size());
  for (std::size_t si = 0; si < sigmas.size(); ++si) {
    const double sigma = sigmas[si];
    if (sigma < 0.0) throw InvalidInput("robustness_sweep: sigma must be >= 0");
    FramePair acc;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const DatasetSample& sample = data[i];
      // The same per-sample noise stream at every sigma: rows differ only
      // by perturbation magnitude, and sigma=0 is exactly plain evaluation.
      Rng pert_root(mix_seed(seed, i));
      std::vector<CoordinateMap> maps;
      maps.reserve(sample.target_maps.size());
      for (std::size_t f = 0; f < sample.target_maps.size(); ++f) {
        Rng frame_rng = pert_root.fork(f);
        maps.push_back(perturb_coordmap(sample.target_maps[f], sigma, frame_rng));
      }
      SamplerConfig cfg = sampler;
      cfg.seed = mix_seed(seed, 0x5a5a + i);
      const std::vector<Tensor> frames =
          sample_frames(model, sample.refs, maps, std::nullopt, cfg);
      for (std::size_t f = 0; f < frames.size(); ++f) {
        const std::vector<std::uint8_t>* mask =
            foreground_only ? &sample.target_maps[f].validity : nullptr;
        accumulate(acc, frames[f], sample.target_images[f], mask);
      }
    }
    rows.push_back({sigma, acc.psnr_sum / static_cast<double>(acc.count),
                    acc.ssim_sum / static_cast<double>(acc.count)});
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "sigma,mean_psnr,mean_ssim\n";
  for (const SweepRow& r : rows) {
    out += format_row(r.sigma, r.mean_psnr, r.mean_ssim, /*first_is_int=*/false);
  }
  return out;
}

std::string sweep_to_json(const std::vector<SweepRow>& rows) {
  json arr = json::array();
  for (const SweepRow& r : rows) {
    arr.push_back(json{{"sigma", r.sigma}, {"mean_psnr", r.mean_psnr},
                       {"mean_ssim", r.mean_ssim}});
  }
  return json{{"robustness_sweep", arr}}.dump(2);
}

double evaluate_psnr(const MiniDiT<float>& model, const std::vector<DatasetSample>& data,
                     const SamplerConfig& sampler, std::uint64_t seed) {
  if (data.empty()) throw InvalidInput("evaluate_psnr: dataset is empty");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const DatasetSample& sample = data[i];
    SamplerConfig cfg = sampler;
    cfg.seed = mix_seed(seed, 0x5a5a + i);
    const std::vector<Tensor> frames =
        sample_frames(model, sample.refs, sample.target_maps, std::nullopt, cfg);
    for (std::size_t f = 0; f < frames.size(); ++f) {
      sum += psnr(frames[f], sample.target_images[f]);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

std::vector<AblationRow> g_ablation(const std::vector<DatasetSample>& data,
                                    const std::vector<int>& gaps, const ModelConfig& model_cfg,
                                    const TrainConfig& train_cfg, const SamplerConfig& sampler,
                                    std::uint64_t model_seed) {
  if (data.empty()) throw InvalidInput("g_ablation: dataset is empty");
  std::vector<AblationRow> rows;
  rows.reserve(gaps.size());
  for (const int g : gaps) {
    if (g < 0) throw InvalidInput("g_ablation: gap must be >= 0");
    MiniDiT<float> model(model_cfg, model_seed);
    TrainConfig tcfg = train_cfg;
    tcfg.gap = g;
    const TrainResult result = train(model, data, tcfg);
    SamplerConfig scfg = sampler;
    scfg.gap = g;
    const double eval = evaluate_psnr(model, data, scfg, tcfg.seed);
    rows.push_back({g, result.final_smoothed_loss, eval});
  }
  return rows;
}

std::string ablation_to_csv(const std::vector<AblationRow>& rows) {
  std::string out = "g,final_loss,eval_psnr\n";
  for (const AblationRow& r : rows) {
    out += format_row(r.gap, r.final_loss, r.eval_psnr, /*first_is_int=*/true);
  }
  return out;
}

std::string ablation_to_json(const std::vector<AblationRow>& rows) {
  json arr = json::array();
  for (const AblationRow& r : rows) {
    arr.push_back(json{{"g", r.gap}, {"final_loss", r.final_loss},
                       {"eval_psnr", r.eval_psnr}});
  }
  return json{{"g_ablation", arr}}.dump(2);
}

}  // namespace prox
