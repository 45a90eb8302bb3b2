// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#include "proxyrender/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace prox {

namespace {

/// Data lives in [0, 1]; the flow runs in [-1, 1] so the x0 endpoint has
/// comparable scale to unit Gaussian noise.
float to_latent(float v) { return 2.0f * v - 1.0f; }
float from_latent(float v) { return std::clamp(0.5f * (v + 1.0f), 0.0f, 1.0f); }

Tensor images_to_latents(const std::vector<Tensor>& frames) {
  const std::size_t h = frames.front().dim(0);
  const std::size_t w = frames.front().dim(1);
  Tensor out({frames.size(), h, w, frames.front().dim(2)});
  float* dst = out.data();
  for (const Tensor& f : frames) {
    for (std::size_t i = 0; i < f.size(); ++i) *dst++ = to_latent(f[i]);
  }
  return out;
}

/// Random scale + translation of the decoded normalized coordinates; the
/// same transform must hit every map in a sample or the cross-view
/// correspondence the model learns from would break.
CoordinateMap augment_coordmap(const CoordinateMap& map, double scale, const Vec3& shift) {
  CoordinateMap out = map;
  const std::size_t pixels = static_cast<std::size_t>(map.width) * map.height;
  for (std::size_t at = 0; at < pixels; ++at) {
    if (!out.validity[at]) continue;
    for (int c = 0; c < 3; ++c) {
      const double decoded = static_cast<double>(out.coords[at * 3 + c]) * 2.0 - 1.0;
      const double moved = std::clamp(decoded * scale + shift(c), -1.0, 1.0);
      out.coords[at * 3 + c] = static_cast<float>((moved + 1.0) * 0.5);
    }
  }
  return out;
}

RowMat<float> tokens_to_mat(const Tensor& tokens) {
  RowMat<float> m(static_cast<Eigen::Index>(tokens.dim(0)),
                  static_cast<Eigen::Index>(tokens.dim(1)));
  std::copy(tokens.data(), tokens.data() + tokens.size(), m.data());
  return m;
}

Tensor mat_to_tokens(const RowMat<float>& m) {
  Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  std::copy(m.data(), m.data() + m.size(), t.data());
  return t;
}

Tensor slice_frame3(const Tensor& stack, std::size_t f) {
  Tensor out({stack.dim(1), stack.dim(2), stack.dim(3)});
  std::copy(stack.data() + f * out.size(), stack.data() + (f + 1) * out.size(), out.data());
  return out;
}

}  // namespace

FlowState make_flow_state(const Tensor& data, const Tensor& noise, double t) {
  if (!data.same_shape(noise)) throw InvalidInput("make_flow_state: shape mismatch");
  if (t < 0.0 || t > 1.0) throw InvalidInput("make_flow_state: t must be in [0, 1]");
  FlowState st;
  st.t = t;
  st.x_t = Tensor(data.dims());
  const float tf = static_cast<float>(t);
  for (std::size_t i = 0; i < data.size(); ++i) {
    st.x_t[i] = (1.0f - tf) * data[i] + tf * noise[i];
  }
  return st;
}

TrainResult train(MiniDiT<float>& model, const std::vector<DatasetSample>& data,
                  const TrainConfig& cfg, std::ostream* log) {
  if (data.empty()) throw InvalidInput("train: dataset is empty");
  if (cfg.steps < 1) throw InvalidInput("train: steps must be >= 1");
  const int patch = model.config().patch;

  ParamStore<float>& ps = model.params();
  std::vector<float> grads(ps.size(), 0.0f);
  std::vector<float> m1(ps.size(), 0.0f);
  std::vector<float> m2(ps.size(), 0.0f);

  Rng root(mix_seed(cfg.seed, 0x747261696eULL));  // "train"
  TrainResult result;
  double smoothed = 0.0;

  for (int step = 0; step < cfg.steps; ++step) {
    Rng rng = root.fork(static_cast<std::uint64_t>(step));
    const DatasetSample& sample = data[rng.uniform_index(data.size())];
    const double t = rng.uniform();

    // Proxy augmentation (shared transform across every map in the sample).
    double scale = 1.0;
    Vec3 shift = Vec3::Zero();
    if (cfg.augment) {
      scale = rng.uniform(cfg.aug_scale_min, cfg.aug_scale_max);
      shift = Vec3(rng.uniform(-cfg.aug_translate, cfg.aug_translate),
                   rng.uniform(-cfg.aug_translate, cfg.aug_translate),
                   rng.uniform(-cfg.aug_translate, cfg.aug_translate));
    }

    // Reference order shuffle.
    std::vector<std::size_t> order(sample.refs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (cfg.shuffle_refs && order.size() > 1) {
      for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::swap(order[i], order[rng.uniform_index(i + 1)]);
      }
    }
    std::vector<ReferenceUnit> refs;
    refs.reserve(order.size());
    for (std::size_t i : order) {
      ReferenceUnit unit = sample.refs[i];
      if (cfg.augment) unit.coordmap = augment_coordmap(unit.coordmap, scale, shift);
      refs.push_back(std::move(unit));
    }

    const bool drop_refs = rng.uniform() < cfg.cfg_dropout;
    const bool with_appearance =
        cfg.appearance_prob > 0.0 && rng.uniform() < cfg.appearance_prob;

    const Tensor data_latents = images_to_latents(sample.target_images);
    Tensor noise(data_latents.dims());
    for (std::size_t i = 0; i < noise.size(); ++i) {
      noise[i] = static_cast<float>(rng.normal());
    }
    const FlowState flow = make_flow_state(data_latents, noise, t);

    std::vector<TargetUnit> targets;
    targets.reserve(sample.target_maps.size());
    for (std::size_t f = 0; f < sample.target_maps.size(); ++f) {
      TargetUnit unit;
      unit.coordmap = cfg.augment
                          ? augment_coordmap(sample.target_maps[f], scale, shift)
                          : sample.target_maps[f];
      if (with_appearance) unit.appearance = sample.target_images[f];
      unit.latent = slice_frame3(flow.x_t, f);
      targets.push_back(std::move(unit));
    }
    const ConditioningSequence seq = assemble(refs, targets, cfg.gap, patch);

    // Velocity target: data - noise, patchified into target-token rows.
    Tensor velocity(data_latents.dims());
    for (std::size_t i = 0; i < velocity.size(); ++i) {
      velocity[i] = data_latents[i] - noise[i];
    }
    const RowMat<float> v_star = tokens_to_mat(patchify(velocity, patch));

    std::fill(grads.begin(), grads.end(), 0.0f);
    const double loss = rf_loss(model, seq, v_star, t, drop_refs, &grads);
    if (!std::isfinite(loss)) {
      throw Divergence("train: non-finite loss at step " + std::to_string(step));
    }
    result.loss_curve.push_back(loss);
    smoothed = step == 0 ? loss : 0.95 * smoothed + 0.05 * loss;
    if (step == 0) result.initial_loss = loss;

    // AdamW with linear warmup.
    const double lr =
        cfg.lr * (cfg.warmup_steps > 0
                      ? std::min(1.0, (step + 1) / static_cast<double>(cfg.warmup_steps))
                      : 1.0);
    const double bc1 = 1.0 - std::pow(cfg.beta1, step + 1);
    const double bc2 = 1.0 - std::pow(cfg.beta2, step + 1);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const double g = grads[i];
      m1[i] = static_cast<float>(cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * g);
      m2[i] = static_cast<float>(cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * g * g);
      const double mh = m1[i] / bc1;
      const double vh = m2[i] / bc2;
      ps.values[i] = static_cast<float>(
          ps.values[i] - lr * (mh / (std::sqrt(vh) + cfg.adam_eps) +
                               cfg.weight_decay * ps.values[i]));
    }

    result.steps_run = step + 1;
    if (log && cfg.log_every > 0 && (step % cfg.log_every == 0 || step == cfg.steps - 1)) {
      (*log) << "step " << step << " loss " << loss << " smoothed " << smoothed << "\n";
    }
    if (cfg.early_stop_fraction > 0.0 && step + 1 >= std::max(cfg.min_steps, 20) &&
        smoothed < cfg.early_stop_fraction * result.initial_loss) {
      break;
    }
  }
  result.final_smoothed_loss = smoothed;
  return result;
}

std::vector<Tensor> sample_frames(const MiniDiT<float>& model,
                                  const std::vector<ReferenceUnit>& refs,
                                  const std::vector<CoordinateMap>& target_maps,
                                  const std::optional<std::vector<Tensor>>& appearance,
                                  const SamplerConfig& cfg) {
  if (cfg.steps < 1) throw InvalidInput("sample_frames: steps must be >= 1");
  if (refs.empty() || target_maps.empty()) {
    throw InvalidInput("sample_frames: need at least one reference and one target");
  }
  if (appearance && appearance->size() != target_maps.size()) {
    throw InvalidInput("sample_frames: appearance frame count mismatch");
  }
  const int patch = model.config().patch;
  const std::size_t m = target_maps.size();
  const std::size_t h = static_cast<std::size_t>(target_maps.front().height);
  const std::size_t w = static_cast<std::size_t>(target_maps.front().width);
  const std::size_t ch = static_cast<std::size_t>(model.config().latent_channels);

  Rng rng(mix_seed(cfg.seed, 0x73616d70ULL));  // "samp"
  Tensor x({m, h, w, ch});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(rng.normal());

  PatchLayout layout{static_cast<int>(m), static_cast<int>(h), static_cast<int>(w),
                     static_cast<int>(ch), patch};
  const double dt = 1.0 / cfg.steps;
  for (int s = cfg.steps; s >= 1; --s) {
    const double t = static_cast<double>(s) / cfg.steps;
    std::vector<TargetUnit> targets;
    targets.reserve(m);
    for (std::size_t f = 0; f < m; ++f) {
      TargetUnit unit;
      unit.coordmap = target_maps[f];
      if (appearance) unit.appearance = (*appearance)[f];
      unit.latent = slice_frame3(x, f);
      targets.push_back(std::move(unit));
    }
    const ConditioningSequence seq = assemble(refs, targets, cfg.gap, patch);
    RowMat<float> velocity = model.forward(seq, t, /*drop_refs=*/false);
    if (cfg.guidance != 1.0) {
      const RowMat<float> uncond = model.forward(seq, t, /*drop_refs=*/true);
      velocity = uncond + static_cast<float>(cfg.guidance) * (velocity - uncond);
    }
    const Tensor v_img = unpatchify(mat_to_tokens(velocity), layout);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += static_cast<float>(dt) * v_img[i];
    }
  }

  std::vector<Tensor> frames;
  frames.reserve(m);
  for (std::size_t f = 0; f < m; ++f) {
    Tensor frame = slice_frame3(x, f);
    for (std::size_t i = 0; i < frame.size(); ++i) frame[i] = from_latent(frame[i]);
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace prox
