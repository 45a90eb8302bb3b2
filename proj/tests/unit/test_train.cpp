// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#include "proxyrender/train.hpp"

#include <doctest.h>

#include <cstring>
#include <numeric>
#include <vector>

#include "proxyrender/errors.hpp"
#include "proxyrender/model.hpp"
#include "proxyrender/rng.hpp"
#include "proxyrender/tensor.hpp"

namespace prox {
namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.dim = 12;
  cfg.depth = 1;
  cfg.heads = 2;
  cfg.head_dim = 6;
  cfg.patch = 1;
  return cfg;
}

Tensor random_image(std::size_t h, std::size_t w, Rng& rng) {
  Tensor t({h, w, 3});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform());
  return t;
}

/// Map with a valid central square and varying coordinates, plus background.
CoordinateMap random_map(int size, Rng& rng) {
  CoordinateMap map(size, size);
  const int lo = size / 4;
  const int hi = size - size / 4;
  for (int y = lo; y < hi; ++y) {
    for (int x = lo; x < hi; ++x) {
      const std::size_t at = static_cast<std::size_t>(y) * size + x;
      map.validity[at] = 1;
      for (int c = 0; c < 3; ++c) {
        map.coords[at * 3 + static_cast<std::size_t>(c)] = static_cast<float>(rng.uniform());
      }
      map.depth[at] = static_cast<float>(rng.uniform(1.0, 3.0));
    }
  }
  return map;
}

DatasetSample make_sample(int n_refs, int m_targets, int size, Rng& rng) {
  DatasetSample sample;
  for (int i = 0; i < n_refs; ++i) {
    ReferenceUnit unit;
    unit.image = random_image(static_cast<std::size_t>(size), static_cast<std::size_t>(size), rng);
    unit.coordmap = random_map(size, rng);
    sample.refs.push_back(std::move(unit));
  }
  for (int f = 0; f < m_targets; ++f) {
    sample.target_images.push_back(
        random_image(static_cast<std::size_t>(size), static_cast<std::size_t>(size), rng));
    sample.target_maps.push_back(random_map(size, rng));
  }
  return sample;
}

double mean_of(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  return std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(begin),
                         v.begin() + static_cast<std::ptrdiff_t>(end), 0.0) /
         static_cast<double>(end - begin);
}

TEST_SUITE("train") {

TEST_CASE("flow states interpolate between data and noise") {
  Rng rng(31);
  Tensor data({2, 4, 4, 3});
  Tensor noise(data.dims());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
    noise[i] = static_cast<float>(rng.normal());
  }

  const FlowState at_data = make_flow_state(data, noise, 0.0);
  CHECK(at_data.t == 0.0);
  CHECK(std::memcmp(at_data.x_t.data(), data.data(), data.size() * sizeof(float)) == 0);

  const FlowState at_noise = make_flow_state(data, noise, 1.0);
  CHECK(std::memcmp(at_noise.x_t.data(), noise.data(), noise.size() * sizeof(float)) == 0);

  const FlowState mid = make_flow_state(data, noise, 0.5);
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(mid.x_t[i] == doctest::Approx(0.5 * (data[i] + noise[i])).epsilon(1e-6));
  }

  CHECK_THROWS_AS(make_flow_state(data, Tensor({2, 4, 4, 1}), 0.5), InvalidInput);
  CHECK_THROWS_AS(make_flow_state(data, noise, -0.1), InvalidInput);
  CHECK_THROWS_AS(make_flow_state(data, noise, 1.1), InvalidInput);
}

TEST_CASE("training rejects degenerate requests") {
  MiniDiT<float> model(tiny_config(), 1);
  TrainConfig cfg;
  CHECK_THROWS_AS(train(model, {}, cfg), InvalidInput);
  Rng rng(32);
  const std::vector<DatasetSample> data = {make_sample(1, 1, 4, rng)};
  cfg.steps = 0;
  CHECK_THROWS_AS(train(model, data, cfg), InvalidInput);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  MiniDiT<float> model(tiny_config(), 2);
  const std::vector<float> before = model.params().values;
  Rng rng(33);
  const std::vector<DatasetSample> data = {make_sample(1, 1, 4, rng)};
  TrainConfig cfg;
  cfg.steps = 3;
  cfg.lr = 0.0;
  const TrainResult result = train(model, data, cfg);
  CHECK(result.steps_run == 3);
  CHECK(model.params().values == before);
}

TEST_CASE("training is deterministic for a fixed seed") {
  Rng rng(34);
  const std::vector<DatasetSample> data = {make_sample(1, 1, 4, rng)};
  TrainConfig cfg;
  cfg.steps = 25;
  cfg.seed = 7;

  MiniDiT<float> a(tiny_config(), 5);
  MiniDiT<float> b(tiny_config(), 5);
  const TrainResult ra = train(a, data, cfg);
  const TrainResult rb = train(b, data, cfg);
  CHECK(ra.loss_curve == rb.loss_curve);
  CHECK(a.params().values == b.params().values);
}

TEST_CASE("loss decreases when overfitting a single sample") {
  Rng rng(35);
  const std::vector<DatasetSample> data = {make_sample(1, 1, 8, rng)};
  MiniDiT<float> model(tiny_config(), 6);
  TrainConfig cfg;
  cfg.steps = 150;
  cfg.lr = 2e-3;
  cfg.warmup_steps = 10;
  cfg.cfg_dropout = 0.0;
  cfg.augment = false;
  cfg.shuffle_refs = false;
  cfg.seed = 11;
  const TrainResult result = train(model, data, cfg);
  REQUIRE(result.loss_curve.size() == 150);
  CHECK(result.initial_loss == result.loss_curve.front());
  const double head = mean_of(result.loss_curve, 0, 10);
  const double tail = mean_of(result.loss_curve, 140, 150);
  CHECK(tail < head);
  CHECK(result.final_smoothed_loss < result.initial_loss);

  // The trained model still produces valid frames.
  SamplerConfig scfg;
  scfg.steps = 4;
  scfg.seed = 1;
  const std::vector<Tensor> frames =
      sample_frames(model, data[0].refs, data[0].target_maps, std::nullopt, scfg);
  REQUIRE(frames.size() == 1);
  for (std::size_t i = 0; i < frames[0].size(); ++i) {
    CHECK(frames[0][i] >= 0.0f);
    CHECK(frames[0][i] <= 1.0f);
  }
}

TEST_CASE("augmentation and appearance hints keep training stable") {
  Rng rng(36);
  const std::vector<DatasetSample> data = {make_sample(2, 2, 4, rng)};
  MiniDiT<float> model(tiny_config(), 8);
  TrainConfig cfg;
  cfg.steps = 8;
  cfg.augment = true;
  cfg.appearance_prob = 1.0;
  const TrainResult result = train(model, data, cfg);
  CHECK(result.steps_run == 8);
  for (double loss : result.loss_curve) CHECK(std::isfinite(loss));
}

TEST_CASE("early stopping honors the smoothed-loss threshold") {
  Rng rng(37);
  const std::vector<DatasetSample> data = {make_sample(1, 1, 4, rng)};
  MiniDiT<float> model(tiny_config(), 9);
  TrainConfig cfg;
  cfg.steps = 100;
  cfg.early_stop_fraction = 2.0;  // trivially satisfied once eligible
  cfg.min_steps = 0;
  const TrainResult result = train(model, data, cfg);
  CHECK(result.steps_run == 20);  // eligibility floor
  CHECK(result.loss_curve.size() == 20);
}

TEST_CASE("exploding optimization reports divergence") {
  Rng rng(38);
  const std::vector<DatasetSample> data = {make_sample(1, 1, 4, rng)};
  MiniDiT<float> model(tiny_config(), 10);
  TrainConfig cfg;
  cfg.steps = 5;
  cfg.lr = 1e30;
  cfg.warmup_steps = 0;
  CHECK_THROWS_AS(train(model, data, cfg), Divergence);
}

TEST_CASE("sampling with an identity-velocity model is deterministic") {
  Rng rng(39);
  const DatasetSample sample = make_sample(2, 2, 4, rng);
  // Zero-initialized models predict zero velocity, so the sampler returns
  // the (clamped, re-encoded) initial noise untouched.
  const MiniDiT<float> model(tiny_config(), 11);
  SamplerConfig cfg;
  cfg.steps = 3;
  cfg.seed = 21;

  const std::vector<Tensor> a =
      sample_frames(model, sample.refs, sample.target_maps, std::nullopt, cfg);
  REQUIRE(a.size() == 2);
  for (const Tensor& frame : a) {
    CHECK(frame.dim(0) == 4);
    CHECK(frame.dim(1) == 4);
    CHECK(frame.dim(2) == 3);
    for (std::size_t i = 0; i < frame.size(); ++i) {
      CHECK(frame[i] >= 0.0f);
      CHECK(frame[i] <= 1.0f);
    }
  }

  const std::vector<Tensor> b =
      sample_frames(model, sample.refs, sample.target_maps, std::nullopt, cfg);
  for (std::size_t f = 0; f < a.size(); ++f) {
    CHECK(std::memcmp(a[f].data(), b[f].data(), a[f].size() * sizeof(float)) == 0);
  }

  SamplerConfig other = cfg;
  other.seed = 22;
  const std::vector<Tensor> c =
      sample_frames(model, sample.refs, sample.target_maps, std::nullopt, other);
  CHECK(std::memcmp(a[0].data(), c[0].data(), a[0].size() * sizeof(float)) != 0);

  // Guidance blends two zero velocities into zero: same frames, extra path.
  SamplerConfig guided = cfg;
  guided.guidance = 2.0;
  const std::vector<Tensor> d =
      sample_frames(model, sample.refs, sample.target_maps, std::nullopt, guided);
  for (std::size_t f = 0; f < a.size(); ++f) {
    CHECK(std::memcmp(a[f].data(), d[f].data(), a[f].size() * sizeof(float)) == 0);
  }
}

TEST_CASE("sampling validates its inputs") {
  Rng rng(40);
  const DatasetSample sample = make_sample(1, 2, 4, rng);
  const MiniDiT<float> model(tiny_config(), 12);
  SamplerConfig cfg;

  SamplerConfig bad_steps = cfg;
  bad_steps.steps = 0;
  CHECK_THROWS_AS(
      sample_frames(model, sample.refs, sample.target_maps, std::nullopt, bad_steps),
      InvalidInput);
  CHECK_THROWS_AS(sample_frames(model, {}, sample.target_maps, std::nullopt, cfg),
                  InvalidInput);
  CHECK_THROWS_AS(sample_frames(model, sample.refs, {}, std::nullopt, cfg), InvalidInput);
  const std::vector<Tensor> wrong_count = {sample.target_images[0]};
  CHECK_THROWS_AS(sample_frames(model, sample.refs, sample.target_maps, wrong_count, cfg),
                  InvalidInput);
}

}  // TEST_SUITE

}  // namespace
}  // namespace prox
