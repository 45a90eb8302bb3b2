// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <vector>

#include "proxyrender/conditioning.hpp"
#include "proxyrender/errors.hpp"
#include "proxyrender/model.hpp"
#include "proxyrender/rng.hpp"
#include "proxyrender/train.hpp"
#include "test_util.hpp"

using prox::ConditioningSequence;
using prox::MiniDiT;
using prox::ModelConfig;
using prox::ReferenceUnit;
using prox::TargetUnit;
using prox::Tensor;

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

Tensor random_image(int h, int w, int ch, prox::Rng& rng) {
  Tensor t({static_cast<std::size_t>(h), static_cast<std::size_t>(w),
            static_cast<std::size_t>(ch)});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform());
  return t;
}

prox::CoordinateMap random_map(int w, int h, prox::Rng& rng) {
  prox::CoordinateMap map(w, h);
  for (std::size_t at = 0; at < map.validity.size(); ++at) {
    if (rng.uniform() > 0.8) continue;
    map.validity[at] = 1;
    for (int c = 0; c < 3; ++c) map.coords[at * 3 + c] = static_cast<float>(rng.uniform());
    map.depth[at] = static_cast<float>(rng.uniform(1.0, 4.0));
  }
  return map;
}

ConditioningSequence tiny_sequence(int n_refs, int m_targets, int size, int patch,
                                   prox::Rng& rng, int gap = 3) {
  std::vector<ReferenceUnit> refs;
  for (int i = 0; i < n_refs; ++i) {
    refs.push_back({random_image(size, size, 3, rng), random_map(size, size, rng)});
  }
  std::vector<TargetUnit> targets;
  for (int i = 0; i < m_targets; ++i) {
    TargetUnit t;
    t.coordmap = random_map(size, size, rng);
    t.latent = random_image(size, size, prox::kLatentChannels, rng);
    targets.push_back(std::move(t));
  }
  return prox::assemble(refs, targets, gap, patch);
}

template <typename T>
void randomize_params(MiniDiT<T>& model, std::uint64_t seed, double scale = 0.05) {
  prox::Rng rng(seed);
  for (auto& v : model.params().values) v = static_cast<T>(rng.normal() * scale);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("config validation") {
  ModelConfig bad = tiny_config();
  bad.heads = 3;  // 3 * 6 != 12
  CHECK_THROWS_AS(bad.validate(), prox::InvalidInput);
  bad = tiny_config();
  bad.depth = 0;
  CHECK_THROWS_AS(bad.validate(), prox::InvalidInput);
  bad = tiny_config();
  bad.head_dim = 4;  // unsplittable across 3 axes
  bad.heads = 3;
  CHECK_THROWS_AS(bad.validate(), prox::InvalidInput);

  const ModelConfig cfg;  // defaults
  cfg.validate();
  CHECK(cfg.ref_token_dim() == 7 * 4);
  CHECK(cfg.target_token_dim() == 11 * 4);
  CHECK(cfg.out_dim() == 3 * 4);
}

TEST_CASE("freshly initialized model predicts zero velocity") {
  prox::Rng rng(31);
  const auto seq = tiny_sequence(1, 2, 4, 1, rng);
  const MiniDiT<float> model(tiny_config(), 7);
  const auto pred = model.forward(seq, 0.5, false);
  REQUIRE(pred.rows() == 32);  // 2 target frames x 16 tokens
  REQUIRE(pred.cols() == 3);
  CHECK(pred.cwiseAbs().maxCoeff() == 0.0f);  // zero-init head
}

TEST_CASE("construction is deterministic in the seed") {
  const MiniDiT<float> a(tiny_config(), 99);
  const MiniDiT<float> b(tiny_config(), 99);
  const MiniDiT<float> c(tiny_config(), 100);
  CHECK(a.params().values == b.params().values);
  CHECK(a.params().values != c.params().values);
}

TEST_CASE("condition channels start with zero projection columns") {
  const MiniDiT<float> model(tiny_config(), 3);
  const auto* seg = model.params().find("tgt_proj.weight");
  REQUIRE(seg != nullptr);
  // weight is [dim, 11 * p^2]; columns for channels >= latent_channels are zero
  const float* w = model.params().values.data() + seg->offset;
  bool live_nonzero = false;
  for (std::size_t row = 0; row < seg->shape[0]; ++row) {
    for (std::size_t col = 0; col < seg->shape[1]; ++col) {
      const std::size_t ch = col % prox::kTargetChannels;
      const float v = w[row * seg->shape[1] + col];
      if (ch >= static_cast<std::size_t>(prox::kLatentChannels)) {
        CHECK(v == 0.0f);
      } else {
        live_nonzero |= v != 0.0f;
      }
    }
  }
  CHECK(live_nonzero);
}

TEST_CASE("reference dropout routes through the null embedding") {
  prox::Rng rng(32);
  const auto seq = tiny_sequence(2, 1, 4, 1, rng);
  MiniDiT<float> model(tiny_config(), 7);
  randomize_params(model, 41);

  const auto with_refs = model.forward(seq, 0.3, false);
  const auto without = model.forward(seq, 0.3, true);
  CHECK((with_refs - without).cwiseAbs().maxCoeff() > 1e-6f);

  // Dropout result is independent of reference pixel content.
  auto seq2 = seq;
  for (std::size_t i = 0; i < seq2.ref_tokens.size(); ++i) seq2.ref_tokens[i] += 0.37f;
  const auto without2 = model.forward(seq2, 0.3, true);
  CHECK((without - without2).cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("outputs are invariant to a global temporal-index translation") {
  prox::Rng rng(33);
  auto seq = tiny_sequence(2, 2, 4, 1, rng);
  MiniDiT<double> model(tiny_config(), 11);
  randomize_params(model, 42);

  const auto base = model.forward(seq, 0.6, false);
  auto shifted = seq;
  for (auto& idx : shifted.indices) idx.t += 17;
  const auto moved = model.forward(shifted, 0.6, false);
  CHECK((moved - base).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("forward rejects inconsistent sequences") {
  prox::Rng rng(34);
  const auto seq = tiny_sequence(1, 1, 4, 1, rng);
  const MiniDiT<float> model(tiny_config(), 7);
  CHECK_THROWS_AS(model.forward(seq, -0.1, false), prox::InvalidInput);
  CHECK_THROWS_AS(model.forward(seq, 1.5, false), prox::InvalidInput);

  auto bad = seq;
  bad.patch = 2;
  CHECK_THROWS_AS(model.forward(bad, 0.5, false), prox::InvalidInput);
  auto bad2 = seq;
  bad2.indices.pop_back();
  CHECK_THROWS_AS(model.forward(bad2, 0.5, false), prox::InvalidInput);
}

TEST_CASE("analytic gradients match finite differences") {
  prox::Rng rng(35);
  const auto seq = tiny_sequence(1, 1, 4, 1, rng);
  MiniDiT<double> model(tiny_config(), 13);
  randomize_params(model, 43, 0.08);

  prox::RowMat<double> v_star(seq.target_tokens.dims()[0], model.config().out_dim());
  for (Eigen::Index i = 0; i < v_star.size(); ++i) {
    v_star.data()[i] = rng.normal() * 0.5;
  }

  const double t = 0.37;
  std::vector<double> grads;
  prox::rf_loss(model, seq, v_star, t, false, &grads);
  REQUIRE(grads.size() == model.params().size());

  auto& values = model.params().values;
  const double eps = 1e-5;
  double max_rel = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 400 && checked < 150; ++trial) {
    const std::size_t at = rng.uniform_index(values.size());
    const double keep = values[at];
    values[at] = keep + eps;
    const double up = prox::rf_loss(model, seq, v_star, t, false);
    values[at] = keep - eps;
    const double down = prox::rf_loss(model, seq, v_star, t, false);
    values[at] = keep;
    const double fd = (up - down) / (2.0 * eps);
    // Relative error with a floor: below ~1e-5 the central difference is
    // dominated by cancellation noise, not by the analytic gradient.
    const double denom = std::max({std::abs(fd), std::abs(grads[at])});
    if (denom < 1e-5) continue;
    max_rel = std::max(max_rel, std::abs(fd - grads[at]) / denom);
    ++checked;
  }
  CHECK(checked >= 100);
  CHECK(max_rel < 1e-4);
}

TEST_CASE("gradients flow into the null embedding only under dropout") {
  prox::Rng rng(36);
  const auto seq = tiny_sequence(1, 1, 4, 1, rng);
  MiniDiT<double> model(tiny_config(), 17);
  randomize_params(model, 44);
  prox::RowMat<double> v_star =
      prox::RowMat<double>::Constant(seq.target_tokens.dims()[0], model.config().out_dim(), 0.2);

  const auto* null_seg = model.params().find("null_ref");
  const auto* ref_seg = model.params().find("ref_proj.weight");
  REQUIRE((null_seg && ref_seg));
  auto segment_norm = [](const std::vector<double>& g, std::size_t off, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += g[off + i] * g[off + i];
    return std::sqrt(s);
  };

  std::vector<double> g_kept, g_dropped;
  prox::rf_loss(model, seq, v_star, 0.4, false, &g_kept);
  prox::rf_loss(model, seq, v_star, 0.4, true, &g_dropped);
  CHECK(segment_norm(g_kept, null_seg->offset, null_seg->size) == 0.0);
  CHECK(segment_norm(g_kept, ref_seg->offset, ref_seg->size) > 0.0);
  CHECK(segment_norm(g_dropped, null_seg->offset, null_seg->size) > 0.0);
  CHECK(segment_norm(g_dropped, ref_seg->offset, ref_seg->size) == 0.0);
}

TEST_CASE("rf_loss of the zero model equals the mean squared target") {
  prox::Rng rng(37);
  const auto seq = tiny_sequence(1, 2, 4, 1, rng);
  const MiniDiT<float> model(tiny_config(), 7);  // head zero-init => pred == 0
  prox::RowMat<float> v_star(seq.target_tokens.dims()[0], model.config().out_dim());
  double sum2 = 0.0;
  for (Eigen::Index i = 0; i < v_star.size(); ++i) {
    v_star.data()[i] = static_cast<float>(rng.normal());
    sum2 += static_cast<double>(v_star.data()[i]) * v_star.data()[i];
  }
  const double loss = prox::rf_loss(model, seq, v_star, 0.9, false);
  CHECK(loss == doctest::Approx(sum2 / static_cast<double>(v_star.size())).epsilon(1e-5));
}

TEST_CASE("checkpoint round trip preserves weights and config") {
  testutil::TempDir dir;
  ModelConfig cfg = tiny_config();
  cfg.depth = 2;
  MiniDiT<float> model(cfg, 5);
  randomize_params(model, 45);

  const std::string path = dir.file("model.gort");
  prox::save_checkpoint(model, path);
  CHECK(std::filesystem::exists(prox::checkpoint_sidecar_path(path)));

  const MiniDiT<float> back = prox::load_checkpoint(path);
  CHECK(back.config().dim == cfg.dim);
  CHECK(back.config().depth == cfg.depth);
  CHECK(back.params().values == model.params().values);
}

TEST_CASE("corrupt checkpoints are rejected") {
  testutil::TempDir dir;
  MiniDiT<float> model(tiny_config(), 5);
  const std::string path = dir.file("model.gort");
  prox::save_checkpoint(model, path);

  CHECK_THROWS_AS(prox::load_checkpoint(dir.file("absent.gort")), prox::IoError);

  {
    std::ofstream side(prox::checkpoint_sidecar_path(path));
    side << "{\"format\": \"something-else\"}";
  }
  CHECK_THROWS_AS(prox::load_checkpoint(path), prox::IoError);
}

}  // TEST_SUITE
