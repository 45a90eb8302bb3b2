// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "proxyrender/conditioning.hpp"
#include "proxyrender/errors.hpp"
#include "proxyrender/rng.hpp"

using prox::ConditioningSequence;
using prox::CoordinateMap;
using prox::ReferenceUnit;
using prox::TargetUnit;
using prox::Tensor;

namespace {

Tensor random_image(int h, int w, int ch, prox::Rng& rng) {
  Tensor t({static_cast<std::size_t>(h), static_cast<std::size_t>(w),
            static_cast<std::size_t>(ch)});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform());
  return t;
}

CoordinateMap random_map(int w, int h, prox::Rng& rng, double fg_prob = 0.7) {
  CoordinateMap map(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (rng.uniform() >= fg_prob) continue;
      const std::size_t at = map.index(x, y);
      map.validity[at] = 1;
      for (int c = 0; c < 3; ++c) map.coords[at * 3 + c] = static_cast<float>(rng.uniform());
      map.depth[at] = static_cast<float>(rng.uniform(1.0, 5.0));
    }
  }
  return map;
}

ReferenceUnit random_ref(int w, int h, prox::Rng& rng) {
  ReferenceUnit unit;
  unit.image = random_image(h, w, 3, rng);
  unit.coordmap = random_map(w, h, rng);
  return unit;
}

TargetUnit random_target(int w, int h, prox::Rng& rng, bool appearance = false) {
  TargetUnit unit;
  unit.coordmap = random_map(w, h, rng);
  unit.latent = random_image(h, w, prox::kLatentChannels, rng);
  if (appearance) unit.appearance = random_image(h, w, 3, rng);
  return unit;
}

}  // namespace

TEST_SUITE("conditioning") {

TEST_CASE("reference stack channel layout") {
  CoordinateMap map(2, 1);
  map.validity[0] = 1;
  map.coords[0] = 0.25f;
  map.coords[1] = 0.5f;
  map.coords[2] = 0.75f;
  // pixel (1,0) stays background
  ReferenceUnit unit;
  unit.coordmap = map;
  unit.image = Tensor({1, 2, 3});
  unit.image.at(0, 0, 0) = 0.1f;
  unit.image.at(0, 0, 1) = 0.2f;
  unit.image.at(0, 0, 2) = 0.3f;
  unit.image.at(0, 1, 0) = 0.9f;

  const Tensor stack = prox::pack_reference(unit);
  REQUIRE(stack.dims() == std::vector<std::size_t>{1, 2, 7});
  CHECK(stack.at(0, 0, 0) == 0.1f);  // R
  CHECK(stack.at(0, 0, 3) == 0.25f);  // Cx
  CHECK(stack.at(0, 0, 4) == 0.5f);   // Cy
  CHECK(stack.at(0, 0, 5) == 0.75f);  // Cz
  CHECK(stack.at(0, 0, 6) == 1.0f);   // mask
  CHECK(stack.at(0, 1, 0) == 0.9f);
  CHECK(stack.at(0, 1, 3) == 0.0f);  // background coords are zero
  CHECK(stack.at(0, 1, 6) == 0.0f);  // background mask
}

TEST_CASE("reference pack/unpack round trip") {
  prox::Rng rng(21);
  const ReferenceUnit unit = random_ref(6, 4, rng);
  const ReferenceUnit back = prox::unpack_reference(prox::pack_reference(unit));
  CHECK(std::memcmp(back.image.data(), unit.image.data(),
                    unit.image.size() * sizeof(float)) == 0);
  CHECK(back.coordmap.validity == unit.coordmap.validity);
  CHECK(std::memcmp(back.coordmap.coords.data(), unit.coordmap.coords.data(),
                    unit.coordmap.coords.size() * sizeof(float)) == 0);
}

TEST_CASE("target pack/unpack round trip with and without appearance") {
  prox::Rng rng(22);
  for (const bool with_appearance : {false, true}) {
    const TargetUnit unit = random_target(6, 4, rng, with_appearance);
    const Tensor stack = prox::pack_target(unit);
    REQUIRE(stack.dims() == std::vector<std::size_t>{4, 6, 11});
    CHECK(stack.at(0, 0, 10) == (with_appearance ? 1.0f : 0.0f));  // has_A flag

    const TargetUnit back = prox::unpack_target(stack);
    CHECK(back.appearance.has_value() == with_appearance);
    CHECK(std::memcmp(back.latent.data(), unit.latent.data(),
                      unit.latent.size() * sizeof(float)) == 0);
    CHECK(back.coordmap.validity == unit.coordmap.validity);
    if (with_appearance) {
      CHECK(std::memcmp(back.appearance->data(), unit.appearance->data(),
                        unit.appearance->size() * sizeof(float)) == 0);
    }
  }
}

TEST_CASE("mixed appearance in a target stack is rejected") {
  prox::Rng rng(23);
  std::vector<TargetUnit> targets;
  targets.push_back(random_target(4, 4, rng, true));
  targets.push_back(random_target(4, 4, rng, false));
  CHECK_THROWS_AS(prox::pack_target_stack(targets), prox::InvalidInput);

  targets[1].appearance = random_image(4, 4, 3, rng);
  const Tensor ok = prox::pack_target_stack(targets);
  CHECK(ok.dims() == std::vector<std::size_t>{2, 4, 4, 11});
}

TEST_CASE("patchify golden layout") {
  // One 2x2 frame, 1 channel: the single token must read (dy, dx) raster order.
  Tensor stack({1, 2, 2, 1});
  stack[0] = 1.0f;
  stack[1] = 2.0f;
  stack[2] = 3.0f;
  stack[3] = 4.0f;
  const Tensor tokens = prox::patchify(stack, 2);
  REQUIRE(tokens.dims() == std::vector<std::size_t>{1, 4});
  CHECK(tokens[0] == 1.0f);
  CHECK(tokens[1] == 2.0f);
  CHECK(tokens[2] == 3.0f);
  CHECK(tokens[3] == 4.0f);

  // Two channels interleave within each pixel: layout is (dy, dx, c).
  Tensor two({1, 2, 2, 2});
  for (std::size_t i = 0; i < two.size(); ++i) two[i] = static_cast<float>(i);
  const Tensor tok2 = prox::patchify(two, 2);
  CHECK(tok2[0] == 0.0f);  // (0,0,c0)
  CHECK(tok2[1] == 1.0f);  // (0,0,c1)
  CHECK(tok2[2] == 2.0f);  // (0,1,c0)
}

TEST_CASE("patchify/unpatchify is a bit-exact round trip") {
  prox::Rng rng(24);
  Tensor stack({3, 4, 6, 5});
  for (std::size_t i = 0; i < stack.size(); ++i) stack[i] = static_cast<float>(rng.normal());

  const Tensor tokens = prox::patchify(stack, 2);
  REQUIRE(tokens.dims() == std::vector<std::size_t>{3 * 2 * 3, 5 * 4});
  const Tensor back =
      prox::unpatchify(tokens, prox::PatchLayout{3, 4, 6, 5, 2});
  REQUIRE(back.dims() == stack.dims());
  CHECK(std::memcmp(back.data(), stack.data(), stack.size() * sizeof(float)) == 0);

  CHECK_THROWS_AS(prox::patchify(stack, 5), prox::InvalidInput);  // 4 % 5 != 0
  CHECK_THROWS_AS(prox::unpatchify(tokens, prox::PatchLayout{3, 4, 6, 4, 2}),
                  prox::InvalidInput);
}

TEST_CASE("assemble builds the joint token sequence") {
  prox::Rng rng(25);
  std::vector<ReferenceUnit> refs = {random_ref(8, 8, rng), random_ref(8, 8, rng)};
  std::vector<TargetUnit> targets = {random_target(8, 8, rng), random_target(8, 8, rng),
                                     random_target(8, 8, rng)};
  const ConditioningSequence seq = prox::assemble(refs, targets, 3, 2);

  CHECK(seq.n_refs == 2);
  CHECK(seq.m_targets == 3);
  CHECK(seq.grid_h == 4);
  CHECK(seq.grid_w == 4);
  CHECK(seq.tokens_per_frame() == 16);
  CHECK(seq.token_count() == 5 * 16);
  CHECK(seq.target_token_begin() == 32);
  REQUIRE(seq.indices.size() == 80);
  REQUIRE(seq.is_reference.size() == 80);
  CHECK(seq.ref_tokens.dims() == std::vector<std::size_t>{32, 7 * 4});
  CHECK(seq.target_tokens.dims() == std::vector<std::size_t>{48, 11 * 4});

  // temporal indices: refs at -6, -3 then targets at 0, 1, 2
  CHECK(seq.indices[0] == prox::TokenIndex3D{-6, 0, 0});
  CHECK(seq.indices[1] == prox::TokenIndex3D{-6, 0, 1});
  CHECK(seq.indices[16] == prox::TokenIndex3D{-3, 0, 0});
  CHECK(seq.indices[32] == prox::TokenIndex3D{0, 0, 0});
  CHECK(seq.indices[79] == prox::TokenIndex3D{2, 3, 3});
  CHECK(seq.is_reference[31] == 1);
  CHECK(seq.is_reference[32] == 0);

  // Token-count formula over randomized shapes.
  for (int trial = 0; trial < 20; ++trial) {
    const int p = 1 + static_cast<int>(rng.uniform_index(3));
    const int n = 1 + static_cast<int>(rng.uniform_index(3));
    const int m = 1 + static_cast<int>(rng.uniform_index(4));
    const int h = p * (1 + static_cast<int>(rng.uniform_index(4)));
    const int w = p * (1 + static_cast<int>(rng.uniform_index(4)));
    std::vector<ReferenceUnit> r;
    std::vector<TargetUnit> t;
    for (int i = 0; i < n; ++i) r.push_back(random_ref(w, h, rng));
    for (int i = 0; i < m; ++i) t.push_back(random_target(w, h, rng));
    const ConditioningSequence s = prox::assemble(r, t, 3, p);
    const std::size_t expect = static_cast<std::size_t>(n + m) *
                               static_cast<std::size_t>(h / p) *
                               static_cast<std::size_t>(w / p);
    CHECK(s.token_count() == expect);
    CHECK(s.indices.size() == expect);
    CHECK(s.ref_tokens.dims()[0] + s.target_tokens.dims()[0] == expect);
  }
}

TEST_CASE("assemble rejects inconsistent inputs") {
  prox::Rng rng(26);
  std::vector<ReferenceUnit> refs = {random_ref(8, 8, rng)};
  std::vector<TargetUnit> targets = {random_target(8, 8, rng)};

  CHECK_THROWS_AS(prox::assemble({}, targets, 3, 2), prox::InvalidInput);
  CHECK_THROWS_AS(prox::assemble(refs, {}, 3, 2), prox::InvalidInput);

  std::vector<TargetUnit> wrong = {random_target(4, 8, rng)};
  CHECK_THROWS_AS(prox::assemble(refs, wrong, 3, 2), prox::InvalidInput);
  CHECK_THROWS_AS(prox::assemble(refs, targets, 3, 3), prox::InvalidInput);  // 8 % 3
}

TEST_CASE("coordinate perturbation is seeded and leaves sigma=0 untouched") {
  prox::Rng rng(27);
  std::vector<TargetUnit> targets = {random_target(8, 8, rng), random_target(8, 8, rng)};

  const auto zero = prox::perturb_coordmaps(targets, 0.0, 7);
  for (std::size_t f = 0; f < targets.size(); ++f) {
    CHECK(std::memcmp(zero[f].coordmap.coords.data(), targets[f].coordmap.coords.data(),
                      targets[f].coordmap.coords.size() * sizeof(float)) == 0);
  }

  const auto a = prox::perturb_coordmaps(targets, 0.1, 7);
  const auto b = prox::perturb_coordmaps(targets, 0.1, 7);
  const auto c = prox::perturb_coordmaps(targets, 0.1, 8);
  bool a_differs_from_input = false;
  bool c_differs_from_a = false;
  for (std::size_t f = 0; f < targets.size(); ++f) {
    CHECK(std::memcmp(a[f].coordmap.coords.data(), b[f].coordmap.coords.data(),
                      a[f].coordmap.coords.size() * sizeof(float)) == 0);
    CHECK(a[f].coordmap.validity == targets[f].coordmap.validity);
    CHECK(a[f].coordmap.depth == targets[f].coordmap.depth);
    for (std::size_t i = 0; i < a[f].coordmap.coords.size(); ++i) {
      a_differs_from_input |= a[f].coordmap.coords[i] != targets[f].coordmap.coords[i];
      c_differs_from_a |= a[f].coordmap.coords[i] != c[f].coordmap.coords[i];
      CHECK(a[f].coordmap.coords[i] >= 0.0f);
      CHECK(a[f].coordmap.coords[i] <= 1.0f);
    }
    // background pixels keep exact zero coords
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        if (targets[f].coordmap.valid_at(x, y)) continue;
        CHECK(a[f].coordmap.coord_at(x, y).norm() == 0.0f);
      }
    }
  }
  CHECK(a_differs_from_input);
  CHECK(c_differs_from_a);

  CHECK_THROWS_AS(prox::perturb_coordmaps(targets, -0.5, 7), prox::InvalidInput);
}

}  // TEST_SUITE
