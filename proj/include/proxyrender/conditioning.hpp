// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "proxyrender/coordmap.hpp"
#include "proxyrender/rng.hpp"
#include "proxyrender/rope3d.hpp"
#include "proxyrender/tensor.hpp"

namespace prox {

/// Channel widths of the packed conditioning stacks. The toy model runs in
/// pixel space, so the "latent" is plain RGB (3 channels).
inline constexpr int kLatentChannels = 3;
inline constexpr int kRefChannels = 7;     // R,G,B, Cx,Cy,Cz, mask
inline constexpr int kTargetChannels = kLatentChannels + 4 + 3 + 1;  // 11

/// A clean reference view: image paired with its coordinate map.
struct ReferenceUnit {
  Tensor image;  // [H, W, 3] in [0, 1]
  CoordinateMap coordmap;
};

/// A target frame to denoise: coordinate map, optional appearance-guidance
/// frame, and the current latent state.
struct TargetUnit {
  CoordinateMap coordmap;
  std::optional<Tensor> appearance;  // [H, W, 3] if present
  Tensor latent;                     // [H, W, kLatentChannels]
};

/// Patch-grid shape needed to invert patchify.
struct PatchLayout {
  int frames = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
  int patch = 1;
};

/// Token sequence fed to the transformer: reference tokens first, then
/// target tokens, each with a (t, h, w) rotary index.
struct ConditioningSequence {
  int n_refs = 0;
  int m_targets = 0;
  int patch = 1;
  int grid_h = 0;  // patches per column
  int grid_w = 0;  // patches per row
  Tensor ref_tokens;     // [N*grid_h*grid_w, kRefChannels*p*p]
  Tensor target_tokens;  // [M*grid_h*grid_w, kTargetChannels*p*p]
  std::vector<TokenIndex3D> indices;     // refs then targets
  std::vector<std::uint8_t> is_reference;

  std::size_t tokens_per_frame() const {
    return static_cast<std::size_t>(grid_h) * static_cast<std::size_t>(grid_w);
  }
  std::size_t token_count() const {
    return static_cast<std::size_t>(n_refs + m_targets) * tokens_per_frame();
  }
  /// First target token; everything before it is excluded from the loss.
  std::size_t target_token_begin() const {
    return static_cast<std::size_t>(n_refs) * tokens_per_frame();
  }
};

/// Stack a reference unit into [H, W, 7]: [R,G,B, Cx,Cy,Cz, mask].
Tensor pack_reference(const ReferenceUnit& unit);

/// Invert pack_reference. Depth is not part of the packed stack, so the
/// returned coordinate map carries background depth everywhere.
ReferenceUnit unpack_reference(const Tensor& stack);

/// Stack a target unit into [H, W, 11]:
/// [latent r,g,b, Cx,Cy,Cz, mask, Ar,Ag,Ab, has_A].
Tensor pack_target(const TargetUnit& unit);

/// Invert pack_target (appearance restored iff the has_A channel is 1).
TargetUnit unpack_target(const Tensor& stack);

/// Pack a whole sample's targets into [M, H, W, 11]. Appearance must be
/// present for all frames or none; mixing throws InvalidInput.
Tensor pack_target_stack(const std::vector<TargetUnit>& targets);

/// Pack references into [N, H, W, 7].
Tensor pack_reference_stack(const std::vector<ReferenceUnit>& refs);

/// Cut a [F, H, W, C] stack into [F*(H/p)*(W/p), C*p*p] tokens, raster-scan
/// order (frame-major, then patch row, then patch column). Within a token
/// the layout is (dy, dx, c), matching the row-major memory of a patch.
Tensor patchify(const Tensor& stack, int patch);

/// Exact inverse of patchify.
Tensor unpatchify(const Tensor& tokens, const PatchLayout& layout);

/// Build the joint sequence: references packed and patchified with temporal
/// indices {-N*g, ..., -g}, targets with {0, ..., M-1}.
ConditioningSequence assemble(const std::vector<ReferenceUnit>& refs,
                              const std::vector<TargetUnit>& targets, int gap,
                              int patch = 2);

/// Add i.i.d. Gaussian noise (std sigma, normalized-coordinate units) to the
/// decoded coordinate of every valid pixel, re-clamp to [-1,1], re-encode.
/// Validity and depth are untouched. Deterministic for a given seed.
std::vector<TargetUnit> perturb_coordmaps(const std::vector<TargetUnit>& targets,
                                          double sigma, std::uint64_t seed);

/// Same perturbation for a bare coordinate map (used by the eval harness).
CoordinateMap perturb_coordmap(const CoordinateMap& map, double sigma, Rng& rng);

}  // namespace prox
