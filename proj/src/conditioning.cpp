// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#include "proxyrender/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "proxyrender/errors.hpp"

namespace prox {

namespace {

void check_image(const Tensor& image, int height, int width, const char* what) {
  if (image.dims().size() != 3 || image.dims()[0] != static_cast<std::size_t>(height) ||
      image.dims()[1] != static_cast<std::size_t>(width) || image.dims()[2] != 3) {
    throw InvalidInput(std::string(what) + ": expected [" + std::to_string(height) +
                       ", " + std::to_string(width) + ", 3] image");
  }
}

}  // namespace

Tensor pack_reference(const ReferenceUnit& unit) {
  const int h = unit.coordmap.height;
  const int w = unit.coordmap.width;
  check_image(unit.image, h, w, "pack_reference");
  Tensor out({static_cast<std::size_t>(h), static_cast<std::size_t>(w),
              static_cast<std::size_t>(kRefChannels)});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t at = unit.coordmap.index(x, y);
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = unit.image.at(y, x, c);
      for (int c = 0; c < 3; ++c) out.at(y, x, 3 + c) = unit.coordmap.coords[at * 3 + c];
      out.at(y, x, 6) = unit.coordmap.validity[at] ? 1.0f : 0.0f;
    }
  }
  return out;
}

ReferenceUnit unpack_reference(const Tensor& stack) {
  if (stack.dims().size() != 3 || stack.dims()[2] != static_cast<std::size_t>(kRefChannels)) {
    throw InvalidInput("unpack_reference: expected [H, W, 7] stack");
  }
  const int h = static_cast<int>(stack.dims()[0]);
  const int w = static_cast<int>(stack.dims()[1]);
  ReferenceUnit unit;
  unit.image = Tensor({static_cast<std::size_t>(h), static_cast<std::size_t>(w), 3});
  unit.coordmap = CoordinateMap(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t at = unit.coordmap.index(x, y);
      for (int c = 0; c < 3; ++c) unit.image.at(y, x, c) = stack.at(y, x, c);
      for (int c = 0; c < 3; ++c) unit.coordmap.coords[at * 3 + c] = stack.at(y, x, 3 + c);
      unit.coordmap.validity[at] = stack.at(y, x, 6) > 0.5f ? 1 : 0;
    }
  }
  return unit;
}

Tensor pack_target(const TargetUnit& unit) {
  const int h = unit.coordmap.height;
  const int w = unit.coordmap.width;
  if (unit.latent.dims().size() != 3 ||
      unit.latent.dims()[0] != static_cast<std::size_t>(h) ||
      unit.latent.dims()[1] != static_cast<std::size_t>(w) ||
      unit.latent.dims()[2] != static_cast<std::size_t>(kLatentChannels)) {
    throw InvalidInput("pack_target: latent dims mismatch coordinate map");
  }
  if (unit.appearance) check_image(*unit.appearance, h, w, "pack_target appearance");
  const float has_a = unit.appearance ? 1.0f : 0.0f;
  Tensor out({static_cast<std::size_t>(h), static_cast<std::size_t>(w),
              static_cast<std::size_t>(kTargetChannels)});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t at = unit.coordmap.index(x, y);
      for (int c = 0; c < kLatentChannels; ++c) out.at(y, x, c) = unit.latent.at(y, x, c);
      for (int c = 0; c < 3; ++c) {
        out.at(y, x, kLatentChannels + c) = unit.coordmap.coords[at * 3 + c];
      }
      out.at(y, x, kLatentChannels + 3) = unit.coordmap.validity[at] ? 1.0f : 0.0f;
      for (int c = 0; c < 3; ++c) {
        out.at(y, x, kLatentChannels + 4 + c) =
            unit.appearance ? unit.appearance->at(y, x, c) : 0.0f;
      }
      out.at(y, x, kLatentChannels + 7) = has_a;
    }
  }
  return out;
}

TargetUnit unpack_target(const Tensor& stack) {
  if (stack.dims().size() != 3 ||
      stack.dims()[2] != static_cast<std::size_t>(kTargetChannels)) {
    throw InvalidInput("unpack_target: expected [H, W, 11] stack");
  }
  const int h = static_cast<int>(stack.dims()[0]);
  const int w = static_cast<int>(stack.dims()[1]);
  TargetUnit unit;
  unit.coordmap = CoordinateMap(w, h);
  unit.latent = Tensor({static_cast<std::size_t>(h), static_cast<std::size_t>(w),
                        static_cast<std::size_t>(kLatentChannels)});
  const bool has_a = h > 0 && w > 0 && stack.at(0, 0, kLatentChannels + 7) > 0.5f;
  if (has_a) {
    unit.appearance = Tensor({static_cast<std::size_t>(h), static_cast<std::size_t>(w), 3});
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t at = unit.coordmap.index(x, y);
      for (int c = 0; c < kLatentChannels; ++c) unit.latent.at(y, x, c) = stack.at(y, x, c);
      for (int c = 0; c < 3; ++c) {
        unit.coordmap.coords[at * 3 + c] = stack.at(y, x, kLatentChannels + c);
      }
      unit.coordmap.validity[at] = stack.at(y, x, kLatentChannels + 3) > 0.5f ? 1 : 0;
      if (has_a) {
        for (int c = 0; c < 3; ++c) {
          unit.appearance->at(y, x, c) = stack.at(y, x, kLatentChannels + 4 + c);
        }
      }
    }
  }
  return unit;
}

Tensor pack_reference_stack(const std::vector<ReferenceUnit>& refs) {
  if (refs.empty()) throw InvalidInput("pack_reference_stack: no references");
  const int h = refs.front().coordmap.height;
  const int w = refs.front().coordmap.width;
  Tensor out({refs.size(), static_cast<std::size_t>(h), static_cast<std::size_t>(w),
              static_cast<std::size_t>(kRefChannels)});
  for (std::size_t f = 0; f < refs.size(); ++f) {
    if (refs[f].coordmap.height != h || refs[f].coordmap.width != w) {
      throw InvalidInput("pack_reference_stack: resolution mismatch");
    }
    const Tensor one = pack_reference(refs[f]);
    std::copy(one.data(), one.data() + one.size(), out.data() + f * one.size());
  }
  return out;
}

Tensor pack_target_stack(const std::vector<TargetUnit>& targets) {
  if (targets.empty()) throw InvalidInput("pack_target_stack: no targets");
  const int h = targets.front().coordmap.height;
  const int w = targets.front().coordmap.width;
  const bool has_a = targets.front().appearance.has_value();
  Tensor out({targets.size(), static_cast<std::size_t>(h), static_cast<std::size_t>(w),
              static_cast<std::size_t>(kTargetChannels)});
  for (std::size_t f = 0; f < targets.size(); ++f) {
    if (targets[f].coordmap.height != h || targets[f].coordmap.width != w) {
      throw InvalidInput("pack_target_stack: resolution mismatch");
    }
    if (targets[f].appearance.has_value() != has_a) {
      throw InvalidInput(
          "pack_target_stack: appearance must be present for all frames or none");
    }
    const Tensor one = pack_target(targets[f]);
    std::copy(one.data(), one.data() + one.size(), out.data() + f * one.size());
  }
  return out;
}

Tensor patchify(const Tensor& stack, int patch) {
  if (stack.dims().size() != 4) throw InvalidInput("patchify: expected [F, H, W, C]");
  if (patch < 1) throw InvalidInput("patchify: patch must be >= 1");
  const std::size_t frames = stack.dims()[0];
  const std::size_t h = stack.dims()[1];
  const std::size_t w = stack.dims()[2];
  const std::size_t ch = stack.dims()[3];
  const std::size_t p = static_cast<std::size_t>(patch);
  if (h % p != 0 || w % p != 0) {
    throw InvalidInput("patchify: spatial dims must be divisible by patch size");
  }
  const std::size_t gh = h / p;
  const std::size_t gw = w / p;
  Tensor tokens({frames * gh * gw, ch * p * p});
  std::size_t tok = 0;
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t py = 0; py < gh; ++py) {
      for (std::size_t px = 0; px < gw; ++px, ++tok) {
        float* dst = tokens.data() + tok * tokens.dims()[1];
        for (std::size_t dy = 0; dy < p; ++dy) {
          const float* src =
              stack.data() + ((f * h + py * p + dy) * w + px * p) * ch;
          std::copy(src, src + p * ch, dst);
          dst += p * ch;
        }
      }
    }
  }
  return tokens;
}

Tensor unpatchify(const Tensor& tokens, const PatchLayout& layout) {
  const std::size_t p = static_cast<std::size_t>(layout.patch);
  const std::size_t h = static_cast<std::size_t>(layout.height);
  const std::size_t w = static_cast<std::size_t>(layout.width);
  const std::size_t ch = static_cast<std::size_t>(layout.channels);
  const std::size_t frames = static_cast<std::size_t>(layout.frames);
  if (layout.patch < 1 || h % p != 0 || w % p != 0) {
    throw InvalidInput("unpatchify: layout dims must be divisible by patch size");
  }
  const std::size_t gh = h / p;
  const std::size_t gw = w / p;
  if (tokens.dims().size() != 2 || tokens.dims()[0] != frames * gh * gw ||
      tokens.dims()[1] != ch * p * p) {
    throw InvalidInput("unpatchify: token shape does not match layout");
  }
  Tensor stack({frames, h, w, ch});
  std::size_t tok = 0;
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t py = 0; py < gh; ++py) {
      for (std::size_t px = 0; px < gw; ++px, ++tok) {
        const float* src = tokens.data() + tok * tokens.dims()[1];
        for (std::size_t dy = 0; dy < p; ++dy) {
          float* dst = stack.data() + ((f * h + py * p + dy) * w + px * p) * ch;
          std::copy(src, src + p * ch, dst);
          src += p * ch;
        }
      }
    }
  }
  return stack;
}

ConditioningSequence assemble(const std::vector<ReferenceUnit>& refs,
                              const std::vector<TargetUnit>& targets, int gap,
                              int patch) {
  if (refs.empty()) throw InvalidInput("assemble: need at least one reference");
  if (targets.empty()) throw InvalidInput("assemble: need at least one target");
  const int h = refs.front().coordmap.height;
  const int w = refs.front().coordmap.width;
  for (const auto& t : targets) {
    if (t.coordmap.height != h || t.coordmap.width != w) {
      throw InvalidInput("assemble: resolution mismatch between refs and targets");
    }
  }
  if (patch < 1 || h % patch != 0 || w % patch != 0) {
    throw InvalidInput("assemble: resolution must be divisible by patch size");
  }

  ConditioningSequence seq;
  seq.n_refs = static_cast<int>(refs.size());
  seq.m_targets = static_cast<int>(targets.size());
  seq.patch = patch;
  seq.grid_h = h / patch;
  seq.grid_w = w / patch;
  seq.ref_tokens = patchify(pack_reference_stack(refs), patch);
  seq.target_tokens = patchify(pack_target_stack(targets), patch);

  const std::vector<std::int64_t> times =
      temporal_indices(seq.n_refs, seq.m_targets, gap);
  seq.indices.reserve(seq.token_count());
  seq.is_reference.reserve(seq.token_count());
  for (int f = 0; f < seq.n_refs + seq.m_targets; ++f) {
    for (int py = 0; py < seq.grid_h; ++py) {
      for (int px = 0; px < seq.grid_w; ++px) {
        seq.indices.push_back({times[static_cast<std::size_t>(f)], py, px});
        seq.is_reference.push_back(f < seq.n_refs ? 1 : 0);
      }
    }
  }
  return seq;
}

CoordinateMap perturb_coordmap(const CoordinateMap& map, double sigma, Rng& rng) {
  if (sigma < 0.0) throw InvalidInput("perturb_coordmap: sigma must be >= 0");
  CoordinateMap out = map;
  const std::size_t pixels =
      static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height);
  for (std::size_t at = 0; at < pixels; ++at) {
    if (!out.validity[at]) continue;
    for (int c = 0; c < 3; ++c) {
      const double decoded =
          static_cast<double>(out.coords[at * 3 + c]) * 2.0 - 1.0;
      const double noisy = std::clamp(decoded + sigma * rng.normal(), -1.0, 1.0);
      out.coords[at * 3 + c] = static_cast<float>((noisy + 1.0) * 0.5);
    }
  }
  return out;
}

std::vector<TargetUnit> perturb_coordmaps(const std::vector<TargetUnit>& targets,
                                          double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw InvalidInput("perturb_coordmaps: sigma must be >= 0");
  Rng rng(seed);
  std::vector<TargetUnit> out;
  out.reserve(targets.size());
  for (std::size_t f = 0; f < targets.size(); ++f) {
    Rng frame_rng = rng.fork(f);
    TargetUnit unit = targets[f];
    unit.coordmap = perturb_coordmap(unit.coordmap, sigma, frame_rng);
    out.push_back(std::move(unit));
  }
  return out;
}

}  // namespace prox
