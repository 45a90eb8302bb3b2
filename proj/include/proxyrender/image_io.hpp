// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "proxyrender/coordmap.hpp"
#include "proxyrender/tensor.hpp"

namespace prox {

// Minimal PNG support: 8-bit, non-interlaced, grayscale / RGB / RGBA.
// Enough to move reference images and generated frames in and out of the
// pipeline without an imaging dependency.

/// Write [H, W, 3] or [H, W, 1] floats in [0, 1] as an 8-bit PNG.
void write_png(const std::string& path, const Tensor& image);

/// Read a PNG into [H, W, 3] floats in [0, 1] (grayscale replicated,
/// alpha dropped). Throws IoError on malformed or unsupported files.
Tensor read_png(const std::string& path);

/// Preview image of a coordinate map: encoded coords where valid,
/// black background elsewhere.
Tensor coordmap_to_image(const CoordinateMap& map);

}  // namespace prox
