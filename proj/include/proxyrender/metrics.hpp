// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "proxyrender/tensor.hpp"

namespace prox {

/// Sentinel returned for (near-)identical images instead of +inf dB.
inline constexpr double kPsnrCap = 99.0;

/// Peak signal-to-noise ratio in dB for frames with values in [0, 1]:
/// 10*log10(1 / MSE), capped at kPsnrCap. Shapes must match.
double psnr(const Tensor& a, const Tensor& b);

/// PSNR over the pixels where mask != 0 only. The mask has one entry per
/// pixel ([H, W] for [H, W, C] frames). Throws when the mask is empty.
double psnr_masked(const Tensor& a, const Tensor& b, const std::vector<std::uint8_t>& mask);

/// Structural similarity: 11x11 Gaussian window (sigma 1.5), k1=0.01,
/// k2=0.03, dynamic range 1. RGB inputs are reduced to Rec.601 luminance.
/// The SSIM map is computed where the window fits entirely (valid mode) and
/// averaged. Requires dims >= 11x11.
double ssim(const Tensor& a, const Tensor& b);

/// SSIM averaged only over windows whose center pixel has mask != 0.
double ssim_masked(const Tensor& a, const Tensor& b, const std::vector<std::uint8_t>& mask);

}  // namespace prox
