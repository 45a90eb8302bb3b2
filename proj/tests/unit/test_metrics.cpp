// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#include "proxyrender/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

#include "proxyrender/errors.hpp"
#include "proxyrender/rng.hpp"
#include "proxyrender/tensor.hpp"

namespace prox {
namespace {

Tensor constant_frame(std::size_t h, std::size_t w, std::size_t ch, float value) {
  return Tensor({h, w, ch}, value);
}

Tensor random_frame(std::size_t h, std::size_t w, std::size_t ch, Rng& rng) {
  Tensor t({h, w, ch});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform());
  return t;
}

TEST_SUITE("metrics") {

TEST_CASE("psnr of identical frames hits the cap") {
  Rng rng(11);
  const Tensor a = random_frame(8, 9, 3, rng);
  CHECK(psnr(a, a) == kPsnrCap);
  // Near-identical frames also cap instead of overflowing.
  Tensor b = a;
  b[0] += 1e-6f;
  CHECK(psnr(a, b) == kPsnrCap);
}

TEST_CASE("psnr golden values") {
  const Tensor zeros = constant_frame(4, 4, 3, 0.0f);
  const Tensor halves = constant_frame(4, 4, 3, 0.5f);
  const Tensor ones = constant_frame(4, 4, 3, 1.0f);
  // MSE 0.25 -> 10*log10(4).
  CHECK(psnr(zeros, halves) == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-12));
  // MSE 1 -> 0 dB.
  CHECK(psnr(zeros, ones) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("psnr is symmetric and rejects bad input") {
  Rng rng(12);
  const Tensor a = random_frame(6, 5, 3, rng);
  const Tensor b = random_frame(6, 5, 3, rng);
  CHECK(psnr(a, b) == doctest::Approx(psnr(b, a)).epsilon(1e-12));
  CHECK_THROWS_AS(psnr(a, Tensor({6, 5, 1})), InvalidInput);
  CHECK_THROWS_AS(psnr(Tensor(), Tensor()), InvalidInput);
}

TEST_CASE("masked psnr ignores pixels outside the mask") {
  const std::size_t h = 4, w = 4;
  Tensor a = constant_frame(h, w, 3, 0.25f);
  Tensor b = a;
  std::vector<std::uint8_t> mask(h * w, 0);
  for (std::size_t p = 0; p < h * w; ++p) mask[p] = p % 2 == 0 ? 1 : 0;
  // Corrupt only masked-out pixels: masked PSNR stays at the cap.
  for (std::size_t p = 0; p < h * w; ++p) {
    if (!mask[p]) {
      for (std::size_t c = 0; c < 3; ++c) b[p * 3 + c] = 1.0f;
    }
  }
  CHECK(psnr(a, b) < kPsnrCap);
  CHECK(psnr_masked(a, b, mask) == kPsnrCap);

  // Corrupting a masked pixel by 0.5 gives MSE 0.25 over the 8 masked
  // pixels scaled by how many entries differ: one channel of one pixel.
  Tensor c = a;
  c[0] = 0.75f;
  const double mse = 0.25 / (8.0 * 3.0);
  CHECK(psnr_masked(a, c, mask) == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-9));

  CHECK_THROWS_AS(psnr_masked(a, b, std::vector<std::uint8_t>(h * w - 1, 1)), InvalidInput);
  CHECK_THROWS_AS(psnr_masked(a, b, std::vector<std::uint8_t>(h * w, 0)), InvalidInput);
}

TEST_CASE("ssim of identical frames is one") {
  Rng rng(13);
  const Tensor a = random_frame(16, 20, 3, rng);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  const Tensor g = random_frame(11, 11, 1, rng);  // smallest legal frame
  CHECK(ssim(g, g) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim of constant frames matches the closed form") {
  // Every window is identical, so the mean equals the single-window value:
  // variances and covariance vanish and only the luminance term remains.
  const double va = 0.2, vb = 0.8;
  const Tensor a = constant_frame(12, 15, 1, static_cast<float>(va));
  const Tensor b = constant_frame(12, 15, 1, static_cast<float>(vb));
  const double c1 = 0.01 * 0.01;
  const double expected = (2.0 * va * vb + c1) / (va * va + vb * vb + c1);
  CHECK(ssim(a, b) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("ssim degrades with noise amplitude") {
  Rng rng(14);
  const Tensor a = random_frame(24, 24, 1, rng);
  Tensor small = a;
  Tensor large = a;
  Rng noise(15);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const float n = static_cast<float>(noise.normal());
    small[i] = std::min(1.0f, std::max(0.0f, small[i] + 0.02f * n));
    large[i] = std::min(1.0f, std::max(0.0f, large[i] + 0.3f * n));
  }
  const double s_small = ssim(a, small);
  const double s_large = ssim(a, large);
  CHECK(s_small > s_large);
  CHECK(s_small > 0.8);
  CHECK(s_large < 0.7);
}

TEST_CASE("rgb frames are compared by luminance") {
  // Shift red up and green down so the Rec.601 luminance is unchanged;
  // SSIM sees identical frames while PSNR does not.
  Rng rng(16);
  Tensor a = random_frame(16, 16, 3, rng);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = 0.3f + 0.4f * a[i];
  Tensor b({16, 16, 3});
  const double dr = 0.05;
  const double dg = -dr * 0.299 / 0.587;
  for (std::size_t p = 0; p < 16 * 16; ++p) {
    b[p * 3 + 0] = a[p * 3 + 0] + static_cast<float>(dr);
    b[p * 3 + 1] = a[p * 3 + 1] + static_cast<float>(dg);
    b[p * 3 + 2] = a[p * 3 + 2];
  }
  CHECK(psnr(a, b) < 40.0);
  CHECK(ssim(a, b) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("ssim input validation") {
  Rng rng(17);
  const Tensor a = random_frame(10, 32, 1, rng);
  CHECK_THROWS_AS(ssim(a, a), InvalidInput);  // height below the window
  const Tensor b = random_frame(32, 10, 1, rng);
  CHECK_THROWS_AS(ssim(b, b), InvalidInput);  // width below the window
  const Tensor c = random_frame(12, 12, 1, rng);
  CHECK_THROWS_AS(ssim(c, random_frame(12, 13, 1, rng)), InvalidInput);
}

TEST_CASE("masked ssim selects window centers") {
  Rng rng(18);
  const Tensor a = random_frame(13, 13, 1, rng);
  Tensor b = a;
  for (std::size_t i = 0; i < b.size(); ++i) {
    b[i] = std::min(1.0f, std::max(0.0f, b[i] + 0.1f * static_cast<float>(rng.normal())));
  }
  const std::vector<std::uint8_t> all(13 * 13, 1);
  CHECK(ssim_masked(a, b, all) == doctest::Approx(ssim(a, b)).epsilon(1e-12));

  // Only the central pixel masked: the mean reduces to that one window.
  std::vector<std::uint8_t> center(13 * 13, 0);
  center[6 * 13 + 6] = 1;
  const double single = ssim_masked(a, b, center);
  CHECK(std::isfinite(single));

  // A mask without any pixel in the valid-window interior fails.
  std::vector<std::uint8_t> corner(13 * 13, 0);
  corner[0] = 1;
  CHECK_THROWS_AS(ssim_masked(a, b, corner), InvalidInput);
  CHECK_THROWS_AS(ssim_masked(a, b, std::vector<std::uint8_t>(5, 1)), InvalidInput);
}

}  // TEST_SUITE

}  // namespace
}  // namespace prox
