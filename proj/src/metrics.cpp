// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#include "proxyrender/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "proxyrender/errors.hpp"

namespace prox {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (k1 * L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

void check_pair(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw InvalidInput("metric: shape mismatch");
  if (a.rank() != 2 && !(a.rank() == 3 && (a.dim(2) == 1 || a.dim(2) == 3))) {
    throw InvalidInput("metric: expected [H, W], [H, W, 1] or [H, W, 3] frames");
  }
  if (a.empty()) throw InvalidInput("metric: empty frames");
}

/// Rec.601 luminance for RGB, pass-through for grayscale.
std::vector<double> luminance(const Tensor& t) {
  const std::size_t h = t.dim(0);
  const std::size_t w = t.dim(1);
  std::vector<double> out(h * w);
  if (t.rank() == 2 || t.dim(2) == 1) {
    for (std::size_t i = 0; i < h * w; ++i) out[i] = t[i];
  } else {
    for (std::size_t i = 0; i < h * w; ++i) {
      out[i] = 0.299 * t[i * 3] + 0.587 * t[i * 3 + 1] + 0.114 * t[i * 3 + 2];
    }
  }
  return out;
}

std::vector<double> gaussian_kernel() {
  std::vector<double> k(kWindow);
  const int half = kWindow / 2;
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - half;
    k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += k[static_cast<std::size_t>(i)];
  }
  for (double& v : k) v /= sum;
  return k;
}

double mse_to_psnr(double mse) {
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw InvalidInput("psnr: shape mismatch");
  if (a.empty()) throw InvalidInput("psnr: empty frames");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    se += d * d;
  }
  return mse_to_psnr(se / static_cast<double>(a.size()));
}

double psnr_masked(const Tensor& a, const Tensor& b, const std::vector<std::uint8_t>& mask) {
  check_pair(a, b);
  const std::size_t pixels = a.dim(0) * a.dim(1);
  const std::size_t ch = a.rank() == 3 ? a.dim(2) : 1;
  if (mask.size() != pixels) throw InvalidInput("psnr_masked: mask size mismatch");
  double se = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < pixels; ++p) {
    if (!mask[p]) continue;
    for (std::size_t c = 0; c < ch; ++c) {
      const double d = static_cast<double>(a[p * ch + c]) - static_cast<double>(b[p * ch + c]);
      se += d * d;
    }
    ++count;
  }
  if (count == 0) throw InvalidInput("psnr_masked: mask selects no pixels");
  return mse_to_psnr(se / static_cast<double>(count * ch));
}

namespace {

double ssim_impl(const Tensor& a, const Tensor& b, const std::vector<std::uint8_t>* mask) {
  check_pair(a, b);
  const int h = static_cast<int>(a.dim(0));
  const int w = static_cast<int>(a.dim(1));
  if (h < kWindow || w < kWindow) throw InvalidInput("ssim: frames must be at least 11x11");
  const std::vector<double> la = luminance(a);
  const std::vector<double> lb = luminance(b);
  const std::vector<double> kernel = gaussian_kernel();
  const int half = kWindow / 2;

  // Separable Gaussian of the five moment images, horizontal pass first.
  const int wv = w - 2 * half;  // valid count per row
  const int hv = h - 2 * half;
  auto hpass = [&](const std::vector<double>& src_a, const std::vector<double>& src_b,
                   std::vector<double>& ma, std::vector<double>& mb, std::vector<double>& maa,
                   std::vector<double>& mbb, std::vector<double>& mab) {
    ma.assign(static_cast<std::size_t>(h) * wv, 0.0);
    mb.assign(static_cast<std::size_t>(h) * wv, 0.0);
    maa.assign(static_cast<std::size_t>(h) * wv, 0.0);
    mbb.assign(static_cast<std::size_t>(h) * wv, 0.0);
    mab.assign(static_cast<std::size_t>(h) * wv, 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < wv; ++x) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (int k = 0; k < kWindow; ++k) {
          const std::size_t at = static_cast<std::size_t>(y) * w + x + k;
          const double va = src_a[at];
          const double vb = src_b[at];
          const double kw = kernel[static_cast<std::size_t>(k)];
          sa += kw * va;
          sb += kw * vb;
          saa += kw * va * va;
          sbb += kw * vb * vb;
          sab += kw * va * vb;
        }
        const std::size_t out = static_cast<std::size_t>(y) * wv + x;
        ma[out] = sa;
        mb[out] = sb;
        maa[out] = saa;
        mbb[out] = sbb;
        mab[out] = sab;
      }
    }
  };
  std::vector<double> ma, mb, maa, mbb, mab;
  hpass(la, lb, ma, mb, maa, mbb, mab);

  double total = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < hv; ++y) {
    for (int x = 0; x < wv; ++x) {
      if (mask) {
        const std::size_t center = static_cast<std::size_t>(y + half) * w + (x + half);
        if (!(*mask)[center]) continue;
      }
      double mu_a = 0, mu_b = 0, e_aa = 0, e_bb = 0, e_ab = 0;
      for (int k = 0; k < kWindow; ++k) {
        const std::size_t at = static_cast<std::size_t>(y + k) * wv + x;
        const double kw = kernel[static_cast<std::size_t>(k)];
        mu_a += kw * ma[at];
        mu_b += kw * mb[at];
        e_aa += kw * maa[at];
        e_bb += kw * mbb[at];
        e_ab += kw * mab[at];
      }
      const double var_a = e_aa - mu_a * mu_a;
      const double var_b = e_bb - mu_b * mu_b;
      const double cov = e_ab - mu_a * mu_b;
      const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
      const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
      total += num / den;
      ++count;
    }
  }
  if (count == 0) throw InvalidInput("ssim: mask selects no window centers");
  return total / static_cast<double>(count);
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) { return ssim_impl(a, b, nullptr); }

double ssim_masked(const Tensor& a, const Tensor& b, const std::vector<std::uint8_t>& mask) {
  if (mask.size() != a.dim(0) * a.dim(1)) throw InvalidInput("ssim_masked: mask size mismatch");
  return ssim_impl(a, b, &mask);
}

}  // namespace prox
