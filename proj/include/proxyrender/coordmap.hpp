// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "proxyrender/geometry.hpp"
#include "proxyrender/tensor.hpp"

namespace prox {

/// Image whose foreground pixels store the surface point's normalized
/// object-frame coordinates as colors. Background pixels carry coords
/// (0,0,0), validity 0 and depth +inf; the validity channel disambiguates
/// background from the legal corner color (0,0,0).
struct CoordinateMap {
  int width = 0;
  int height = 0;
  std::vector<float> coords;        // H*W*3 in [0,1]
  std::vector<std::uint8_t> validity;  // H*W, 1 = foreground
  std::vector<float> depth;         // H*W camera-space z, +inf background

  CoordinateMap() = default;
  CoordinateMap(int w, int h)
      : width(w),
        height(h),
        coords(static_cast<std::size_t>(w) * h * 3, 0.0f),
        validity(static_cast<std::size_t>(w) * h, 0),
        depth(static_cast<std::size_t>(w) * h, std::numeric_limits<float>::infinity()) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  bool valid_at(int x, int y) const { return validity[index(x, y)] != 0; }
  float depth_at(int x, int y) const { return depth[index(x, y)]; }
  Eigen::Vector3f coord_at(int x, int y) const {
    const std::size_t i = index(x, y) * 3;
    return {coords[i], coords[i + 1], coords[i + 2]};
  }
  std::size_t valid_count() const;

  /// [H, W, 5] tensor: coords x3, validity, depth.
  Tensor to_tensor() const;
  static CoordinateMap from_tensor(const Tensor& t);
};

/// Maps [-1,1]^3 to [0,1]^3 componentwise; out-of-range inputs clamp.
Eigen::Vector3f encode_coord(const Vec3& p_norm);
/// Exact inverse of encode_coord on representable values.
Vec3 decode_coord(const Eigen::Vector3f& rgb);

/// Per-pixel rasterization result shared by coordinate-map rendering and
/// Lambertian shading, so their coverage is identical by construction.
/// `bary` holds perspective-correct barycentrics of the parent triangle.
struct GBuffer {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> triangle;  // -1 = background
  std::vector<float> depth;            // +inf = background
  std::vector<double> bary;            // H*W*3

  GBuffer() = default;
  GBuffer(int w, int h)
      : width(w),
        height(h),
        triangle(static_cast<std::size_t>(w) * h, -1),
        depth(static_cast<std::size_t>(w) * h, std::numeric_limits<float>::infinity()),
        bary(static_cast<std::size_t>(w) * h * 3, 0.0) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

/// Z-buffered triangle rasterization with near-plane clipping.
/// Coverage rule: a pixel is covered iff its center lies inside the triangle,
/// inclusive on edges; depth ties go to the lower triangle index. No
/// back-face culling, no anti-aliasing.
GBuffer rasterize_gbuffer(const TriangleMesh& mesh, const Camera& camera);

/// Rasterize the proxy into a coordinate map (perspective-correct).
CoordinateMap rasterize_mesh(const TriangleMesh& mesh, const ObjectFrame& frame,
                             const Camera& camera);

/// Point-cloud variant: each point covers a filled disk of radius_px pixels;
/// the nearest point wins per pixel and its (constant) coordinate is stored.
CoordinateMap splat_points(const PointCloud& cloud, const ObjectFrame& frame,
                           const Camera& camera, double radius_px = 1.5);

/// Independent ground truth for rasterize_mesh: per-pixel ray casting
/// against every triangle (Moller-Trumbore), nearest hit wins.
CoordinateMap raycast_oracle(const TriangleMesh& mesh, const ObjectFrame& frame,
                             const Camera& camera);

/// Bilinear sample of decoded coordinates at pixel position (u, v).
/// Empty unless all four taps are valid foreground pixels.
std::optional<Vec3> sample_decoded_bilinear(const CoordinateMap& map, double u, double v);

/// Bilinear sample of the depth channel under the same validity rule.
std::optional<double> sample_depth_bilinear(const CoordinateMap& map, double u, double v);

}  // namespace prox
