// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#include "proxyrender/coordmap.hpp"

#include <algorithm>
#include <cmath>

#include "proxyrender/errors.hpp"

namespace prox {

std::size_t CoordinateMap::valid_count() const {
  std::size_t n = 0;
  for (auto v : validity) n += v != 0;
  return n;
}

Tensor CoordinateMap::to_tensor() const {
  Tensor t({static_cast<std::size_t>(height), static_cast<std::size_t>(width), 5});
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t i = index(x, y);
      t.at(y, x, 0) = coords[i * 3 + 0];
      t.at(y, x, 1) = coords[i * 3 + 1];
      t.at(y, x, 2) = coords[i * 3 + 2];
      t.at(y, x, 3) = validity[i] ? 1.0f : 0.0f;
      t.at(y, x, 4) = depth[i];
    }
  return t;
}

CoordinateMap CoordinateMap::from_tensor(const Tensor& t) {
  if (t.rank() != 3 || t.dim(2) != 5)
    throw InvalidInput("coordinate map tensor must have dims [H, W, 5]");
  CoordinateMap map(static_cast<int>(t.dim(1)), static_cast<int>(t.dim(0)));
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x) {
      const std::size_t i = map.index(x, y);
      map.coords[i * 3 + 0] = t.at(y, x, 0);
      map.coords[i * 3 + 1] = t.at(y, x, 1);
      map.coords[i * 3 + 2] = t.at(y, x, 2);
      map.validity[i] = t.at(y, x, 3) > 0.5f ? 1 : 0;
      map.depth[i] = t.at(y, x, 4);
    }
  return map;
}

Eigen::Vector3f encode_coord(const Vec3& p_norm) {
  Eigen::Vector3f rgb;
  for (int i = 0; i < 3; ++i) {
    const double c = std::clamp(p_norm[i], -1.0, 1.0);
    rgb[i] = static_cast<float>((c + 1.0) * 0.5);
  }
  return rgb;
}

Vec3 decode_coord(const Eigen::Vector3f& rgb) {
  return {rgb[0] * 2.0 - 1.0, rgb[1] * 2.0 - 1.0, rgb[2] * 2.0 - 1.0};
}

namespace {

struct ClipVertex {
  Vec3 cam;   // camera-space position
  Vec3 bary;  // barycentric coordinates in the parent triangle
};

// Sutherland-Hodgman against the z >= near halfspace. Returns 0, 3 or 4
// vertices; parent barycentrics are interpolated along clipped edges.
int clip_near(const ClipVertex in[3], double near, ClipVertex out[4]) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = in[i];
    const ClipVertex& b = in[(i + 1) % 3];
    const bool a_in = a.cam.z() >= near;
    const bool b_in = b.cam.z() >= near;
    if (a_in) out[n++] = a;
    if (a_in != b_in) {
      const double s = (near - a.cam.z()) / (b.cam.z() - a.cam.z());
      out[n++] = {a.cam + s * (b.cam - a.cam), a.bary + s * (b.bary - a.bary)};
    }
  }
  return n;
}

double edge_fn(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// Rasterize one camera-space triangle into the g-buffer. Depth test is a
// strict less-than so ties keep the earlier (lower-index) triangle.
void raster_triangle(GBuffer& gb, const Camera& cam, const ClipVertex v[3], std::int32_t tri) {
  double u[3], w[3], z[3];
  for (int i = 0; i < 3; ++i) {
    z[i] = v[i].cam.z();
    u[i] = cam.fx * v[i].cam.x() / z[i] + cam.cx;
    w[i] = cam.fy * v[i].cam.y() / z[i] + cam.cy;
  }
  const double area2 = edge_fn(u[0], w[0], u[1], w[1], u[2], w[2]);
  if (area2 == 0.0) return;  // zero screen area
  const double sign = area2 > 0.0 ? 1.0 : -1.0;

  const double min_u = std::min({u[0], u[1], u[2]}), max_u = std::max({u[0], u[1], u[2]});
  const double min_v = std::min({w[0], w[1], w[2]}), max_v = std::max({w[0], w[1], w[2]});
  const int x0 = std::max(0, static_cast<int>(std::floor(min_u - 0.5)) - 1);
  const int x1 = std::min(gb.width - 1, static_cast<int>(std::ceil(max_u - 0.5)) + 1);
  const int y0 = std::max(0, static_cast<int>(std::floor(min_v - 0.5)) - 1);
  const int y1 = std::min(gb.height - 1, static_cast<int>(std::ceil(max_v - 0.5)) + 1);

  for (int py = y0; py <= y1; ++py) {
    const double cy = py + 0.5;
    for (int px = x0; px <= x1; ++px) {
      const double cx = px + 0.5;
      const double e0 = sign * edge_fn(u[1], w[1], u[2], w[2], cx, cy);
      const double e1 = sign * edge_fn(u[2], w[2], u[0], w[0], cx, cy);
      const double e2 = sign * edge_fn(u[0], w[0], u[1], w[1], cx, cy);
      if (e0 < 0.0 || e1 < 0.0 || e2 < 0.0) continue;
      const double inv_sum = 1.0 / (sign * area2);
      const double l0 = e0 * inv_sum, l1 = e1 * inv_sum, l2 = e2 * inv_sum;
      // perspective-correct: interpolate bary/z and 1/z
      const double inv_z = l0 / z[0] + l1 / z[1] + l2 / z[2];
      const double depth = 1.0 / inv_z;
      const std::size_t at = gb.index(px, py);
      if (!(static_cast<float>(depth) < gb.depth[at])) continue;
      gb.depth[at] = static_cast<float>(depth);
      gb.triangle[at] = tri;
      for (int k = 0; k < 3; ++k) {
        const double num =
            l0 * v[0].bary[k] / z[0] + l1 * v[1].bary[k] / z[1] + l2 * v[2].bary[k] / z[2];
        gb.bary[at * 3 + k] = num * depth;
      }
    }
  }
}

}  // namespace

GBuffer rasterize_gbuffer(const TriangleMesh& mesh, const Camera& camera) {
  camera.validate();
  GBuffer gb(camera.width, camera.height);
  std::vector<Vec3> cam_verts(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    cam_verts[i] = camera.to_camera(mesh.vertices[i]);

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const ClipVertex in[3] = {{cam_verts[tri[0]], Vec3(1, 0, 0)},
                              {cam_verts[tri[1]], Vec3(0, 1, 0)},
                              {cam_verts[tri[2]], Vec3(0, 0, 1)}};
    ClipVertex clipped[4];
    const int n = clip_near(in, camera.near, clipped);
    if (n < 3) continue;
    raster_triangle(gb, camera, clipped, static_cast<std::int32_t>(t));
    if (n == 4) {
      const ClipVertex second[3] = {clipped[0], clipped[2], clipped[3]};
      raster_triangle(gb, camera, second, static_cast<std::int32_t>(t));
    }
  }
  return gb;
}

CoordinateMap rasterize_mesh(const TriangleMesh& mesh, const ObjectFrame& frame,
                             const Camera& camera) {
  if (mesh.empty()) throw InvalidInput("rasterize_mesh: empty mesh");
  const GBuffer gb = rasterize_gbuffer(mesh, camera);
  CoordinateMap map(camera.width, camera.height);
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x) {
      const std::size_t i = map.index(x, y);
      const std::int32_t t = gb.triangle[i];
      if (t < 0) continue;
      const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
      const Vec3 p_world = gb.bary[i * 3 + 0] * mesh.vertices[tri[0]] +
                           gb.bary[i * 3 + 1] * mesh.vertices[tri[1]] +
                           gb.bary[i * 3 + 2] * mesh.vertices[tri[2]];
      const Eigen::Vector3f rgb = encode_coord(frame.normalize_point(p_world));
      map.coords[i * 3 + 0] = rgb[0];
      map.coords[i * 3 + 1] = rgb[1];
      map.coords[i * 3 + 2] = rgb[2];
      map.validity[i] = 1;
      map.depth[i] = gb.depth[i];
    }
  return map;
}

CoordinateMap splat_points(const PointCloud& cloud, const ObjectFrame& frame,
                           const Camera& camera, double radius_px) {
  if (cloud.empty()) throw InvalidInput("splat_points: empty point cloud");
  if (radius_px < 0.5) throw InvalidInput("splat_points: radius_px must be >= 0.5");
  camera.validate();
  CoordinateMap map(camera.width, camera.height);
  const double r2 = radius_px * radius_px;
  for (const Vec3& p : cloud.points) {
    const auto proj = project(camera, p);
    if (!proj) continue;
    const Eigen::Vector3f rgb = encode_coord(frame.normalize_point(p));
    const float z = static_cast<float>(proj->depth);
    const int x0 = std::max(0, static_cast<int>(std::floor(proj->u - radius_px)));
    const int x1 = std::min(map.width - 1, static_cast<int>(std::ceil(proj->u + radius_px)));
    const int y0 = std::max(0, static_cast<int>(std::floor(proj->v - radius_px)));
    const int y1 = std::min(map.height - 1, static_cast<int>(std::ceil(proj->v + radius_px)));
    for (int py = y0; py <= y1; ++py)
      for (int px = x0; px <= x1; ++px) {
        const double du = px + 0.5 - proj->u;
        const double dv = py + 0.5 - proj->v;
        if (du * du + dv * dv > r2) continue;
        const std::size_t i = map.index(px, py);
        if (!(z < map.depth[i])) continue;  // ties keep the earlier point
        map.depth[i] = z;
        map.validity[i] = 1;
        map.coords[i * 3 + 0] = rgb[0];
        map.coords[i * 3 + 1] = rgb[1];
        map.coords[i * 3 + 2] = rgb[2];
      }
  }
  return map;
}

CoordinateMap raycast_oracle(const TriangleMesh& mesh, const ObjectFrame& frame,
                             const Camera& camera) {
  if (mesh.empty()) throw InvalidInput("raycast_oracle: empty mesh");
  camera.validate();
  CoordinateMap map(camera.width, camera.height);
  std::vector<Vec3> cam_verts(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    cam_verts[i] = camera.to_camera(mesh.vertices[i]);

  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      // ray through the pixel center in camera space; dir.z == 1 so the ray
      // parameter equals camera depth
      const Vec3 dir((x + 0.5 - camera.cx) / camera.fx, (y + 0.5 - camera.cy) / camera.fy, 1.0);
      double best_t = std::numeric_limits<double>::infinity();
      Vec3 best_point = Vec3::Zero();
      bool hit = false;
      for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        const Vec3& v0 = cam_verts[tri[0]];
        const Vec3 edge1 = cam_verts[tri[1]] - v0;
        const Vec3 edge2 = cam_verts[tri[2]] - v0;
        const Vec3 h = dir.cross(edge2);
        const double a = edge1.dot(h);
        if (std::abs(a) < 1e-14) continue;  // ray parallel to triangle
        const double f = 1.0 / a;
        const Vec3 s = -v0;
        const double u = f * s.dot(h);
        if (u < 0.0 || u > 1.0) continue;
        const Vec3 q = s.cross(edge1);
        const double v = f * dir.dot(q);
        if (v < 0.0 || u + v > 1.0) continue;
        const double tt = f * edge2.dot(q);
        if (tt < camera.near) continue;
        if (tt < best_t) {
          best_t = tt;
          best_point = (1.0 - u - v) * mesh.vertices[tri[0]] + u * mesh.vertices[tri[1]] +
                       v * mesh.vertices[tri[2]];
          hit = true;
        }
      }
      if (!hit) continue;
      const std::size_t i = map.index(x, y);
      const Eigen::Vector3f rgb = encode_coord(frame.normalize_point(best_point));
      map.coords[i * 3 + 0] = rgb[0];
      map.coords[i * 3 + 1] = rgb[1];
      map.coords[i * 3 + 2] = rgb[2];
      map.validity[i] = 1;
      map.depth[i] = static_cast<float>(best_t);
    }
  }
  return map;
}

namespace {

struct BilinearTaps {
  int x0, y0, x1, y1;
  double wx, wy;
  bool ok;
};

BilinearTaps taps_for(const CoordinateMap& map, double u, double v) {
  BilinearTaps t{};
  const double gx = u - 0.5;  // center-of-pixel grid coordinates
  const double gy = v - 0.5;
  t.x0 = static_cast<int>(std::floor(gx));
  t.y0 = static_cast<int>(std::floor(gy));
  t.x1 = t.x0 + 1;
  t.y1 = t.y0 + 1;
  t.wx = gx - t.x0;
  t.wy = gy - t.y0;
  t.ok = t.x0 >= 0 && t.y0 >= 0 && t.x1 < map.width && t.y1 < map.height &&
         map.valid_at(t.x0, t.y0) && map.valid_at(t.x1, t.y0) && map.valid_at(t.x0, t.y1) &&
         map.valid_at(t.x1, t.y1);
  return t;
}

}  // namespace

std::optional<Vec3> sample_decoded_bilinear(const CoordinateMap& map, double u, double v) {
  const BilinearTaps t = taps_for(map, u, v);
  if (!t.ok) return std::nullopt;
  const Vec3 c00 = decode_coord(map.coord_at(t.x0, t.y0));
  const Vec3 c10 = decode_coord(map.coord_at(t.x1, t.y0));
  const Vec3 c01 = decode_coord(map.coord_at(t.x0, t.y1));
  const Vec3 c11 = decode_coord(map.coord_at(t.x1, t.y1));
  return (1 - t.wy) * ((1 - t.wx) * c00 + t.wx * c10) + t.wy * ((1 - t.wx) * c01 + t.wx * c11);
}

std::optional<double> sample_depth_bilinear(const CoordinateMap& map, double u, double v) {
  const BilinearTaps t = taps_for(map, u, v);
  if (!t.ok) return std::nullopt;
  const double d00 = map.depth_at(t.x0, t.y0), d10 = map.depth_at(t.x1, t.y0);
  const double d01 = map.depth_at(t.x0, t.y1), d11 = map.depth_at(t.x1, t.y1);
  return (1 - t.wy) * ((1 - t.wx) * d00 + t.wx * d10) + t.wy * ((1 - t.wx) * d01 + t.wx * d11);
}

}  // namespace prox
