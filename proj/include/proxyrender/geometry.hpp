// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

namespace prox {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid body motion: p -> rotation * p + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(rotation.transpose() * translation);
    return inv;
  }

  /// Composition: (a * b).apply(p) == a.apply(b.apply(p)).
  RigidTransform operator*(const RigidTransform& rhs) const {
    RigidTransform out;
    out.rotation = rotation * rhs.rotation;
    out.translation = rotation * rhs.translation + translation;
    return out;
  }

  /// True when rotation is orthonormal with det +1 within `tol`.
  bool is_rigid(double tol = 1e-6) const;
};

/// Pinhole camera. World-to-camera extrinsics; the camera looks down +Z,
/// pixel u grows right and v grows down, pixel centers sit at integer+0.5.
struct Camera {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;
  double near = 1e-3;
  RigidTransform extrinsics;  // world -> camera

  /// Throws InvalidInput when any field violates its invariant.
  void validate() const;

  Vec3 to_camera(const Vec3& p_world) const { return extrinsics.apply(p_world); }
  Vec3 position() const { return extrinsics.inverse().translation; }
};

struct PixelProjection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;  // camera-space z
};

/// Pinhole projection; empty when the point is at or behind the near plane.
std::optional<PixelProjection> project(const Camera& camera, const Vec3& point);

/// Inverse of project for in-frustum points: pixel + camera depth -> world.
Vec3 unproject(const Camera& camera, double u, double v, double depth);

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  bool empty() const { return vertices.empty() || triangles.empty(); }
  /// Drops triangles with out-of-range indices or area <= area_tol.
  void filter_degenerate(double area_tol = 1e-12);
};

struct PointCloud {
  std::vector<Vec3> points;
  bool empty() const { return points.empty(); }
};

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

/// Axis-aligned bounding box.
struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());
  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  Vec3 center() const { return 0.5 * (min + max); }
};

/// Canonical object cube: maps proxy geometry into [-1, 1]^3 with a uniform
/// scale so the aspect of the object is preserved.
struct ObjectFrame {
  Vec3 center = Vec3::Zero();
  double half_extent = 1.0;

  Vec3 normalize_point(const Vec3& p_world) const { return (p_world - center) / half_extent; }
  Vec3 denormalize_point(const Vec3& p_norm) const { return p_norm * half_extent + center; }
};

/// AABB midpoint + max half side, clamped to 1e-6 for degenerate proxies.
ObjectFrame normalize_object(const TriangleMesh& proxy);
ObjectFrame normalize_object(const PointCloud& proxy);
ObjectFrame normalize_object_points(const std::vector<Vec3>& points);

/// World-to-camera extrinsics for a camera at `position` looking at `target`.
RigidTransform look_at(const Vec3& position, const Vec3& target, const Vec3& up = Vec3(0, 1, 0));

struct OrbitOptions {
  int width = 64;
  int height = 64;
  /// fx = fy = focal_factor * width; 0.65 keeps the whole object cube in
  /// frame down to radius = 3 * half_extent.
  double focal_factor = 0.65;
  double near = 1e-3;
  double azimuth_start = 0.0;  // radians
};

/// One camera on the orbit sphere, looking at frame.center with up = +Y.
Camera orbit_camera(const ObjectFrame& frame, double radius, double elevation, double azimuth,
                    const OrbitOptions& opts = {});

/// Cameras evenly spaced in azimuth over [0, 2*pi), all looking at
/// frame.center with up = world +Y.
std::vector<Camera> orbit_trajectory(const ObjectFrame& frame, double radius, double elevation,
                                     int frames, const OrbitOptions& opts = {});

// File formats: ASCII OBJ meshes (v / f lines, polygon faces fan-triangulated),
// ASCII PLY point clouds (x, y, z vertex properties), JSON cameras
// {fx, fy, cx, cy, width, height, near, R: 9 row-major, t: 3} and JSON-array
// trajectories.

TriangleMesh load_obj(const std::string& path);
void save_obj(const std::string& path, const TriangleMesh& mesh);
PointCloud load_ply(const std::string& path);
void save_ply(const std::string& path, const PointCloud& cloud);

std::string camera_to_json(const Camera& cam);
Camera camera_from_json_text(const std::string& text);
std::vector<Camera> load_trajectory(const std::string& path);
void save_trajectory(const std::string& path, const std::vector<Camera>& cams);
Camera load_camera(const std::string& path);

}  // namespace prox
