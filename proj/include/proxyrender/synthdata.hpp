// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "proxyrender/conditioning.hpp"
#include "proxyrender/coordmap.hpp"
#include "proxyrender/geometry.hpp"
#include "proxyrender/tensor.hpp"

namespace prox {

enum class PrimitiveKind { Cube, Sphere, Cylinder };

/// One primitive instance: unit shape scaled per-axis, rotated (yaw about
/// +Y then pitch about +X), then translated.
struct PrimitivePart {
  PrimitiveKind kind = PrimitiveKind::Cube;
  Vec3 center = Vec3::Zero();
  Vec3 scale = Vec3::Ones();
  double yaw = 0.0;
  double pitch = 0.0;
};

/// Procedurally sampled scene: 1 primitive or a composite of 2-3, with a
/// per-face albedo palette, one directional light plus ambient, and a flat
/// or vertical-gradient background.
struct SceneSpec {
  std::vector<PrimitivePart> parts;
  std::vector<std::array<float, 3>> palette;  // albedos in [0,1]
  Vec3 light_dir = Vec3(0, 1, 0);             // unit, surface -> light
  double ambient = 0.3;                       // [0,1]
  std::array<float, 3> bg_top{0, 0, 0};
  std::array<float, 3> bg_bottom{0, 0, 0};
};

/// Triangle mesh with one albedo per triangle.
struct ShadedMesh {
  TriangleMesh mesh;
  std::vector<std::array<float, 3>> albedo;
};

/// Shaded frame plus its coverage mask (from the shared rasterizer, so it
/// matches the coordinate map's validity pixel for pixel).
struct ShadeResult {
  Tensor image;  // [H, W, 3] in [0,1]
  std::vector<std::uint8_t> mask;
};

enum class TrajectoryKind { Auto, Orbit, Dolly };

struct SampleOptions {
  int width = 32;
  int height = 32;
  TrajectoryKind trajectory = TrajectoryKind::Auto;
};

/// One fully paired training sample: reference views, target frames with
/// their coordinate maps, and every camera (references first).
struct DatasetSample {
  std::vector<ReferenceUnit> refs;
  std::vector<Tensor> target_images;  // each [H, W, 3]
  std::vector<CoordinateMap> target_maps;
  std::vector<Camera> cameras;
  std::uint64_t scene_seed = 0;
  std::uint64_t traj_seed = 0;
};

/// Deterministic procedural scene sampling.
SceneSpec generate_scene(std::uint64_t seed);

/// Instantiate the scene's geometry with per-triangle albedos.
ShadedMesh build_scene_mesh(const SceneSpec& scene);

/// Lambertian shading over the shared z-buffer: albedo * clamp(ambient +
/// max(0, dot(n, l))), two-sided normals, background flat/gradient fill.
ShadeResult shade(const SceneSpec& scene, const ShadedMesh& shaded, const Camera& camera);

/// References from an even orbit, targets from a random smooth trajectory
/// (orbit with random start/arc/elevation drift, or a linear dolly); all
/// frames rendered as paired RGB + coordinate map.
DatasetSample generate_sample(std::uint64_t scene_seed, std::uint64_t traj_seed, int n_refs,
                              int m_targets, const SampleOptions& opts = {});

/// Convenience overload deriving scene/trajectory sub-seeds from one seed.
DatasetSample generate_sample(std::uint64_t seed, int n_refs, int m_targets,
                              const SampleOptions& opts = {});

struct DatasetConfig {
  int samples = 64;
  int width = 32;
  int height = 32;
  int n_refs = 3;
  int m_targets = 5;
  std::uint64_t seed = 0;
  TrajectoryKind trajectory = TrajectoryKind::Auto;
};

std::vector<DatasetSample> generate_dataset(const DatasetConfig& cfg);

// Dataset directory layout: index.json {version, samples: [{file,
// scene_seed, traj_seed, n_refs, m_targets, width, height}]} and one
// multi-record tensor container per sample with records, in order:
// ref_images [N,H,W,3], ref_maps [N,H,W,5], target_images [M,H,W,3],
// target_maps [M,H,W,5], cameras [N+M, 19] (fx fy cx cy w h near R9 t3).

void write_dataset(const std::vector<DatasetSample>& samples, const std::string& dir);
std::vector<DatasetSample> read_dataset(const std::string& dir);

/// Flatten a camera into the 19-float dataset row and back.
std::array<float, 19> camera_to_row(const Camera& cam);
Camera camera_from_row(const std::array<float, 19>& row);

}  // namespace prox
