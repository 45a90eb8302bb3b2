// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#include "proxyrender/synthdata.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "proxyrender/errors.hpp"
#include "proxyrender/rng.hpp"

namespace prox {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSphereRings = 12;
constexpr int kSphereSegments = 16;
constexpr int kCylinderSegments = 16;

void append_part(ShadedMesh& out, const TriangleMesh& mesh,
                 const std::vector<std::array<float, 3>>& albedo,
                 const PrimitivePart& part) {
  const Mat3 rot_yaw = Eigen::AngleAxisd(part.yaw, Vec3::UnitY()).toRotationMatrix();
  const Mat3 rot_pitch = Eigen::AngleAxisd(part.pitch, Vec3::UnitX()).toRotationMatrix();
  const Mat3 rot = rot_pitch * rot_yaw;
  const int base = static_cast<int>(out.mesh.vertices.size());
  for (const Vec3& v : mesh.vertices) {
    out.mesh.vertices.push_back(rot * v.cwiseProduct(part.scale) + part.center);
  }
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    out.mesh.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
    out.albedo.push_back(albedo[i]);
  }
}

/// Unit cube [-1,1]^3, 12 triangles, palette color per face.
void make_cube(const std::vector<std::array<float, 3>>& palette, TriangleMesh& mesh,
               std::vector<std::array<float, 3>>& albedo) {
  const double s = 1.0;
  mesh.vertices = {{-s, -s, -s}, {s, -s, -s}, {s, s, -s}, {-s, s, -s},
                   {-s, -s, s},  {s, -s, s},  {s, s, s},  {-s, s, s}};
  const int faces[6][4] = {
      {1, 2, 6, 5},  // +X
      {0, 4, 7, 3},  // -X
      {3, 7, 6, 2},  // +Y
      {0, 1, 5, 4},  // -Y
      {4, 5, 6, 7},  // +Z
      {0, 3, 2, 1},  // -Z
  };
  for (int f = 0; f < 6; ++f) {
    const auto color = palette[static_cast<std::size_t>(f) % palette.size()];
    const int* q = faces[f];
    mesh.triangles.push_back({q[0], q[1], q[2]});
    mesh.triangles.push_back({q[0], q[2], q[3]});
    albedo.push_back(color);
    albedo.push_back(color);
  }
}

/// Unit UV sphere; checkered palette over (ring, segment) cells. Pole rows
/// collapse to degenerate triangles that the caller filters out.
void make_sphere(const std::vector<std::array<float, 3>>& palette, TriangleMesh& mesh,
                 std::vector<std::array<float, 3>>& albedo) {
  for (int r = 0; r <= kSphereRings; ++r) {
    const double theta = M_PI * r / kSphereRings;
    for (int s = 0; s < kSphereSegments; ++s) {
      const double phi = 2.0 * M_PI * s / kSphereSegments;
      mesh.vertices.push_back({std::sin(theta) * std::cos(phi), std::cos(theta),
                               std::sin(theta) * std::sin(phi)});
    }
  }
  auto vid = [](int r, int s) { return r * kSphereSegments + (s % kSphereSegments); };
  for (int r = 0; r < kSphereRings; ++r) {
    for (int s = 0; s < kSphereSegments; ++s) {
      const auto color = palette[static_cast<std::size_t>(r + s) % palette.size()];
      mesh.triangles.push_back({vid(r, s), vid(r + 1, s), vid(r + 1, s + 1)});
      mesh.triangles.push_back({vid(r, s), vid(r + 1, s + 1), vid(r, s + 1)});
      albedo.push_back(color);
      albedo.push_back(color);
    }
  }
}

/// Unit cylinder (radius 1, y in [-1,1]) with caps; striped palette.
void make_cylinder(const std::vector<std::array<float, 3>>& palette, TriangleMesh& mesh,
                   std::vector<std::array<float, 3>>& albedo) {
  for (int s = 0; s < kCylinderSegments; ++s) {
    const double phi = 2.0 * M_PI * s / kCylinderSegments;
    mesh.vertices.push_back({std::cos(phi), 1.0, std::sin(phi)});
    mesh.vertices.push_back({std::cos(phi), -1.0, std::sin(phi)});
  }
  const int top_center = static_cast<int>(mesh.vertices.size());
  mesh.vertices.push_back({0, 1, 0});
  const int bottom_center = top_center + 1;
  mesh.vertices.push_back({0, -1, 0});
  auto top = [](int s) { return 2 * (s % kCylinderSegments); };
  auto bottom = [](int s) { return 2 * (s % kCylinderSegments) + 1; };
  for (int s = 0; s < kCylinderSegments; ++s) {
    const auto side = palette[static_cast<std::size_t>(s) % palette.size()];
    mesh.triangles.push_back({top(s), bottom(s), bottom(s + 1)});
    mesh.triangles.push_back({top(s), bottom(s + 1), top(s + 1)});
    albedo.push_back(side);
    albedo.push_back(side);
    mesh.triangles.push_back({top_center, top(s + 1), top(s)});
    albedo.push_back(palette[0]);
    mesh.triangles.push_back({bottom_center, bottom(s), bottom(s + 1)});
    albedo.push_back(palette[1 % palette.size()]);
  }
}

void make_primitive(PrimitiveKind kind, const std::vector<std::array<float, 3>>& palette,
                    TriangleMesh& mesh, std::vector<std::array<float, 3>>& albedo) {
  switch (kind) {
    case PrimitiveKind::Cube: make_cube(palette, mesh, albedo); break;
    case PrimitiveKind::Sphere: make_sphere(palette, mesh, albedo); break;
    case PrimitiveKind::Cylinder: make_cylinder(palette, mesh, albedo); break;
  }
}

Vec3 unit_direction(Rng& rng) {
  for (int attempt = 0; attempt < 16; ++attempt) {
    const Vec3 v(rng.uniform(-1.0, 1.0), rng.uniform(0.2, 1.0), rng.uniform(-1.0, 1.0));
    const double n = v.norm();
    if (n > 1e-6) return v / n;
  }
  return Vec3(0, 1, 0);
}

std::array<float, 3> random_color(Rng& rng, double lo, double hi) {
  return {static_cast<float>(rng.uniform(lo, hi)), static_cast<float>(rng.uniform(lo, hi)),
          static_cast<float>(rng.uniform(lo, hi))};
}

Tensor stack_images(const std::vector<Tensor>& images) {
  const std::size_t h = images.front().dim(0);
  const std::size_t w = images.front().dim(1);
  Tensor out({images.size(), h, w, 3});
  for (std::size_t f = 0; f < images.size(); ++f) {
    std::copy(images[f].data(), images[f].data() + images[f].size(),
              out.data() + f * images[f].size());
  }
  return out;
}

Tensor stack_maps(const std::vector<CoordinateMap>& maps) {
  const Tensor first = maps.front().to_tensor();
  Tensor out({maps.size(), first.dim(0), first.dim(1), first.dim(2)});
  std::copy(first.data(), first.data() + first.size(), out.data());
  for (std::size_t f = 1; f < maps.size(); ++f) {
    const Tensor t = maps[f].to_tensor();
    std::copy(t.data(), t.data() + t.size(), out.data() + f * t.size());
  }
  return out;
}

Tensor slice_frame(const Tensor& stack, std::size_t f) {
  Tensor out({stack.dim(1), stack.dim(2), stack.dim(3)});
  std::copy(stack.data() + f * out.size(), stack.data() + (f + 1) * out.size(), out.data());
  return out;
}

}  // namespace

SceneSpec generate_scene(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x7363656eULL));  // "scen"
  SceneSpec scene;
  scene.palette.resize(6);
  for (auto& c : scene.palette) c = random_color(rng, 0.08, 0.95);
  scene.light_dir = unit_direction(rng);
  scene.ambient = rng.uniform(0.25, 0.55);
  scene.bg_top = random_color(rng, 0.0, 0.85);
  scene.bg_bottom = rng.uniform() < 0.5 ? scene.bg_top : random_color(rng, 0.0, 0.85);

  const std::uint64_t kind = rng.uniform_index(4);
  if (kind < 3) {
    PrimitivePart part;
    part.kind = static_cast<PrimitiveKind>(kind);
    part.scale = Vec3(rng.uniform(0.5, 1.0), rng.uniform(0.5, 1.0), rng.uniform(0.5, 1.0));
    part.yaw = rng.uniform(0.0, 2.0 * M_PI);
    part.pitch = rng.uniform(-0.6, 0.6);
    scene.parts.push_back(part);
  } else {
    const int count = 2 + static_cast<int>(rng.uniform_index(2));
    for (int i = 0; i < count; ++i) {
      PrimitivePart part;
      part.kind = static_cast<PrimitiveKind>(rng.uniform_index(3));
      part.center = Vec3(rng.uniform(-0.45, 0.45), rng.uniform(-0.45, 0.45),
                         rng.uniform(-0.45, 0.45));
      part.scale = Vec3(rng.uniform(0.25, 0.55), rng.uniform(0.25, 0.55),
                        rng.uniform(0.25, 0.55));
      part.yaw = rng.uniform(0.0, 2.0 * M_PI);
      part.pitch = rng.uniform(-0.6, 0.6);
      scene.parts.push_back(part);
    }
  }
  return scene;
}

ShadedMesh build_scene_mesh(const SceneSpec& scene) {
  if (scene.parts.empty()) throw InvalidInput("build_scene_mesh: scene has no parts");
  ShadedMesh out;
  for (const PrimitivePart& part : scene.parts) {
    TriangleMesh mesh;
    std::vector<std::array<float, 3>> albedo;
    make_primitive(part.kind, scene.palette, mesh, albedo);
    append_part(out, mesh, albedo, part);
  }
  // Drop collapsed pole triangles while keeping triangle/albedo rows paired.
  std::vector<std::array<int, 3>> kept_tris;
  std::vector<std::array<float, 3>> kept_albedo;
  for (std::size_t i = 0; i < out.mesh.triangles.size(); ++i) {
    const auto& t = out.mesh.triangles[i];
    if (triangle_area(out.mesh.vertices[static_cast<std::size_t>(t[0])],
                      out.mesh.vertices[static_cast<std::size_t>(t[1])],
                      out.mesh.vertices[static_cast<std::size_t>(t[2])]) > 1e-12) {
      kept_tris.push_back(t);
      kept_albedo.push_back(out.albedo[i]);
    }
  }
  out.mesh.triangles = std::move(kept_tris);
  out.albedo = std::move(kept_albedo);
  return out;
}

ShadeResult shade(const SceneSpec& scene, const ShadedMesh& shaded, const Camera& camera) {
  if (shaded.mesh.empty()) throw InvalidInput("shade: empty mesh");
  if (shaded.albedo.size() != shaded.mesh.triangles.size()) {
    throw InvalidInput("shade: albedo count does not match triangle count");
  }
  const GBuffer gb = rasterize_gbuffer(shaded.mesh, camera);
  const Vec3 cam_pos = camera.position();

  // Face normals once per triangle.
  std::vector<Vec3> normals(shaded.mesh.triangles.size());
  for (std::size_t i = 0; i < normals.size(); ++i) {
    const auto& t = shaded.mesh.triangles[i];
    const Vec3& a = shaded.mesh.vertices[static_cast<std::size_t>(t[0])];
    const Vec3& b = shaded.mesh.vertices[static_cast<std::size_t>(t[1])];
    const Vec3& c = shaded.mesh.vertices[static_cast<std::size_t>(t[2])];
    const Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    normals[i] = len > 0.0 ? Vec3(n / len) : Vec3(0, 1, 0);
  }

  ShadeResult out;
  out.image = Tensor({static_cast<std::size_t>(camera.height),
                      static_cast<std::size_t>(camera.width), 3});
  out.mask.assign(static_cast<std::size_t>(camera.width) * camera.height, 0);
  for (int y = 0; y < camera.height; ++y) {
    const double frac = (y + 0.5) / camera.height;
    const std::array<float, 3> bg = {
        static_cast<float>(scene.bg_top[0] * (1.0 - frac) + scene.bg_bottom[0] * frac),
        static_cast<float>(scene.bg_top[1] * (1.0 - frac) + scene.bg_bottom[1] * frac),
        static_cast<float>(scene.bg_top[2] * (1.0 - frac) + scene.bg_bottom[2] * frac)};
    for (int x = 0; x < camera.width; ++x) {
      const std::size_t at = gb.index(x, y);
      const std::int32_t tri = gb.triangle[at];
      if (tri < 0) {
        for (int c = 0; c < 3; ++c) out.image.at(y, x, c) = bg[static_cast<std::size_t>(c)];
        continue;
      }
      out.mask[at] = 1;
      const auto& tv = shaded.mesh.triangles[static_cast<std::size_t>(tri)];
      Vec3 p = Vec3::Zero();
      for (int k = 0; k < 3; ++k) {
        p += gb.bary[at * 3 + static_cast<std::size_t>(k)] *
             shaded.mesh.vertices[static_cast<std::size_t>(tv[static_cast<std::size_t>(k)])];
      }
      Vec3 n = normals[static_cast<std::size_t>(tri)];
      if (n.dot(cam_pos - p) < 0.0) n = -n;  // two-sided
      const double diffuse = std::max(0.0, n.dot(scene.light_dir));
      const double intensity = scene.ambient + diffuse;
      const auto& alb = shaded.albedo[static_cast<std::size_t>(tri)];
      for (int c = 0; c < 3; ++c) {
        out.image.at(y, x, c) = static_cast<float>(
            std::clamp(static_cast<double>(alb[static_cast<std::size_t>(c)]) * intensity,
                       0.0, 1.0));
      }
    }
  }
  return out;
}

DatasetSample generate_sample(std::uint64_t scene_seed, std::uint64_t traj_seed, int n_refs,
                              int m_targets, const SampleOptions& opts) {
  if (n_refs < 1 || n_refs > 8) throw InvalidInput("generate_sample: n_refs must be in [1, 8]");
  if (m_targets < 1) throw InvalidInput("generate_sample: m_targets must be >= 1");

  DatasetSample sample;
  sample.scene_seed = scene_seed;
  sample.traj_seed = traj_seed;
  const SceneSpec scene = generate_scene(scene_seed);
  const ShadedMesh shaded = build_scene_mesh(scene);
  const ObjectFrame frame = normalize_object(shaded.mesh);

  Rng rng(mix_seed(traj_seed, 0x7472616aULL));  // "traj"
  OrbitOptions cam_opts;
  cam_opts.width = opts.width;
  cam_opts.height = opts.height;

  // References: even azimuth spacing for viewpoint coverage.
  const double ref_radius = rng.uniform(2.9, 3.6) * frame.half_extent;
  const double ref_elev = rng.uniform(0.15, 0.65);
  cam_opts.azimuth_start = rng.uniform(0.0, 2.0 * M_PI);
  const std::vector<Camera> ref_cams =
      orbit_trajectory(frame, ref_radius, ref_elev, n_refs, cam_opts);

  // Targets: smooth random orbit arc or a linear dolly.
  TrajectoryKind kind = opts.trajectory;
  if (kind == TrajectoryKind::Auto) {
    kind = rng.uniform_index(2) == 0 ? TrajectoryKind::Orbit : TrajectoryKind::Dolly;
  }
  std::vector<Camera> tgt_cams;
  tgt_cams.reserve(static_cast<std::size_t>(m_targets));
  const double denom = std::max(1, m_targets - 1);
  if (kind == TrajectoryKind::Orbit) {
    const double az0 = rng.uniform(0.0, 2.0 * M_PI);
    const double arc = rng.uniform(M_PI / 3.0, M_PI) * (rng.uniform() < 0.5 ? 1.0 : -1.0);
    const double e0 = rng.uniform(0.1, 0.7);
    const double e1 = std::clamp(e0 + rng.uniform(-0.35, 0.35), -0.2, 1.1);
    const double radius = rng.uniform(2.9, 3.8) * frame.half_extent;
    for (int k = 0; k < m_targets; ++k) {
      const double f = k / denom;
      tgt_cams.push_back(
          orbit_camera(frame, radius, e0 + (e1 - e0) * f, az0 + arc * f, cam_opts));
    }
  } else {
    const double az = rng.uniform(0.0, 2.0 * M_PI);
    const double elev = rng.uniform(0.1, 0.8);
    const double r0 = rng.uniform(3.3, 4.0) * frame.half_extent;
    const double r1 = rng.uniform(2.3, 2.9) * frame.half_extent;
    for (int k = 0; k < m_targets; ++k) {
      const double f = k / denom;
      tgt_cams.push_back(orbit_camera(frame, r0 + (r1 - r0) * f, elev, az, cam_opts));
    }
  }

  for (const Camera& cam : ref_cams) {
    ReferenceUnit unit;
    unit.image = shade(scene, shaded, cam).image;
    unit.coordmap = rasterize_mesh(shaded.mesh, frame, cam);
    sample.refs.push_back(std::move(unit));
    sample.cameras.push_back(cam);
  }
  for (const Camera& cam : tgt_cams) {
    sample.target_images.push_back(shade(scene, shaded, cam).image);
    sample.target_maps.push_back(rasterize_mesh(shaded.mesh, frame, cam));
    sample.cameras.push_back(cam);
  }
  return sample;
}

DatasetSample generate_sample(std::uint64_t seed, int n_refs, int m_targets,
                              const SampleOptions& opts) {
  return generate_sample(mix_seed(seed, 0x11), mix_seed(seed, 0x22), n_refs, m_targets, opts);
}

std::vector<DatasetSample> generate_dataset(const DatasetConfig& cfg) {
  if (cfg.samples < 1) throw InvalidInput("generate_dataset: samples must be >= 1");
  SampleOptions opts;
  opts.width = cfg.width;
  opts.height = cfg.height;
  opts.trajectory = cfg.trajectory;
  std::vector<DatasetSample> out;
  out.reserve(static_cast<std::size_t>(cfg.samples));
  for (int i = 0; i < cfg.samples; ++i) {
    const std::uint64_t base = mix_seed(cfg.seed, static_cast<std::uint64_t>(i));
    out.push_back(generate_sample(mix_seed(base, 0x11), mix_seed(base, 0x22), cfg.n_refs,
                                  cfg.m_targets, opts));
  }
  return out;
}

std::array<float, 19> camera_to_row(const Camera& cam) {
  std::array<float, 19> row{};
  row[0] = static_cast<float>(cam.fx);
  row[1] = static_cast<float>(cam.fy);
  row[2] = static_cast<float>(cam.cx);
  row[3] = static_cast<float>(cam.cy);
  row[4] = static_cast<float>(cam.width);
  row[5] = static_cast<float>(cam.height);
  row[6] = static_cast<float>(cam.near);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      row[7 + 3 * r + c] = static_cast<float>(cam.extrinsics.rotation(r, c));
    }
  }
  for (int i = 0; i < 3; ++i) row[16 + i] = static_cast<float>(cam.extrinsics.translation(i));
  return row;
}

Camera camera_from_row(const std::array<float, 19>& row) {
  Camera cam;
  cam.fx = row[0];
  cam.fy = row[1];
  cam.cx = row[2];
  cam.cy = row[3];
  cam.width = static_cast<int>(std::lround(row[4]));
  cam.height = static_cast<int>(std::lround(row[5]));
  cam.near = row[6];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      cam.extrinsics.rotation(r, c) = row[static_cast<std::size_t>(7 + 3 * r + c)];
    }
  }
  for (int i = 0; i < 3; ++i) {
    cam.extrinsics.translation(i) = row[static_cast<std::size_t>(16 + i)];
  }
  return cam;
}

void write_dataset(const std::vector<DatasetSample>& samples, const std::string& dir) {
  if (samples.empty()) throw InvalidInput("write_dataset: no samples");
  fs::create_directories(dir);
  json index;
  index["version"] = 1;
  index["samples"] = json::array();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const DatasetSample& s = samples[i];
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%04zu.gort", i);
    const int h = s.refs.front().coordmap.height;
    const int w = s.refs.front().coordmap.width;

    std::vector<Tensor> records;
    std::vector<Tensor> ref_images;
    std::vector<CoordinateMap> ref_maps;
    for (const ReferenceUnit& r : s.refs) {
      ref_images.push_back(r.image);
      ref_maps.push_back(r.coordmap);
    }
    records.push_back(stack_images(ref_images));
    records.push_back(stack_maps(ref_maps));
    records.push_back(stack_images(s.target_images));
    records.push_back(stack_maps(s.target_maps));
    Tensor cams({s.cameras.size(), 19});
    for (std::size_t c = 0; c < s.cameras.size(); ++c) {
      const auto row = camera_to_row(s.cameras[c]);
      std::copy(row.begin(), row.end(), cams.data() + c * 19);
    }
    records.push_back(std::move(cams));
    write_tensor_records((fs::path(dir) / name).string(), records);

    index["samples"].push_back(json{{"file", name},
                                    {"scene_seed", s.scene_seed},
                                    {"traj_seed", s.traj_seed},
                                    {"n_refs", s.refs.size()},
                                    {"m_targets", s.target_images.size()},
                                    {"width", w},
                                    {"height", h}});
  }
  std::ofstream out(fs::path(dir) / "index.json");
  if (!out) throw IoError("cannot write dataset index in " + dir);
  out << index.dump(2) << "\n";
}

std::vector<DatasetSample> read_dataset(const std::string& dir) {
  const fs::path index_path = fs::path(dir) / "index.json";
  std::ifstream in(index_path);
  if (!in) throw DatasetCorrupt("missing dataset index: " + index_path.string());
  json index;
  try {
    in >> index;
  } catch (const json::exception& e) {
    throw DatasetCorrupt("dataset index parse error: " + std::string(e.what()));
  }
  if (!index.contains("samples") || !index["samples"].is_array()) {
    throw DatasetCorrupt("dataset index has no samples array: " + index_path.string());
  }

  std::vector<DatasetSample> out;
  for (const auto& entry : index["samples"]) {
    const fs::path file = fs::path(dir) / entry.at("file").get<std::string>();
    if (!fs::exists(file)) throw DatasetCorrupt("missing dataset sample: " + file.string());
    std::vector<Tensor> records;
    try {
      records = read_tensor_records(file.string());
    } catch (const IoError& e) {
      throw DatasetCorrupt("unreadable dataset sample " + file.string() + ": " + e.what());
    }
    if (records.size() != 5) {
      throw DatasetCorrupt("dataset sample record count != 5: " + file.string());
    }
    const Tensor& ref_images = records[0];
    const Tensor& ref_maps = records[1];
    const Tensor& tgt_images = records[2];
    const Tensor& tgt_maps = records[3];
    const Tensor& cams = records[4];
    if (ref_images.rank() != 4 || ref_maps.rank() != 4 || tgt_images.rank() != 4 ||
        tgt_maps.rank() != 4 || cams.rank() != 2 || cams.dim(1) != 19 ||
        ref_images.dim(0) != ref_maps.dim(0) || tgt_images.dim(0) != tgt_maps.dim(0) ||
        cams.dim(0) != ref_images.dim(0) + tgt_images.dim(0)) {
      throw DatasetCorrupt("dataset sample schema mismatch: " + file.string());
    }

    DatasetSample s;
    s.scene_seed = entry.value("scene_seed", std::uint64_t{0});
    s.traj_seed = entry.value("traj_seed", std::uint64_t{0});
    for (std::size_t f = 0; f < ref_images.dim(0); ++f) {
      ReferenceUnit unit;
      unit.image = slice_frame(ref_images, f);
      unit.coordmap = CoordinateMap::from_tensor(slice_frame(ref_maps, f));
      s.refs.push_back(std::move(unit));
    }
    for (std::size_t f = 0; f < tgt_images.dim(0); ++f) {
      s.target_images.push_back(slice_frame(tgt_images, f));
      s.target_maps.push_back(CoordinateMap::from_tensor(slice_frame(tgt_maps, f)));
    }
    for (std::size_t c = 0; c < cams.dim(0); ++c) {
      std::array<float, 19> row;
      std::copy(cams.data() + c * 19, cams.data() + (c + 1) * 19, row.begin());
      s.cameras.push_back(camera_from_row(row));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace prox
