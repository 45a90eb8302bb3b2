// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#include "proxyrender/geometry.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "proxyrender/errors.hpp"

namespace prox {

bool RigidTransform::is_rigid(double tol) const {
  const Mat3 should_be_identity = rotation * rotation.transpose();
  if ((should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

void Camera::validate() const {
  if (fx <= 0.0 || fy <= 0.0) throw InvalidInput("camera: fx and fy must be positive");
  if (near <= 0.0) throw InvalidInput("camera: near must be positive");
  if (width < 1 || height < 1) throw InvalidInput("camera: resolution must be at least 1x1");
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
    throw InvalidInput("camera: principal point outside image");
  if (!extrinsics.is_rigid()) throw InvalidInput("camera: extrinsics are not a rigid transform");
}

std::optional<PixelProjection> project(const Camera& camera, const Vec3& point) {
  const Vec3 p_cam = camera.to_camera(point);
  if (p_cam.z() <= camera.near) return std::nullopt;
  PixelProjection out;
  out.u = camera.fx * p_cam.x() / p_cam.z() + camera.cx;
  out.v = camera.fy * p_cam.y() / p_cam.z() + camera.cy;
  out.depth = p_cam.z();
  return out;
}

Vec3 unproject(const Camera& camera, double u, double v, double depth) {
  const Vec3 p_cam((u - camera.cx) / camera.fx * depth, (v - camera.cy) / camera.fy * depth, depth);
  return camera.extrinsics.inverse().apply(p_cam);
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

void TriangleMesh::filter_degenerate(double area_tol) {
  std::vector<std::array<int, 3>> kept;
  kept.reserve(triangles.size());
  const int n = static_cast<int>(vertices.size());
  for (const auto& tri : triangles) {
    if (tri[0] < 0 || tri[1] < 0 || tri[2] < 0 || tri[0] >= n || tri[1] >= n || tri[2] >= n)
      continue;
    if (triangle_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) <= area_tol) continue;
    kept.push_back(tri);
  }
  triangles = std::move(kept);
}

ObjectFrame normalize_object_points(const std::vector<Vec3>& points) {
  if (points.empty()) throw InvalidInput("normalize_object: empty proxy");
  Aabb box;
  for (const Vec3& p : points) box.extend(p);
  ObjectFrame frame;
  frame.center = box.center();
  // Uniform scale from the largest axis; degenerate proxies clamp to 1e-6 so
  // single points still normalize.
  frame.half_extent = std::max(0.5 * (box.max - box.min).maxCoeff(), 1e-6);
  return frame;
}

ObjectFrame normalize_object(const TriangleMesh& proxy) {
  if (proxy.vertices.empty()) throw InvalidInput("normalize_object: empty mesh");
  return normalize_object_points(proxy.vertices);
}

ObjectFrame normalize_object(const PointCloud& proxy) {
  if (proxy.empty()) throw InvalidInput("normalize_object: empty point cloud");
  return normalize_object_points(proxy.points);
}

RigidTransform look_at(const Vec3& position, const Vec3& target, const Vec3& up) {
  Vec3 forward = target - position;
  const double len = forward.norm();
  if (len < 1e-12) throw InvalidInput("look_at: position coincides with target");
  forward /= len;
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-9) right = forward.cross(Vec3(1, 0, 0));  // looking along up
  right.normalize();
  const Vec3 down = forward.cross(right);  // unit by construction
  RigidTransform t;
  t.rotation.row(0) = right.transpose();
  t.rotation.row(1) = down.transpose();
  t.rotation.row(2) = forward.transpose();
  t.translation = -(t.rotation * position);
  return t;
}

Camera orbit_camera(const ObjectFrame& frame, double radius, double elevation, double azimuth,
                    const OrbitOptions& opts) {
  if (radius <= frame.half_extent)
    throw InvalidInput("orbit_camera: radius must exceed the object half extent");
  const Vec3 offset(radius * std::cos(elevation) * std::cos(azimuth),
                    radius * std::sin(elevation),
                    radius * std::cos(elevation) * std::sin(azimuth));
  Camera cam;
  cam.width = opts.width;
  cam.height = opts.height;
  cam.fx = cam.fy = opts.focal_factor * opts.width;
  cam.cx = 0.5 * opts.width;
  cam.cy = 0.5 * opts.height;
  cam.near = opts.near;
  cam.extrinsics = look_at(frame.center + offset, frame.center);
  cam.validate();
  return cam;
}

std::vector<Camera> orbit_trajectory(const ObjectFrame& frame, double radius, double elevation,
                                     int frames, const OrbitOptions& opts) {
  if (frames < 1) throw InvalidInput("orbit_trajectory: frames must be >= 1");
  std::vector<Camera> cams;
  cams.reserve(frames);
  for (int k = 0; k < frames; ++k) {
    const double az = opts.azimuth_start + 2.0 * M_PI * k / frames;
    cams.push_back(orbit_camera(frame, radius, elevation, az, opts));
  }
  return cams;
}

TriangleMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file: " + path);
  TriangleMesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      ss >> v.x() >> v.y() >> v.z();
      if (!ss) throw IoError("malformed OBJ vertex line: " + line);
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        // "i", "i/t", "i/t/n", "i//n" -> take the vertex index
        const std::size_t slash = tok.find('/');
        const std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
        int i = 0;
        try {
          i = std::stoi(head);
        } catch (const std::exception&) {
          throw IoError("malformed OBJ face token: " + tok);
        }
        if (i < 0) i = static_cast<int>(mesh.vertices.size()) + i;  // relative index
        else i -= 1;                                                // OBJ is 1-based
        idx.push_back(i);
      }
      if (idx.size() < 3) throw IoError("OBJ face with fewer than 3 vertices: " + line);
      for (std::size_t k = 1; k + 1 < idx.size(); ++k)
        mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  mesh.filter_degenerate();
  return mesh;
}

void save_obj(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.precision(17);
  for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles)
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!out) throw IoError("failed writing mesh: " + path);
}

PointCloud load_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open point cloud file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply")
    throw IoError("not a PLY file: " + path);
  std::size_t vertex_count = 0;
  int x_at = -1, y_at = -1, z_at = -1;
  int prop = 0;
  bool ascii = false;
  bool in_vertex_element = false;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "format") {
      std::string fmt;
      ss >> fmt;
      ascii = fmt == "ascii";
    } else if (tag == "element") {
      std::string name;
      std::size_t count = 0;
      ss >> name >> count;
      in_vertex_element = name == "vertex";
      if (in_vertex_element) vertex_count = count;
    } else if (tag == "property" && in_vertex_element) {
      std::string type, name;
      ss >> type >> name;
      if (name == "x") x_at = prop;
      if (name == "y") y_at = prop;
      if (name == "z") z_at = prop;
      ++prop;
    } else if (tag == "end_header") {
      break;
    }
  }
  if (!ascii) throw IoError("only ASCII PLY is supported: " + path);
  if (x_at < 0 || y_at < 0 || z_at < 0)
    throw IoError("PLY vertex element lacks x/y/z properties: " + path);
  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  for (std::size_t i = 0; i < vertex_count; ++i) {
    if (!std::getline(in, line)) throw IoError("PLY truncated: " + path);
    std::istringstream ss(line);
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    if (static_cast<int>(values.size()) < prop) throw IoError("PLY vertex line too short: " + line);
    cloud.points.emplace_back(values[x_at], values[y_at], values[z_at]);
  }
  return cloud;
}

void save_ply(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  out.precision(17);
  for (const Vec3& p : cloud.points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  if (!out) throw IoError("failed writing point cloud: " + path);
}

namespace {

nlohmann::json camera_json(const Camera& cam) {
  nlohmann::json j;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["width"] = cam.width;
  j["height"] = cam.height;
  j["near"] = cam.near;
  std::vector<double> r(9), t(3);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r[i * 3 + k] = cam.extrinsics.rotation(i, k);
  for (int i = 0; i < 3; ++i) t[i] = cam.extrinsics.translation(i);
  j["R"] = r;
  j["t"] = t;
  return j;
}

Camera camera_from_json(const nlohmann::json& j) {
  Camera cam;
  try {
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    cam.near = j.value("near", 1e-3);
    const auto r = j.at("R").get<std::vector<double>>();
    const auto t = j.at("t").get<std::vector<double>>();
    if (r.size() != 9 || t.size() != 3) throw IoError("camera JSON: R must be 9 values, t must be 3");
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) cam.extrinsics.rotation(i, k) = r[i * 3 + k];
    for (int i = 0; i < 3; ++i) cam.extrinsics.translation(i) = t[i];
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("camera JSON: ") + e.what());
  }
  cam.validate();
  return cam;
}

}  // namespace

std::string camera_to_json(const Camera& cam) { return camera_json(cam).dump(2); }

Camera camera_from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw IoError("camera JSON: parse error");
  return camera_from_json(j);
}

std::vector<Camera> load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory file: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw IoError("trajectory JSON parse error: " + path);
  if (!j.is_array()) throw IoError("trajectory file must be a JSON array of cameras: " + path);
  std::vector<Camera> cams;
  cams.reserve(j.size());
  for (const auto& item : j) cams.push_back(camera_from_json(item));
  return cams;
}

void save_trajectory(const std::string& path, const std::vector<Camera>& cams) {
  nlohmann::json j = nlohmann::json::array();
  for (const Camera& c : cams) j.push_back(camera_json(c));
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

Camera load_camera(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open camera file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return camera_from_json_text(ss.str());
}

}  // namespace prox
