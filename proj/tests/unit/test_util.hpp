// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <unistd.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "proxyrender/geometry.hpp"

namespace testutil {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("proxyrender_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// Axis-aligned box mesh: 8 vertices, 12 triangles, outward winding.
inline prox::TriangleMesh make_box_mesh(const prox::Vec3& center = {0, 0, 0},
                                        const prox::Vec3& half = {1, 1, 1}) {
  prox::TriangleMesh m;
  for (int i = 0; i < 8; ++i) {
    const prox::Vec3 corner((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0, (i & 4) ? 1.0 : -1.0);
    m.vertices.push_back(center + corner.cwiseProduct(half));
  }
  // Vertex i sits at corner (bit0 -> x, bit1 -> y, bit2 -> z); one quad per face.
  const std::array<std::array<int, 4>, 6> faces = {{
      {0, 1, 3, 2},
      {4, 6, 7, 5},
      {0, 4, 5, 1},
      {2, 3, 7, 6},
      {0, 2, 6, 4},
      {1, 5, 7, 3},
  }};
  for (const auto& f : faces) {
    m.triangles.push_back({f[0], f[1], f[2]});
    m.triangles.push_back({f[0], f[2], f[3]});
  }
  return m;
}

/// UV-sphere mesh with valid (non-degenerate) triangles only.
inline prox::TriangleMesh make_sphere_mesh(double radius = 1.0, int rings = 8, int segments = 12) {
  prox::TriangleMesh m;
  for (int r = 0; r <= rings; ++r) {
    const double phi = 3.14159265358979323846 * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double theta = 2.0 * 3.14159265358979323846 * s / segments;
      m.vertices.push_back(radius * prox::Vec3(std::sin(phi) * std::cos(theta), std::cos(phi),
                                               std::sin(phi) * std::sin(theta)));
    }
  }
  auto at = [&](int r, int s) { return r * segments + (s % segments); };
  for (int r = 0; r < rings; ++r) {
    for (int s = 0; s < segments; ++s) {
      if (r > 0) m.triangles.push_back({at(r, s), at(r + 1, s), at(r, s + 1)});
      if (r + 1 < rings) m.triangles.push_back({at(r, s + 1), at(r + 1, s), at(r + 1, s + 1)});
    }
  }
  m.filter_degenerate();
  return m;
}

}  // namespace testutil
