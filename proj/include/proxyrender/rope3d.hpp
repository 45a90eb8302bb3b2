// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace prox {

/// Position of a token in the joint (time, height, width) grid. Reference
/// tokens carry negative temporal indices {-N*g, ..., -g}; target frames
/// use {0, ..., M-1}.
struct TokenIndex3D {
  std::int64_t t = 0;
  int h = 0;
  int w = 0;
  bool operator==(const TokenIndex3D&) const = default;
};

/// Axis split of a rotary head. d_t + d_h + d_w == head_dim, each even >= 2.
struct RopeConfig {
  int head_dim = 16;
  int d_t = 4;
  int d_h = 6;
  int d_w = 6;
  double theta_base = 10000.0;

  void validate() const;

  /// Largest even allocation to h and w, remainder to t (16 -> 4,6,6).
  static RopeConfig with_default_split(int head_dim, double theta_base = 10000.0);
};

/// The joint temporal index sequence {-N*g, -(N-1)*g, ..., -g, 0, 1, ..., M-1}.
std::vector<std::int64_t> temporal_indices(int n_refs, int m_targets, int gap);

/// Rotation phases for one token: head_dim/2 angles, t block then h then w.
/// Within axis a: phi_i = idx_a * theta_base^(-2i/d_a), i in [0, d_a/2).
std::vector<double> rope_phases(const TokenIndex3D& idx, const RopeConfig& cfg);

/// Pairwise 2D rotation of adjacent lanes (x[2i], x[2i+1]) by phases[i].
template <typename T>
void apply_rope(const double* phases, T* vec, int head_dim) {
  for (int i = 0; i < head_dim / 2; ++i) {
    const T c = static_cast<T>(std::cos(phases[i]));
    const T s = static_cast<T>(std::sin(phases[i]));
    const T a = vec[2 * i];
    const T b = vec[2 * i + 1];
    vec[2 * i] = a * c - b * s;
    vec[2 * i + 1] = a * s + b * c;
  }
}

/// Precomputed cos/sin per token, laid out [token][head_dim/2].
template <typename T>
struct RopeTable {
  int head_dim = 0;
  std::vector<T> cos_table;
  std::vector<T> sin_table;

  RopeTable() = default;
  RopeTable(const std::vector<TokenIndex3D>& indices, const RopeConfig& cfg)
      : head_dim(cfg.head_dim) {
    const std::size_t half = static_cast<std::size_t>(cfg.head_dim / 2);
    cos_table.resize(indices.size() * half);
    sin_table.resize(indices.size() * half);
    for (std::size_t tok = 0; tok < indices.size(); ++tok) {
      const std::vector<double> phases = rope_phases(indices[tok], cfg);
      for (std::size_t i = 0; i < half; ++i) {
        cos_table[tok * half + i] = static_cast<T>(std::cos(phases[i]));
        sin_table[tok * half + i] = static_cast<T>(std::sin(phases[i]));
      }
    }
  }

  /// Rotate `vec` (head_dim lanes) by token `tok`'s phases.
  void rotate(std::size_t tok, T* vec) const {
    const std::size_t half = static_cast<std::size_t>(head_dim / 2);
    const T* c = cos_table.data() + tok * half;
    const T* s = sin_table.data() + tok * half;
    for (std::size_t i = 0; i < half; ++i) {
      const T a = vec[2 * i];
      const T b = vec[2 * i + 1];
      vec[2 * i] = a * c[i] - b * s[i];
      vec[2 * i + 1] = a * s[i] + b * c[i];
    }
  }

  /// Inverse rotation; the exact adjoint used in backpropagation.
  void rotate_transpose(std::size_t tok, T* vec) const {
    const std::size_t half = static_cast<std::size_t>(head_dim / 2);
    const T* c = cos_table.data() + tok * half;
    const T* s = sin_table.data() + tok * half;
    for (std::size_t i = 0; i < half; ++i) {
      const T a = vec[2 * i];
      const T b = vec[2 * i + 1];
      vec[2 * i] = a * c[i] + b * s[i];
      vec[2 * i + 1] = -a * s[i] + b * c[i];
    }
  }
};

}  // namespace prox
