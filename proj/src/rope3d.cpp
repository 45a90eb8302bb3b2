// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#include "proxyrender/rope3d.hpp"

#include <string>

#include "proxyrender/errors.hpp"

namespace prox {

void RopeConfig::validate() const {
  auto bad = [&](const std::string& why) {
    throw InvalidInput("rope config: " + why);
  };
  if (head_dim < 6) bad("head_dim must be >= 6, got " + std::to_string(head_dim));
  if (d_t + d_h + d_w != head_dim) bad("axis dims must sum to head_dim");
  for (int d : {d_t, d_h, d_w}) {
    if (d < 2) bad("each axis dim must be >= 2");
    if (d % 2 != 0) bad("each axis dim must be even");
  }
  if (!(theta_base > 1.0)) bad("theta_base must be > 1");
}

RopeConfig RopeConfig::with_default_split(int head_dim, double theta_base) {
  if (head_dim < 6 || head_dim % 2 != 0) {
    throw InvalidInput("rope config: head_dim must be even and >= 6, got " +
                       std::to_string(head_dim));
  }
  auto even_ceil = [](int num, int den) { return 2 * ((num + 2 * den - 1) / (2 * den)); };
  auto even_floor = [](int num, int den) { return 2 * (num / (2 * den)); };
  int dh = even_ceil(head_dim, 3);
  int dt = head_dim - 2 * dh;
  if (dt < 2) {
    dh = even_floor(head_dim, 3);
    dt = head_dim - 2 * dh;
  }
  RopeConfig cfg;
  cfg.head_dim = head_dim;
  cfg.d_t = dt;
  cfg.d_h = dh;
  cfg.d_w = dh;
  cfg.theta_base = theta_base;
  cfg.validate();
  return cfg;
}

std::vector<std::int64_t> temporal_indices(int n_refs, int m_targets, int gap) {
  if (n_refs < 0 || m_targets < 0) {
    throw InvalidInput("temporal_indices: counts must be non-negative");
  }
  if (gap < 0) throw InvalidInput("temporal_indices: gap must be non-negative");
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(n_refs) + static_cast<std::size_t>(m_targets));
  for (int k = n_refs; k >= 1; --k) {
    out.push_back(-static_cast<std::int64_t>(k) * gap);
  }
  for (int k = 0; k < m_targets; ++k) out.push_back(k);
  return out;
}

std::vector<double> rope_phases(const TokenIndex3D& idx, const RopeConfig& cfg) {
  cfg.validate();
  std::vector<double> phases;
  phases.reserve(static_cast<std::size_t>(cfg.head_dim / 2));
  auto axis = [&](double pos, int d) {
    for (int i = 0; i < d / 2; ++i) {
      const double freq = std::pow(cfg.theta_base, -2.0 * i / d);
      phases.push_back(pos * freq);
    }
  };
  axis(static_cast<double>(idx.t), cfg.d_t);
  axis(static_cast<double>(idx.h), cfg.d_h);
  axis(static_cast<double>(idx.w), cfg.d_w);
  return phases;
}

}  // namespace prox
