// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace prox {

/// Dense row-major float32 tensor. This is the repo-wide carrier for images,
/// coordinate maps, packed channel stacks, and model parameters.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, float fill = 0.0f);

  static Tensor zeros(std::vector<std::size_t> dims) { return Tensor(std::move(dims)); }
  static Tensor full(std::vector<std::size_t> dims, float v) { return Tensor(std::move(dims), v); }

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  float& at(std::size_t i0, std::size_t i1) { return data_[i0 * dims_[1] + i1]; }
  float at(std::size_t i0, std::size_t i1) const { return data_[i0 * dims_[1] + i1]; }
  float& at(std::size_t i0, std::size_t i1, std::size_t i2) {
    return data_[(i0 * dims_[1] + i1) * dims_[2] + i2];
  }
  float at(std::size_t i0, std::size_t i1, std::size_t i2) const {
    return data_[(i0 * dims_[1] + i1) * dims_[2] + i2];
  }
  float& at(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) {
    return data_[((i0 * dims_[1] + i1) * dims_[2] + i2) * dims_[3] + i3];
  }
  float at(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) const {
    return data_[((i0 * dims_[1] + i1) * dims_[2] + i2) * dims_[3] + i3];
  }

  bool same_shape(const Tensor& other) const { return dims_ == other.dims_; }

 private:
  std::vector<std::size_t> dims_;
  std::vector<float> data_;
};

// Binary tensor container ("GORT"): magic "GORT", version u32=1,
// dtype u8 (0 = f32 little-endian), ndim u8, dims u64[ndim], raw data.
// A .gort file holds one or more records back to back; record order is
// part of each file's documented schema.

void write_tensor_record(std::ostream& out, const Tensor& t);
Tensor read_tensor_record(std::istream& in);

void write_tensor_file(const std::string& path, const Tensor& t);
Tensor read_tensor_file(const std::string& path);

void write_tensor_records(const std::string& path, const std::vector<Tensor>& ts);
std::vector<Tensor> read_tensor_records(const std::string& path);

}  // namespace prox
