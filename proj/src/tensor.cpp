// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#include "proxyrender/tensor.hpp"

#include <cstring>
#include <fstream>
#include <limits>

#include "proxyrender/errors.hpp"

namespace prox {

namespace {

constexpr char kMagic[4] = {'G', 'O', 'R', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims, float fill) : dims_(std::move(dims)) {
  std::size_t n = dims_.empty() ? 0 : 1;
  for (std::size_t d : dims_) n *= d;
  data_.assign(n, fill);
}

void write_tensor_record(std::ostream& out, const Tensor& t) {
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  out.put(static_cast<char>(kDtypeF32));
  out.put(static_cast<char>(t.rank()));
  for (std::size_t d : t.dims()) put_u64(out, d);
  static_assert(sizeof(float) == 4);
  // f32 payload is written verbatim; this code only targets IEEE-754
  // little-endian hosts, asserted here.
  const std::uint32_t probe_bits = 0x3f800000u;
  float probe;
  std::memcpy(&probe, &probe_bits, 4);
  if (probe != 1.0f) throw IoError("tensor container requires IEEE-754 little-endian floats");
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
  if (!out) throw IoError("failed to write tensor record");
}

Tensor read_tensor_record(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("bad tensor container: magic mismatch");
  const std::uint32_t version = get_u32(in);
  if (version != kVersion)
    throw IoError("bad tensor container: unsupported version " + std::to_string(version));
  const int dtype = in.get();
  if (dtype != kDtypeF32)
    throw IoError("bad tensor container: unsupported dtype " + std::to_string(dtype));
  const int ndim = in.get();
  if (ndim < 0 || ndim > 16) throw IoError("bad tensor container: ndim out of range");
  std::vector<std::size_t> dims(static_cast<std::size_t>(ndim));
  std::size_t total = 1;
  for (auto& d : dims) {
    const std::uint64_t v = get_u64(in);
    if (v > std::numeric_limits<std::size_t>::max() / (total ? total : 1))
      throw IoError("bad tensor container: dims overflow");
    d = static_cast<std::size_t>(v);
    total *= d;
  }
  if (!in) throw IoError("bad tensor container: truncated header");
  Tensor t(dims);
  in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
  if (!in) throw IoError("bad tensor container: truncated payload");
  return t;
}

void write_tensor_file(const std::string& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_tensor_record(out, t);
}

Tensor read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return read_tensor_record(in);
}

void write_tensor_records(const std::string& path, const std::vector<Tensor>& ts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const Tensor& t : ts) write_tensor_record(out, t);
}

std::vector<Tensor> read_tensor_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::vector<Tensor> ts;
  while (in.peek() != std::char_traits<char>::eof()) ts.push_back(read_tensor_record(in));
  return ts;
}

}  // namespace prox
