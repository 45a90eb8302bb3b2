// Copyright (c) 2026 the proxyrender authors
// SPDX-License-Identifier: Apache-2.0
#include "proxyrender/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "proxyrender/errors.hpp"

namespace prox {

namespace {

constexpr unsigned char kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

void put_u32_be(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>(v & 0xff));
}

std::uint32_t get_u32_be(const unsigned char* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::vector<unsigned char>& out, const char type[4],
                  const std::vector<unsigned char>& payload) {
  put_u32_be(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const uLong crc = crc32(0L, out.data() + crc_start, static_cast<uInt>(4 + payload.size()));
  put_u32_be(out, static_cast<std::uint32_t>(crc));
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a);
  const int pb = std::abs(p - b);
  const int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

void write_png(const std::string& path, const Tensor& image) {
  if (image.rank() != 3 || (image.dim(2) != 1 && image.dim(2) != 3)) {
    throw InvalidInput("write_png: expected [H, W, 1] or [H, W, 3]");
  }
  const std::size_t h = image.dim(0);
  const std::size_t w = image.dim(1);
  const std::size_t ch = image.dim(2);
  if (h == 0 || w == 0) throw InvalidInput("write_png: empty image");

  // Filter byte 0 (None) per scanline.
  std::vector<unsigned char> raw((w * ch + 1) * h);
  std::size_t at = 0;
  for (std::size_t y = 0; y < h; ++y) {
    raw[at++] = 0;
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        const float v = std::clamp(image.at(y, x, c), 0.0f, 1.0f);
        raw[at++] = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                Z_DEFAULT_COMPRESSION) != Z_OK) {
    throw IoError("write_png: deflate failed");
  }
  compressed.resize(bound);

  std::vector<unsigned char> ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(w));
  put_u32_be(ihdr, static_cast<std::uint32_t>(h));
  ihdr.push_back(8);                          // bit depth
  ihdr.push_back(ch == 3 ? 2 : 0);            // color type
  ihdr.push_back(0);                          // compression
  ihdr.push_back(0);                          // filter
  ihdr.push_back(0);                          // interlace

  std::vector<unsigned char> out(kSignature, kSignature + 8);
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", compressed);
  append_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path);
}

Tensor read_png(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0) {
    throw IoError("not a png file: " + path);
  }

  std::size_t w = 0, h = 0, channels = 0;
  std::vector<unsigned char> idat;
  std::size_t at = 8;
  bool saw_end = false;
  while (at + 8 <= bytes.size()) {
    const std::uint32_t len = get_u32_be(bytes.data() + at);
    if (at + 12 + len > bytes.size()) throw IoError("truncated png chunk: " + path);
    const char* type = reinterpret_cast<const char*>(bytes.data() + at + 4);
    const unsigned char* payload = bytes.data() + at + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw IoError("bad IHDR: " + path);
      w = get_u32_be(payload);
      h = get_u32_be(payload + 4);
      const int depth = payload[8];
      const int color = payload[9];
      const int interlace = payload[12];
      if (depth != 8 || interlace != 0 || (color != 0 && color != 2 && color != 6)) {
        throw IoError("unsupported png (need 8-bit, non-interlaced, gray/RGB/RGBA): " + path);
      }
      channels = color == 0 ? 1 : (color == 2 ? 3 : 4);
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_end = true;
      break;
    }
    at += 12 + len;
  }
  if (w == 0 || h == 0 || channels == 0) throw IoError("png missing IHDR: " + path);
  if (idat.empty() || !saw_end) throw IoError("png missing image data: " + path);

  const std::size_t stride = w * channels;
  std::vector<unsigned char> raw((stride + 1) * h);
  uLongf raw_len = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      raw_len != raw.size()) {
    throw IoError("png inflate failed: " + path);
  }

  // Undo per-scanline filters in place into `pixels`.
  std::vector<unsigned char> pixels(stride * h);
  const std::size_t bpp = channels;
  for (std::size_t y = 0; y < h; ++y) {
    const unsigned char filter = raw[y * (stride + 1)];
    const unsigned char* src = raw.data() + y * (stride + 1) + 1;
    unsigned char* dst = pixels.data() + y * stride;
    const unsigned char* prev = y > 0 ? pixels.data() + (y - 1) * stride : nullptr;
    for (std::size_t i = 0; i < stride; ++i) {
      const int left = i >= bpp ? dst[i - bpp] : 0;
      const int up = prev ? prev[i] : 0;
      const int up_left = (prev && i >= bpp) ? prev[i - bpp] : 0;
      int v = src[i];
      switch (filter) {
        case 0: break;
        case 1: v += left; break;
        case 2: v += up; break;
        case 3: v += (left + up) / 2; break;
        case 4: v += paeth(left, up, up_left); break;
        default: throw IoError("unsupported png filter: " + path);
      }
      dst[i] = static_cast<unsigned char>(v & 0xff);
    }
  }

  Tensor out({h, w, 3});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const unsigned char* px = pixels.data() + y * stride + x * channels;
      for (std::size_t c = 0; c < 3; ++c) {
        const unsigned char v = channels == 1 ? px[0] : px[c];
        out.at(y, x, c) = static_cast<float>(v) / 255.0f;
      }
    }
  }
  return out;
}

Tensor coordmap_to_image(const CoordinateMap& map) {
  Tensor out({static_cast<std::size_t>(map.height), static_cast<std::size_t>(map.width), 3});
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const std::size_t at = map.index(x, y);
      if (!map.validity[at]) continue;
      for (std::size_t c = 0; c < 3; ++c) {
        out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) =
            map.coords[at * 3 + c];
      }
    }
  }
  return out;
}

}  // namespace prox
