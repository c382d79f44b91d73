// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include "vtg/png.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vtg {

void Canvas::set(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
  if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
  const size_t i = (static_cast<size_t>(y) * w_ + x) * 3;
  rgb_[i] = r;
  rgb_[i + 1] = g;
  rgb_[i + 2] = b;
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b) {
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) set(x, y, r, g, b);
}

void Canvas::line(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    set(x0, y0, r, g, b);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

namespace {

// 3x5 glyphs, one row per byte (3 low bits, msb-left)
struct Glyph {
  char c;
  uint8_t rows[5];
};
constexpr Glyph kFont[] = {
    {'0', {0b111, 0b101, 0b101, 0b101, 0b111}}, {'1', {0b010, 0b110, 0b010, 0b010, 0b111}},
    {'2', {0b111, 0b001, 0b111, 0b100, 0b111}}, {'3', {0b111, 0b001, 0b111, 0b001, 0b111}},
    {'4', {0b101, 0b101, 0b111, 0b001, 0b001}}, {'5', {0b111, 0b100, 0b111, 0b001, 0b111}},
    {'6', {0b111, 0b100, 0b111, 0b101, 0b111}}, {'7', {0b111, 0b001, 0b010, 0b010, 0b010}},
    {'8', {0b111, 0b101, 0b111, 0b101, 0b111}}, {'9', {0b111, 0b101, 0b111, 0b001, 0b111}},
    {'.', {0b000, 0b000, 0b000, 0b000, 0b010}}, {'-', {0b000, 0b000, 0b111, 0b000, 0b000}},
    {'+', {0b000, 0b010, 0b111, 0b010, 0b000}}, {'e', {0b000, 0b111, 0b110, 0b100, 0b111}},
    {':', {0b000, 0b010, 0b000, 0b010, 0b000}}, {' ', {0, 0, 0, 0, 0}},
};

const uint8_t* glyph_rows(char c) {
  for (const Glyph& g : kFont)
    if (g.c == c) return g.rows;
  return kFont[15].rows;  // blank
}

void push_u32(std::vector<uint8_t>& v, uint32_t x) {
  v.push_back(static_cast<uint8_t>(x >> 24));
  v.push_back(static_cast<uint8_t>(x >> 16));
  v.push_back(static_cast<uint8_t>(x >> 8));
  v.push_back(static_cast<uint8_t>(x));
}

void write_chunk(std::ofstream& out, const char type[4], const std::vector<uint8_t>& data) {
  std::vector<uint8_t> hdr;
  push_u32(hdr, static_cast<uint32_t>(data.size()));
  out.write(reinterpret_cast<const char*>(hdr.data()), 4);
  out.write(type, 4);
  if (!data.empty())
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
  if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
  std::vector<uint8_t> tail;
  push_u32(tail, static_cast<uint32_t>(crc));
  out.write(reinterpret_cast<const char*>(tail.data()), 4);
}

}  // namespace

void Canvas::text(int x, int y, const std::string& s, uint8_t r, uint8_t g, uint8_t b) {
  int cx = x;
  for (char c : s) {
    const uint8_t* rows = glyph_rows(c);
    for (int ry = 0; ry < 5; ++ry)
      for (int rx = 0; rx < 3; ++rx)
        if (rows[ry] & (1 << (2 - rx))) set(cx + rx, y + ry, r, g, b);
    cx += 4;
  }
}

void Canvas::save_png(const std::string& path) const {
  std::vector<uint8_t> scan;
  scan.reserve(static_cast<size_t>(h_) * (static_cast<size_t>(w_) * 3 + 1));
  for (int y = 0; y < h_; ++y) {
    scan.push_back(0);  // filter: none
    const size_t off = static_cast<size_t>(y) * w_ * 3;
    scan.insert(scan.end(), rgb_.begin() + static_cast<long>(off),
                rgb_.begin() + static_cast<long>(off + static_cast<size_t>(w_) * 3));
  }
  uLongf bound = compressBound(static_cast<uLong>(scan.size()));
  std::vector<uint8_t> idat(bound);
  if (compress2(idat.data(), &bound, scan.data(), static_cast<uLong>(scan.size()), 6) != Z_OK)
    throw std::runtime_error("png: deflate failed");
  idat.resize(bound);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("png: cannot write " + path);
  static const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  out.write(reinterpret_cast<const char*>(sig), 8);
  std::vector<uint8_t> ihdr;
  push_u32(ihdr, static_cast<uint32_t>(w_));
  push_u32(ihdr, static_cast<uint32_t>(h_));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // RGB
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  write_chunk(out, "IHDR", ihdr);
  write_chunk(out, "IDAT", idat);
  write_chunk(out, "IEND", {});
}

}  // namespace vtg
