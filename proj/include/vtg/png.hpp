// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vtg {

/// Minimal RGB canvas with deterministic PNG output (zlib-deflated, no
/// filtering). Enough for diagnostic line plots and heat maps.
class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), rgb_(static_cast<size_t>(w) * h * 3, 255) {}

  int width() const { return w_; }
  int height() const { return h_; }

  void set(int x, int y, uint8_t r, uint8_t g, uint8_t b);
  void fill_rect(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b);
  void line(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b);
  /// 3x5 bitmap glyphs: digits, '.', '-', '+', 'e', ':', ' '.
  void text(int x, int y, const std::string& s, uint8_t r, uint8_t g, uint8_t b);

  void save_png(const std::string& path) const;

 private:
  int w_, h_;
  std::vector<uint8_t> rgb_;
};

}  // namespace vtg
