#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace motionnet {

/// 8-bit interleaved RGB image.
struct ColorImage {
  int64_t h = 0, w = 0;
  std::vector<unsigned char> rgb;  // h*w*3

  ColorImage() = default;
  ColorImage(int64_t h_, int64_t w_) : h(h_), w(w_), rgb(static_cast<size_t>(h_ * w_ * 3), 0) {}

  unsigned char* px(int64_t i, int64_t j) { return rgb.data() + (i * w + j) * 3; }
  const unsigned char* px(int64_t i, int64_t j) const { return rgb.data() + (i * w + j) * 3; }
};

/// Writes 8-bit RGB PNG. Throws ParseError on I/O failure.
void write_png(const std::string& path, const ColorImage& img);

/// Reads any PNG as 8-bit RGB (palette/gray/alpha inputs are expanded).
ColorImage read_png(const std::string& path);

}  // namespace motionnet
