#include "motionnet/floio.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "motionnet/errors.hpp"

namespace motionnet {

namespace {

constexpr float kFloMagic = 202021.25f;

uint32_t read_u32le(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

void write_u32le(std::ostream& os, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

float bits_to_float(uint32_t v) {
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

uint32_t float_to_bits(float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  return v;
}

}  // namespace

Tensor read_flo(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("read_flo: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12) {
    throw ParseError("read_flo: " + path + " truncated at byte " + std::to_string(bytes.size()) +
                     " (header needs 12)");
  }
  if (bits_to_float(read_u32le(bytes.data())) != kFloMagic) {
    throw ParseError("read_flo: bad magic at byte 0 in " + path);
  }
  const auto w = static_cast<int32_t>(read_u32le(bytes.data() + 4));
  const auto h = static_cast<int32_t>(read_u32le(bytes.data() + 8));
  if (w <= 0) throw ParseError("read_flo: nonpositive width at byte 4 in " + path);
  if (h <= 0) throw ParseError("read_flo: nonpositive height at byte 8 in " + path);
  const size_t expected = 12 + static_cast<size_t>(w) * static_cast<size_t>(h) * 8;
  if (bytes.size() < expected) {
    throw ParseError("read_flo: " + path + " truncated at byte " + std::to_string(bytes.size()) +
                     " (expected " + std::to_string(expected) + ")");
  }
  Tensor flow = Tensor::zeros({2, h, w});
  const unsigned char* p = bytes.data() + 12;
  for (int64_t i = 0; i < h; ++i) {
    for (int64_t j = 0; j < w; ++j) {
      flow.data[static_cast<size_t>(0 * h * w + i * w + j)] =
          static_cast<double>(bits_to_float(read_u32le(p)));
      flow.data[static_cast<size_t>(1 * h * w + i * w + j)] =
          static_cast<double>(bits_to_float(read_u32le(p + 4)));
      p += 8;
    }
  }
  return flow;
}

void write_flo(const std::string& path, const Tensor& flow) {
  const Tensor* f = &flow;
  Tensor squeezed;
  if (flow.ndim() == 4 && flow.dim(0) == 1 && flow.dim(1) == 2) {
    squeezed = flow;
    squeezed.shape = {2, flow.dim(2), flow.dim(3)};
    f = &squeezed;
  }
  if (f->ndim() != 3 || f->dim(0) != 2) {
    throw InputError("write_flo: expected a single [2,H,W] field, got " + flow.shape_str());
  }
  const int64_t h = f->dim(1), w = f->dim(2);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("write_flo: cannot open " + path);
  write_u32le(out, float_to_bits(kFloMagic));
  write_u32le(out, static_cast<uint32_t>(w));
  write_u32le(out, static_cast<uint32_t>(h));
  for (int64_t i = 0; i < h; ++i) {
    for (int64_t j = 0; j < w; ++j) {
      write_u32le(out, float_to_bits(static_cast<float>(f->data[static_cast<size_t>(i * w + j)])));
      write_u32le(out,
                  float_to_bits(static_cast<float>(f->data[static_cast<size_t>(h * w + i * w + j)])));
    }
  }
  if (!out) throw ParseError("write_flo: short write to " + path);
}

}  // namespace motionnet
