#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "motionnet/errors.hpp"
#include "motionnet/floio.hpp"
#include "motionnet/flowviz.hpp"
#include "motionnet/pngio.hpp"
#include "motionnet/rng.hpp"
#include "motionnet/tensor.hpp"

using namespace motionnet;

namespace {

std::string tmp_path(const char* name) {
  return std::string("/tmp/motionnet_floio_") + name;
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void push_f32le(std::vector<unsigned char>& bytes, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  bytes.push_back(static_cast<unsigned char>(v));
  bytes.push_back(static_cast<unsigned char>(v >> 8));
  bytes.push_back(static_cast<unsigned char>(v >> 16));
  bytes.push_back(static_cast<unsigned char>(v >> 24));
}

void push_u32le(std::vector<unsigned char>& bytes, uint32_t v) {
  bytes.push_back(static_cast<unsigned char>(v));
  bytes.push_back(static_cast<unsigned char>(v >> 8));
  bytes.push_back(static_cast<unsigned char>(v >> 16));
  bytes.push_back(static_cast<unsigned char>(v >> 24));
}

}  // namespace

TEST_SUITE("floio") {

TEST_CASE("flo round-trip is exact for float32-representable values") {
  Rng rng(17);
  Tensor flow = Tensor::zeros({2, 5, 7});
  for (double& v : flow.data) {
    // Draw doubles, then snap to float32 so the round-trip must be bitwise.
    v = static_cast<double>(static_cast<float>(rng.uniform(-30.0, 30.0)));
  }
  const std::string path = tmp_path("roundtrip.flo");
  write_flo(path, flow);
  Tensor back = read_flo(path);
  CHECK(back.shape == flow.shape);
  CHECK(back.data == flow.data);
}

TEST_CASE("write_flo accepts a leading batch dimension of one") {
  Tensor batched = Tensor::zeros({1, 2, 3, 4});
  for (size_t i = 0; i < batched.data.size(); ++i) batched.data[i] = static_cast<double>(i);
  const std::string path = tmp_path("batched.flo");
  write_flo(path, batched);
  Tensor back = read_flo(path);
  CHECK(back.shape == std::vector<int64_t>{2, 3, 4});
  CHECK(back.data == batched.data);

  CHECK_THROWS_AS(write_flo(path, Tensor::zeros({3, 4, 4})), InputError);
  CHECK_THROWS_AS(write_flo(path, Tensor::zeros({2, 2, 3, 4})), InputError);
}

TEST_CASE("hand-built 2x2 fixture parses to the documented layout") {
  // Header: magic, width=2, height=2; then row-major (u,v) pairs.
  std::vector<unsigned char> bytes;
  push_f32le(bytes, 202021.25f);
  push_u32le(bytes, 2);
  push_u32le(bytes, 2);
  const float uv[8] = {1.0f, -1.0f,   // (0,0)
                       2.0f, -2.0f,   // (0,1)
                       3.0f, -3.0f,   // (1,0)
                       4.0f, -4.0f};  // (1,1)
  for (float f : uv) push_f32le(bytes, f);
  const std::string path = tmp_path("fixture.flo");
  write_bytes(path, bytes);

  Tensor flow = read_flo(path);
  REQUIRE(flow.shape == std::vector<int64_t>{2, 2, 2});
  // Channel 0 = u (horizontal), channel 1 = v, row-major within each plane.
  CHECK(flow.data == std::vector<double>{1, 2, 3, 4, -1, -2, -3, -4});
}

TEST_CASE("parse errors name the failing byte") {
  const std::string path = tmp_path("bad.flo");

  SUBCASE("missing file") {
    CHECK_THROWS_WITH_AS(read_flo("/nonexistent/nope.flo"),
                         doctest::Contains("cannot open"), ParseError);
  }

  SUBCASE("bad magic") {
    std::vector<unsigned char> bytes;
    push_f32le(bytes, 123.0f);
    push_u32le(bytes, 1);
    push_u32le(bytes, 1);
    push_f32le(bytes, 0.0f);
    push_f32le(bytes, 0.0f);
    write_bytes(path, bytes);
    CHECK_THROWS_WITH_AS(read_flo(path), doctest::Contains("bad magic at byte 0"), ParseError);
  }

  SUBCASE("short header") {
    write_bytes(path, {0x50, 0x49, 0x45});
    CHECK_THROWS_WITH_AS(read_flo(path), doctest::Contains("truncated at byte 3"), ParseError);
  }

  SUBCASE("truncated payload") {
    std::vector<unsigned char> bytes;
    push_f32le(bytes, 202021.25f);
    push_u32le(bytes, 2);
    push_u32le(bytes, 2);
    push_f32le(bytes, 1.0f);  // 4 of 32 payload bytes
    write_bytes(path, bytes);
    CHECK_THROWS_WITH_AS(read_flo(path), doctest::Contains("truncated at byte 16"), ParseError);
  }

  SUBCASE("nonpositive dimensions") {
    std::vector<unsigned char> bytes;
    push_f32le(bytes, 202021.25f);
    push_u32le(bytes, 0);
    push_u32le(bytes, 2);
    write_bytes(path, bytes);
    CHECK_THROWS_WITH_AS(read_flo(path), doctest::Contains("width at byte 4"), ParseError);
  }
}

TEST_CASE("png round-trip preserves 8-bit RGB") {
  ColorImage img(5, 9);
  for (int64_t i = 0; i < img.h; ++i) {
    for (int64_t j = 0; j < img.w; ++j) {
      img.px(i, j)[0] = static_cast<unsigned char>(13 * i + j);
      img.px(i, j)[1] = static_cast<unsigned char>(200 - 7 * j);
      img.px(i, j)[2] = static_cast<unsigned char>(i * j);
    }
  }
  const std::string path = tmp_path("roundtrip.png");
  write_png(path, img);
  ColorImage back = read_png(path);
  REQUIRE(back.h == img.h);
  REQUIRE(back.w == img.w);
  CHECK(back.rgb == img.rgb);

  CHECK_THROWS_AS(read_png("/nonexistent/nope.png"), ParseError);
}

TEST_CASE("flow color coding invariants") {
  CHECK(flow_color_wheel_size() == 55);

  // Zero flow renders white.
  Tensor zero = Tensor::zeros({2, 4, 4});
  ColorImage white = flow_to_color(zero, 1.0);
  for (unsigned char c : white.rgb) CHECK(static_cast<int>(c) == 255);

  // Unknown-flow sentinels render black.
  Tensor bad = Tensor::zeros({2, 2, 2});
  bad.data[0] = 1e10;
  ColorImage img = flow_to_color(bad, 1.0);
  CHECK(static_cast<int>(img.px(0, 0)[0]) == 0);
  CHECK(static_cast<int>(img.px(0, 0)[1]) == 0);
  CHECK(static_cast<int>(img.px(0, 0)[2]) == 0);
  // ... but only for the offending pixel.
  CHECK(static_cast<int>(img.px(1, 1)[0]) == 255);

  // Opposite directions land on different wheel colors.
  Tensor lr = Tensor::zeros({2, 1, 2});
  lr.data[0] = 1.0;   // u at (0,0)
  lr.data[1] = -1.0;  // u at (0,1)
  ColorImage two = flow_to_color(lr, 1.0);
  bool differs = false;
  for (int k = 0; k < 3; ++k) {
    if (two.px(0, 0)[k] != two.px(0, 1)[k]) differs = true;
  }
  CHECK(differs);

  CHECK_THROWS_AS(flow_to_color(Tensor::zeros({3, 2, 2}), 1.0), InputError);
}

}  // TEST_SUITE
