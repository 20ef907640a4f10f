#include <array>
#include <cmath>
#include <cstdint>

#include "doctest.h"
#include "motionnet/errors.hpp"
#include "motionnet/graph.hpp"
#include "motionnet/synth.hpp"
#include "motionnet/tensor.hpp"

using namespace motionnet;

namespace {

SampleSpec translate_spec(double dx, double dy, int64_t extent = 16,
                          TextureKind tex = TextureKind::Checker) {
  SampleSpec s;
  s.extent = extent;
  s.texture = tex;
  s.motion.kind = MotionKind::Translate;
  s.motion.dx = dx;
  s.motion.dy = dy;
  return s;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("generation is bit-identical for a given seed") {
  SampleSpec s = translate_spec(1.25, -0.75, 16, TextureKind::Noise);
  ClipSample a = gen_pair(42, s);
  ClipSample b = gen_pair(42, s);
  CHECK(a.frames.data == b.frames.data);
  CHECK(a.gt_flows.data == b.gt_flows.data);
  CHECK(a.fg_mask.data == b.fg_mask.data);

  ClipSample c = gen_pair(43, s);
  CHECK(a.frames.data != c.frames.data);
}

TEST_CASE("whole-frame translation has constant exact ground truth") {
  // 3 steps of (1.25,-0.5) keep the cumulative motion within extent/4 = 4.
  ClipSample clip = gen_clip(7, translate_spec(1.25, -0.5), 4);
  CHECK(clip.frames.shape == std::vector<int64_t>{4, 3, 16, 16});
  CHECK(clip.gt_flows.shape == std::vector<int64_t>{3, 2, 16, 16});
  CHECK(clip.label == -1);
  for (int64_t t = 0; t < 3; ++t) {
    for (int64_t i = 0; i < 16; ++i) {
      for (int64_t j = 0; j < 16; ++j) {
        CHECK(clip.gt_flows.at4(t, 0, i, j) == 1.25);
        CHECK(clip.gt_flows.at4(t, 1, i, j) == -0.5);
      }
    }
  }
  // No foreground object: the mask is all ones.
  for (double v : clip.fg_mask.data) CHECK(v == 1.0);
}

TEST_CASE("rotation field matches the closed form") {
  SampleSpec s;
  s.extent = 17;  // odd extent puts the center on a pixel
  s.motion.kind = MotionKind::Rotate;
  s.motion.theta = 0.1;
  ClipSample clip = gen_pair(3, s);
  const double c = 8.0;  // (17-1)/2

  // Center pixel does not move.
  CHECK(clip.gt_flows.at4(0, 0, 8, 8) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(clip.gt_flows.at4(0, 1, 8, 8) == doctest::Approx(0.0).epsilon(1e-12));

  // Arbitrary pixel: v = R(theta) (p - c) - (p - c).
  const int64_t i = 3, j = 13;
  const double dx = static_cast<double>(j) - c, dy = static_cast<double>(i) - c;
  const double want_x = std::cos(0.1) * dx - std::sin(0.1) * dy - dx;
  const double want_y = std::sin(0.1) * dx + std::cos(0.1) * dy - dy;
  CHECK(clip.gt_flows.at4(0, 0, i, j) == doctest::Approx(want_x).epsilon(1e-12));
  CHECK(clip.gt_flows.at4(0, 1, i, j) == doctest::Approx(want_y).epsilon(1e-12));
}

TEST_CASE("frames are photometrically consistent with the ground truth") {
  // Integer translation: backward-warping frame t+1 by the ground truth lands
  // exactly on frame t's samples, so interior pixels must match to rounding.
  ClipSample clip = gen_clip(11, translate_spec(2.0, 1.0, 24, TextureKind::Noise), 3);
  Graph g;
  for (int64_t t = 0; t < 2; ++t) {
    Tensor f0 = Tensor::zeros({1, 3, 24, 24});
    Tensor f1 = Tensor::zeros({1, 3, 24, 24});
    Tensor fl = Tensor::zeros({1, 2, 24, 24});
    std::copy_n(clip.frames.data.data() + t * 3 * 24 * 24, 3 * 24 * 24, f0.data.data());
    std::copy_n(clip.frames.data.data() + (t + 1) * 3 * 24 * 24, 3 * 24 * 24, f1.data.data());
    std::copy_n(clip.gt_flows.data.data() + t * 2 * 24 * 24, 2 * 24 * 24, fl.data.data());
    auto rec = g.backward_warp(make_value(std::move(f1)), make_value(std::move(fl)));
    double worst = 0.0;
    for (int64_t k = 0; k < 3; ++k) {
      for (int64_t i = 3; i < 21; ++i) {
        for (int64_t j = 3; j < 21; ++j) {
          const double d = std::fabs(rec->data[static_cast<size_t>((k * 24 + i) * 24 + j)] -
                                     f0.at4(0, k, i, j));
          worst = std::max(worst, d);
        }
      }
    }
    CAPTURE(t);
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("translation bounds are enforced") {
  CHECK_THROWS_AS(gen_pair(1, translate_spec(5.0, 0.0, 16)), InputError);  // > 16/4
  CHECK_THROWS_AS(gen_clip(1, translate_spec(2.0, 0.0, 16), 4), InputError);  // cumulative 6 > 4
  SampleSpec zoom;
  zoom.extent = 16;
  zoom.motion.kind = MotionKind::Zoom;
  zoom.motion.scale = 0.0;
  CHECK_THROWS_AS(gen_pair(1, zoom), InputError);
  SampleSpec tiny = translate_spec(0.0, 0.0, 4);
  CHECK_THROWS_AS(gen_pair(1, tiny), InputError);
}

TEST_CASE("class clips cover the label set uniformly") {
  std::array<int, 5> histogram{};
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    ClipSample clip = gen_class_clip(seed, 16, 2);
    REQUIRE(clip.label >= 0);
    REQUIRE(clip.label < 5);
    ++histogram[static_cast<size_t>(clip.label)];
  }
  for (int count : histogram) {
    CHECK(count > 150);
    CHECK(count < 250);
  }
}

TEST_CASE("class motions match their labels") {
  // left/right/up/down are axis translations (y points down, so "up" is
  // negative dy); rotate has a spatially varying field.
  for (int64_t label = 0; label < 4; ++label) {
    ClipSample clip = gen_class_clip(500 + static_cast<uint64_t>(label), 16, 3, label);
    CHECK(clip.label == label);
    const double vx = clip.gt_flows.at4(0, 0, 8, 8);
    const double vy = clip.gt_flows.at4(0, 1, 8, 8);
    CAPTURE(label);
    switch (label) {
      case 0: CHECK(vx < 0.0); CHECK(vy == 0.0); break;
      case 1: CHECK(vx > 0.0); CHECK(vy == 0.0); break;
      case 2: CHECK(vy < 0.0); CHECK(vx == 0.0); break;
      case 3: CHECK(vy > 0.0); CHECK(vx == 0.0); break;
    }
  }
  ClipSample rot = gen_class_clip(777, 16, 3, 4);
  CHECK(rot.label == 4);
  CHECK(rot.gt_flows.at4(0, 0, 0, 0) != rot.gt_flows.at4(0, 0, 15, 15));
  CHECK_THROWS_AS(gen_class_clip(1, 16, 3, 9), InputError);
}

TEST_CASE("dataset presets") {
  DatasetSpec spec;
  spec.count = 6;
  spec.extent = 16;
  spec.frames = 2;
  spec.max_disp = 3.0;

  SUBCASE("translate: unlabeled whole-frame motion within max_disp") {
    spec.preset = "translate";
    for (int64_t i = 0; i < spec.count; ++i) {
      ClipSample c = dataset_sample(spec, i);
      CHECK(c.label == -1);
      CHECK(std::fabs(c.gt_flows.at4(0, 0, 0, 0)) <= 3.0);
      CHECK(std::fabs(c.gt_flows.at4(0, 1, 0, 0)) <= 3.0);
      for (double v : c.fg_mask.data) CHECK(v == 1.0);
    }
    ClipSample again = dataset_sample(spec, 2);
    CHECK(again.frames.data == dataset_sample(spec, 2).frames.data);
  }

  SUBCASE("mixed: odd indices carry a foreground disc") {
    spec.preset = "mixed";
    ClipSample odd = dataset_sample(spec, 1);
    bool saw_zero = false, saw_one = false;
    for (double v : odd.fg_mask.data) (v == 0.0 ? saw_zero : saw_one) = true;
    CHECK(saw_zero);
    CHECK(saw_one);
    ClipSample even = dataset_sample(spec, 2);
    for (double v : even.fg_mask.data) CHECK(v == 1.0);
  }

  SUBCASE("static: identical frames, zero flow") {
    spec.preset = "static";
    spec.frames = 3;
    ClipSample c = dataset_sample(spec, 0);
    for (double v : c.gt_flows.data) CHECK(v == 0.0);
    const int64_t n = 3 * 16 * 16;
    for (int64_t t = 1; t < 3; ++t) {
      for (int64_t k = 0; k < n; ++k) {
        CHECK(c.frames.data[static_cast<size_t>(t * n + k)] ==
              c.frames.data[static_cast<size_t>(k)]);
      }
    }
  }

  SUBCASE("clips: labels cycle through the classes") {
    spec.preset = "clips";
    spec.frames = 3;
    spec.count = 10;
    for (int64_t i = 0; i < 10; ++i) {
      CHECK(dataset_sample(spec, i).label == i % 5);
    }
  }

  SUBCASE("index and spec validation") {
    CHECK_THROWS_AS(dataset_sample(spec, -1), InputError);
    CHECK_THROWS_AS(dataset_sample(spec, spec.count), InputError);
    DatasetSpec bad = spec;
    bad.preset = "imagenet";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = spec;
    bad.max_disp = 100.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = spec;
    bad.count = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
}

TEST_CASE("photometric noise perturbs frames but not ground truth") {
  SampleSpec clean = translate_spec(1.0, 0.0, 16, TextureKind::Gradient);
  SampleSpec noisy = clean;
  noisy.noise_std = 0.05;
  ClipSample a = gen_pair(9, clean);
  ClipSample b = gen_pair(9, noisy);
  CHECK(a.frames.data != b.frames.data);
  CHECK(a.gt_flows.data == b.gt_flows.data);
  for (double v : b.frames.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("as_network_input flattens frames into channels") {
  ClipSample clip = gen_clip(5, translate_spec(0.5, 0.5), 3);
  Tensor in = as_network_input(clip.frames);
  CHECK(in.shape == std::vector<int64_t>{1, 9, 16, 16});
  CHECK(in.data == clip.frames.data);
  Tensor flows = as_network_input(clip.gt_flows);
  CHECK(flows.shape == std::vector<int64_t>{1, 4, 16, 16});
  CHECK_THROWS_AS(as_network_input(Tensor::zeros({3, 4, 4})), InputError);
}

}  // TEST_SUITE
