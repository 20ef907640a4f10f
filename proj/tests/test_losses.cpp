#include <cmath>

#include "doctest.h"
#include "motionnet/errors.hpp"
#include "motionnet/gradcheck.hpp"
#include "motionnet/losses.hpp"
#include "motionnet/rng.hpp"

using namespace motionnet;

namespace {

double rho(double x, const LossConfig& cfg) {
  return std::pow(x * x + cfg.epsilon * cfg.epsilon, cfg.alpha);
}

TensorPtr random_image(Rng& rng, std::vector<int64_t> shape) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data) v = rng.uniform(0.0, 1.0);
  return make_value(std::move(t));
}

TensorPtr random_flow(Rng& rng, std::vector<int64_t> shape, double mag) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data) v = rng.uniform(-mag, mag);
  return make_value(std::move(t));
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("config validation") {
  LossConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  LossConfig bad = cfg;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.alpha = 1.0001;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.lambda1 = bad.lambda2 = bad.lambda3 = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.delta = {0, 0, 0, 0, 0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.c2 = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("pixel loss of a perfect reconstruction is the Charbonnier floor") {
  Graph g;
  LossConfig cfg;
  Rng rng(21);
  auto img = random_image(rng, {1, 3, 8, 8});
  auto zero = make_value(Tensor::zeros({1, 2, 8, 8}));
  auto loss = pixel_loss(g, img, img, zero, cfg);
  CHECK(loss->data[0] ==
        doctest::Approx(std::pow(cfg.epsilon * cfg.epsilon, cfg.alpha)).epsilon(1e-14));
}

TEST_CASE("smoothness of a constant flow is 4 * rho(0)") {
  Graph g;
  LossConfig cfg;
  auto flow = make_value(Tensor::full({2, 2, 6, 6}, 3.25));
  auto loss = smoothness_loss(g, flow, cfg);
  CHECK(loss->data[0] == doctest::Approx(4.0 * rho(0.0, cfg)).epsilon(1e-14));
}

TEST_CASE("smoothness of a known ramp matches the hand computation") {
  Graph g;
  LossConfig cfg;
  // u(i,j) = j, v = 0 on 2x2: du/dx = 1 except the zeroed last column.
  auto flow = make_value(Tensor::from({1, 2, 2, 2}, {0, 1, 0, 1, 0, 0, 0, 0}));
  // rho(fdx)+rho(fdy) is an 8-element tensor (2 channels x 2x2): fdx over u
  // contributes rho(1) twice, every other slot is rho(0).
  const double mean = (2.0 * rho(1.0, cfg) + 14.0 * rho(0.0, cfg)) / 8.0;
  auto loss = smoothness_loss(g, flow, cfg);
  CHECK(loss->data[0] == doctest::Approx(2.0 * mean).epsilon(1e-14));
}

TEST_CASE("smoothness averages over stacked flow pairs") {
  Graph g;
  LossConfig cfg;
  auto one = make_value(Tensor::full({1, 2, 4, 4}, 1.0));
  auto stack = make_value(Tensor::full({1, 6, 4, 4}, 1.0));
  CHECK(smoothness_loss(g, stack, cfg)->data[0] ==
        doctest::Approx(smoothness_loss(g, one, cfg)->data[0]).epsilon(1e-15));
  CHECK_THROWS_AS(smoothness_loss(g, make_value(Tensor::zeros({1, 3, 4, 4})), cfg), ConfigError);
}

TEST_CASE("ssim_patch closed forms") {
  LossConfig cfg;
  Rng rng(22);
  Tensor p = Tensor::zeros({8, 8});
  for (double& v : p.data) v = rng.uniform(0.0, 1.0);

  // Not bitwise: FP contraction may round the numerator and denominator
  // groupings apart by an ulp even on identical inputs.
  CHECK(ssim_patch(p, p, cfg) == doctest::Approx(1.0).epsilon(1e-14));

  // Two constant patches: variance terms vanish, the luminance term remains.
  Tensor a = Tensor::full({8, 8}, 0.3), b = Tensor::full({8, 8}, 0.8);
  const double expected = (2.0 * 0.3 * 0.8 + cfg.c1) / (0.3 * 0.3 + 0.8 * 0.8 + cfg.c1);
  CHECK(ssim_patch(a, b, cfg) == doctest::Approx(expected).epsilon(1e-14));

  // Symmetry and a sanity direction: anti-correlated is worse than identical.
  Tensor neg = p;
  for (double& v : neg.data) v = -v;
  CHECK(ssim_patch(p, neg, cfg) == doctest::Approx(ssim_patch(neg, p, cfg)).epsilon(1e-14));
  CHECK(ssim_patch(p, neg, cfg) < 1.0);
}

TEST_CASE("ssim_loss is exactly zero for identical images") {
  Graph g;
  LossConfig cfg;
  Rng rng(23);
  auto img = random_image(rng, {2, 3, 16, 16});
  CHECK(ssim_loss(g, img, img, cfg)->data[0] == 0.0);
}

TEST_CASE("ssim_loss equals the mean over independent 8x8 patches") {
  Graph g;
  LossConfig cfg;
  Rng rng(24);
  auto i1 = random_image(rng, {1, 1, 16, 16});
  auto i2 = random_image(rng, {1, 1, 16, 16});
  double acc = 0.0;
  for (int64_t bi = 0; bi < 2; ++bi) {
    for (int64_t bj = 0; bj < 2; ++bj) {
      Tensor p1 = Tensor::zeros({8, 8}), p2 = Tensor::zeros({8, 8});
      for (int64_t i = 0; i < 8; ++i) {
        for (int64_t j = 0; j < 8; ++j) {
          p1.data[static_cast<size_t>(i * 8 + j)] = i1->at4(0, 0, 8 * bi + i, 8 * bj + j);
          p2.data[static_cast<size_t>(i * 8 + j)] = i2->at4(0, 0, 8 * bi + i, 8 * bj + j);
        }
      }
      acc += 1.0 - ssim_patch(p1, p2, cfg);
    }
  }
  CHECK(ssim_loss(g, i1, i2, cfg)->data[0] == doctest::Approx(acc / 4.0).epsilon(1e-9));
  CHECK_THROWS_AS(ssim_loss(g, random_image(rng, {1, 1, 4, 4}), random_image(rng, {1, 1, 4, 4}),
                            cfg),
                  ConfigError);
}

TEST_CASE("scale_loss recomposes from its three weighted terms") {
  Graph g;
  LossConfig cfg;
  cfg.lambda1 = 0.7;
  cfg.lambda2 = 1.3;
  cfg.lambda3 = 0.16;
  Rng rng(25);
  auto i1 = random_image(rng, {1, 3, 16, 16});
  auto i2 = random_image(rng, {1, 3, 16, 16});
  auto flow = random_flow(rng, {1, 2, 16, 16}, 1.0);

  auto total = scale_loss(g, i1, i2, flow, cfg);
  auto rec = g.backward_warp(i2, flow);
  const double manual = cfg.lambda1 * pixel_loss(g, i1, i2, flow, cfg)->data[0] +
                        cfg.lambda2 * smoothness_loss(g, flow, cfg)->data[0] +
                        cfg.lambda3 * ssim_loss(g, i1, rec, cfg)->data[0];
  CHECK(total->data[0] == doctest::Approx(manual).epsilon(1e-15));

  // With only the pixel term active the composition is bitwise the pixel loss.
  LossConfig only_pixel = cfg;
  only_pixel.lambda1 = 1.0;
  only_pixel.lambda2 = 0.0;
  only_pixel.lambda3 = 0.0;
  CHECK(scale_loss(g, i1, i2, flow, only_pixel)->data[0] ==
        pixel_loss(g, i1, i2, flow, only_pixel)->data[0]);
}

TEST_CASE("ssim term is skipped below the window size") {
  Graph g;
  LossConfig cfg;  // window 8
  Rng rng(26);
  auto i1 = random_image(rng, {1, 3, 4, 4});
  auto i2 = random_image(rng, {1, 3, 4, 4});
  auto flow = random_flow(rng, {1, 2, 4, 4}, 0.5);
  LossConfig no_ssim = cfg;
  no_ssim.lambda3 = 0.0;
  CHECK(scale_loss(g, i1, i2, flow, cfg)->data[0] ==
        scale_loss(g, i1, i2, flow, no_ssim)->data[0]);
}

TEST_CASE("stacked scale loss averages the frame pairs") {
  Graph g;
  LossConfig cfg;
  Rng rng(27);
  // Three frames laid out as one stack and as two explicit pairs.
  auto f0 = random_image(rng, {1, 3, 16, 16});
  auto f1 = random_image(rng, {1, 3, 16, 16});
  auto f2 = random_image(rng, {1, 3, 16, 16});
  auto v0 = random_flow(rng, {1, 2, 16, 16}, 1.0);
  auto v1 = random_flow(rng, {1, 2, 16, 16}, 1.0);
  auto frames = g.concat_channels({f0, f1, f2});
  auto flows = g.concat_channels({v0, v1});
  const double stacked = scale_loss_stack(g, frames, flows, cfg)->data[0];
  const double pair_mean = 0.5 * (scale_loss(g, f0, f1, v0, cfg)->data[0] +
                                  scale_loss(g, f1, f2, v1, cfg)->data[0]);
  CHECK(stacked == doctest::Approx(pair_mean).epsilon(1e-15));

  CHECK_THROWS_AS(scale_loss_stack(g, frames, v0, cfg), ConfigError);
  CHECK_THROWS_AS(scale_loss_stack(g, f0, v0, cfg), ConfigError);
}

TEST_CASE("frame pyramid halves resolution from quarter scale down") {
  Graph g;
  auto frames = make_value(Tensor::full({1, 6, 64, 64}, 0.5));
  auto pyr = build_frame_pyramid(g, frames, 5);
  REQUIRE(pyr.size() == 5);
  CHECK(pyr[0]->shape == std::vector<int64_t>{1, 6, 16, 16});
  CHECK(pyr[1]->shape == std::vector<int64_t>{1, 6, 8, 8});
  CHECK(pyr[2]->shape == std::vector<int64_t>{1, 6, 4, 4});
  CHECK(pyr[3]->shape == std::vector<int64_t>{1, 6, 2, 2});
  CHECK(pyr[4]->shape == std::vector<int64_t>{1, 6, 1, 1});
  // Averaging a constant keeps it bit-exactly.
  for (const auto& level : pyr) {
    for (double v : level->data) CHECK(v == 0.5);
  }
}

TEST_CASE("total_loss weights scales by delta and validates the pyramids") {
  Graph g;
  LossConfig cfg;
  Rng rng(28);
  auto frames = random_image(rng, {1, 6, 64, 64});
  auto frame_pyr = build_frame_pyramid(g, frames, 3);
  std::vector<TensorPtr> flow_pyr;
  for (const auto& f : frame_pyr) {
    flow_pyr.push_back(random_flow(rng, {1, 2, f->dim(2), f->dim(3)}, 1.0));
  }
  const double total = total_loss(g, flow_pyr, frame_pyr, cfg)->data[0];
  double manual = 0.0;
  for (size_t s = 0; s < flow_pyr.size(); ++s) {
    manual += cfg.delta[s] * scale_loss_stack(g, frame_pyr[s], flow_pyr[s], cfg)->data[0];
  }
  CHECK(total == doctest::Approx(manual).epsilon(1e-14));

  // Doubling every delta doubles the loss.
  LossConfig doubled = cfg;
  for (double& d : doubled.delta) d *= 2.0;
  CHECK(total_loss(g, flow_pyr, frame_pyr, doubled)->data[0] ==
        doctest::Approx(2.0 * total).epsilon(1e-14));

  auto short_pyr = frame_pyr;
  short_pyr.pop_back();
  CHECK_THROWS_AS(total_loss(g, flow_pyr, short_pyr, cfg), ConfigError);
  CHECK_THROWS_AS(total_loss(g, {}, {}, cfg), ConfigError);
}

TEST_CASE("breakdown parts sum to the total and the total is unchanged") {
  Graph g;
  LossConfig cfg;
  Rng rng(29);
  auto frames = random_image(rng, {2, 6, 32, 32});
  auto frame_pyr = build_frame_pyramid(g, frames, 3);
  std::vector<TensorPtr> flow_pyr;
  for (const auto& f : frame_pyr) {
    flow_pyr.push_back(random_flow(rng, {2, 2, f->dim(2), f->dim(3)}, 1.0));
  }
  auto bd = total_loss_breakdown(g, flow_pyr, frame_pyr, cfg);
  CHECK(bd.total->data[0] == total_loss(g, flow_pyr, frame_pyr, cfg)->data[0]);
  CHECK(bd.pixel + bd.smooth + bd.ssim == doctest::Approx(bd.total->data[0]).epsilon(1e-12));
  CHECK(bd.pixel > 0.0);
  CHECK(bd.smooth > 0.0);
  CHECK(bd.ssim > 0.0);
}

TEST_CASE("loss gradients agree with finite differences") {
  LossConfig cfg;
  Rng rng(30);
  Tensor i1t = Tensor::zeros({1, 2, 8, 8});
  Tensor i2t = Tensor::zeros({1, 2, 8, 8});
  for (double& v : i1t.data) v = rng.uniform(0.0, 1.0);
  for (double& v : i2t.data) v = rng.uniform(0.0, 1.0);
  Tensor ft = Tensor::zeros({1, 2, 8, 8});
  for (double& v : ft.data) v = rng.uniform(0.3, 0.7);  // stay off bilinear kinks
  auto i1 = make_param(std::move(i1t));
  auto i2 = make_param(std::move(i2t));
  auto flow = make_param(std::move(ft));

  auto report = check_gradients(
      [&cfg](Graph& g, const std::vector<TensorPtr>& in) {
        return scale_loss(g, in[0], in[1], in[2], cfg);
      },
      {i1, i2, flow}, 1e-4);
  INFO(report.worst, " ", report.diagnostics);
  CHECK(report.ok());
}

}  // TEST_SUITE
