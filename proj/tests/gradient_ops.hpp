#pragma once

// Registry of differentiable-op test cases shared by the unit gradient suite
// and the acceptance harness: every op the network trains through, built at
// small shapes with inputs kept away from non-differentiable points (bilinear
// kinks, clamp edges, |x| corners) since finite differences are only valid
// where the function is smooth.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "motionnet/gradcheck.hpp"
#include "motionnet/graph.hpp"
#include "motionnet/losses.hpp"
#include "motionnet/rng.hpp"
#include "motionnet/stacked.hpp"
#include "motionnet/tensor.hpp"

namespace gradops {

struct Case {
  std::string name;
  motionnet::OpFn op;
  std::vector<motionnet::TensorPtr> inputs;
};

inline motionnet::TensorPtr param(motionnet::Rng& rng, std::vector<int64_t> shape, double lo,
                                  double hi) {
  motionnet::Tensor t = motionnet::Tensor::zeros(std::move(shape));
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return motionnet::make_param(std::move(t));
}

/// Flow values with fractional parts in [0.3, 0.7]: finite-difference steps
/// never cross an integer sampling coordinate.
inline motionnet::TensorPtr safe_flow(motionnet::Rng& rng, std::vector<int64_t> shape) {
  motionnet::Tensor t = motionnet::Tensor::zeros(std::move(shape));
  for (double& v : t.data) {
    v = static_cast<double>(rng.uniform_int(5)) - 2.0 + rng.uniform(0.3, 0.7);
  }
  return motionnet::make_param(std::move(t));
}

inline std::vector<Case> build_cases(uint64_t seed) {
  using motionnet::Graph;
  using motionnet::LossConfig;
  using motionnet::NormalizationSpec;
  using motionnet::Rng;
  using motionnet::TensorPtr;
  Rng rng(seed);
  std::vector<Case> cases;
  auto add = [&](std::string name, motionnet::OpFn op, std::vector<TensorPtr> inputs) {
    cases.push_back({std::move(name), std::move(op), std::move(inputs)});
  };

  add("add", [](Graph& g, const auto& in) { return g.add(in[0], in[1]); },
      {param(rng, {2, 3}, -1, 1), param(rng, {2, 3}, -1, 1)});
  add("sub", [](Graph& g, const auto& in) { return g.sub(in[0], in[1]); },
      {param(rng, {2, 3}, -1, 1), param(rng, {2, 3}, -1, 1)});
  add("mul", [](Graph& g, const auto& in) { return g.mul(in[0], in[1]); },
      {param(rng, {2, 3}, -1, 1), param(rng, {2, 3}, -1, 1)});
  add("div", [](Graph& g, const auto& in) { return g.div(in[0], in[1]); },
      {param(rng, {2, 3}, -1, 1), param(rng, {2, 3}, 0.5, 2.0)});
  add("scale", [](Graph& g, const auto& in) { return g.scale(in[0], -1.7); },
      {param(rng, {3, 3}, -1, 1)});
  add("add_scalar", [](Graph& g, const auto& in) { return g.add_scalar(in[0], 0.3); },
      {param(rng, {3, 3}, -1, 1)});
  // Leaky ReLU is kinked at 0; keep inputs away from it.
  add("leaky_relu_pos", [](Graph& g, const auto& in) { return g.leaky_relu(in[0], 0.1); },
      {param(rng, {2, 4}, 0.2, 1.0)});
  add("leaky_relu_neg", [](Graph& g, const auto& in) { return g.leaky_relu(in[0], 0.1); },
      {param(rng, {2, 4}, -1.0, -0.2)});
  add("charbonnier", [](Graph& g, const auto& in) { return g.charbonnier(in[0], 0.001, 0.45); },
      {param(rng, {2, 4}, 0.1, 1.0)});
  add("conv2d",
      [](Graph& g, const auto& in) { return g.conv2d(in[0], in[1], in[2], 1, 1); },
      {param(rng, {1, 2, 5, 5}, -1, 1), param(rng, {3, 2, 3, 3}, -1, 1), param(rng, {3}, -1, 1)});
  add("conv2d_stride2",
      [](Graph& g, const auto& in) { return g.conv2d(in[0], in[1], in[2], 2, 1); },
      {param(rng, {1, 2, 6, 6}, -1, 1), param(rng, {2, 2, 3, 3}, -1, 1), param(rng, {2}, -1, 1)});
  add("conv2d_transposed",
      [](Graph& g, const auto& in) { return g.conv2d_transposed(in[0], in[1], in[2], 2, 1); },
      {param(rng, {1, 3, 3, 3}, -1, 1), param(rng, {3, 2, 4, 4}, -1, 1), param(rng, {2}, -1, 1)});
  add("backward_warp",
      [](Graph& g, const auto& in) { return g.backward_warp(in[0], in[1]); },
      {param(rng, {1, 2, 6, 6}, 0, 1), safe_flow(rng, {1, 2, 6, 6})});
  add("avg_downsample2x", [](Graph& g, const auto& in) { return g.avg_downsample2x(in[0]); },
      {param(rng, {1, 2, 6, 6}, -1, 1)});
  add("avg_pool",
      [](Graph& g, const auto& in) { return g.avg_pool(in[0], 3, 2); },
      {param(rng, {1, 2, 7, 7}, -1, 1)});
  add("global_avg_pool", [](Graph& g, const auto& in) { return g.global_avg_pool(in[0]); },
      {param(rng, {2, 3, 4, 4}, -1, 1)});
  add("upsample2x", [](Graph& g, const auto& in) { return g.upsample2x(in[0]); },
      {param(rng, {1, 2, 4, 4}, -1, 1)});
  add("upsample_flow2x", [](Graph& g, const auto& in) { return g.upsample_flow2x(in[0]); },
      {param(rng, {1, 2, 4, 4}, -1, 1)});
  add("forward_diff_x", [](Graph& g, const auto& in) { return g.forward_diff_x(in[0]); },
      {param(rng, {1, 2, 4, 5}, -1, 1)});
  add("forward_diff_y", [](Graph& g, const auto& in) { return g.forward_diff_y(in[0]); },
      {param(rng, {1, 2, 5, 4}, -1, 1)});
  add("concat_channels",
      [](Graph& g, const auto& in) { return g.concat_channels({in[0], in[1]}); },
      {param(rng, {1, 2, 3, 3}, -1, 1), param(rng, {1, 3, 3, 3}, -1, 1)});
  add("slice_channels",
      [](Graph& g, const auto& in) { return g.slice_channels(in[0], 1, 3); },
      {param(rng, {1, 4, 3, 3}, -1, 1)});
  add("sum_all", [](Graph& g, const auto& in) { return g.sum_all(in[0]); },
      {param(rng, {2, 5}, -1, 1)});
  add("mean_all", [](Graph& g, const auto& in) { return g.mean_all(in[0]); },
      {param(rng, {2, 5}, -1, 1)});
  add("linear",
      [](Graph& g, const auto& in) { return g.linear(in[0], in[1], in[2]); },
      {param(rng, {2, 4}, -1, 1), param(rng, {3, 4}, -1, 1), param(rng, {3}, -1, 1)});
  add("cross_entropy",
      [](Graph& g, const auto& in) { return g.cross_entropy(in[0], {1, 0}); },
      {param(rng, {2, 3}, -1, 1)});
  {
    NormalizationSpec spec;
    spec.clip = 2.0;  // inputs in [-1.2, 1.2] exercise only the linear region
    add("quantize_flow_surrogate",
        [spec](Graph& g, const auto& in) {
          return motionnet::quantize_flow(g, in[0], spec, /*quantize=*/false);
        },
        {param(rng, {1, 2, 4, 4}, -1.2, 1.2)});
  }
  {
    LossConfig cfg;
    add("pixel_loss",
        [cfg](Graph& g, const auto& in) { return motionnet::pixel_loss(g, in[0], in[1], in[2], cfg); },
        {param(rng, {1, 2, 6, 6}, 0, 1), param(rng, {1, 2, 6, 6}, 0, 1),
         safe_flow(rng, {1, 2, 6, 6})});
    add("smoothness_loss",
        [cfg](Graph& g, const auto& in) { return motionnet::smoothness_loss(g, in[0], cfg); },
        {param(rng, {1, 2, 5, 5}, -1, 1)});
    add("ssim_loss",
        [cfg](Graph& g, const auto& in) { return motionnet::ssim_loss(g, in[0], in[1], cfg); },
        {param(rng, {1, 1, 8, 8}, 0.05, 0.95), param(rng, {1, 1, 8, 8}, 0.05, 0.95)});
    add("scale_loss",
        [cfg](Graph& g, const auto& in) {
          return motionnet::scale_loss(g, in[0], in[1], in[2], cfg);
        },
        {param(rng, {1, 3, 8, 8}, 0, 1), param(rng, {1, 3, 8, 8}, 0, 1),
         safe_flow(rng, {1, 2, 8, 8})});
  }
  return cases;
}

}  // namespace gradops
