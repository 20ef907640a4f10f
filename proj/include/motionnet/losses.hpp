#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "motionnet/graph.hpp"
#include "motionnet/tensor.hpp"

namespace motionnet {

/// Weights and constants of the unsupervised objective. Defaults:
///   - Charbonnier eps 1e-3, alpha 0.45 (standard sub-quadratic robust choice)
///   - lambda (pixel, smoothness, ssim) = (1.0, 1.0, 0.16)
///   - delta = per-scale weights, finest scale first
///   - SSIM: 8x8 windows at stride 8, population moments, c1 1e-4, c2 1e-3
struct LossConfig {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 0.16;
  std::array<double, 5> delta{0.32, 0.08, 0.02, 0.01, 0.005};
  double epsilon = 0.001;
  double alpha = 0.45;
  int64_t ssim_window = 8;
  int64_t ssim_stride = 8;
  double c1 = 0.0001;
  double c2 = 0.001;

  /// Training-time validation; throws ConfigError. Direct loss calls accept
  /// degenerate weights (e.g. all-zero lambda) that training rejects.
  void validate() const;
};

/// Mean over batch, channels and pixels of the Charbonnier penalty of
/// I1 - backward_warp(I2, flow). flow is a single 2-channel field.
TensorPtr pixel_loss(Graph& g, const TensorPtr& i1, const TensorPtr& i2, const TensorPtr& flow,
                     const LossConfig& cfg);

/// Mean over pixels (and flow pairs) of the Charbonnier penalty of the
/// forward-difference flow gradients; last row/column differences are zero.
/// Accepts [N,2k,H,W] stacks: the per-pair 4-term sum is averaged over pairs.
TensorPtr smoothness_loss(Graph& g, const TensorPtr& flow, const LossConfig& cfg);

/// Scalar SSIM of two equally shaped patches with population moments;
/// non-differentiable reference used by tests and documentation.
double ssim_patch(const Tensor& p1, const Tensor& p2, const LossConfig& cfg);

/// Mean over all K x K windows (stride ssim_stride, channels and batch
/// averaged) of 1 - SSIM(I1, I1_rec). Errors if the image is smaller than the
/// window.
TensorPtr ssim_loss(Graph& g, const TensorPtr& i1, const TensorPtr& i1_rec, const LossConfig& cfg);

/// lambda1 * pixel + lambda2 * smoothness + lambda3 * ssim at one scale for
/// one frame pair. Terms with zero weight are skipped; the SSIM term is also
/// skipped when the scale is smaller than the SSIM window (the coarse tail of
/// the pyramid).
TensorPtr scale_loss(Graph& g, const TensorPtr& i1_s, const TensorPtr& i2_s,
                     const TensorPtr& flow_s, const LossConfig& cfg);

/// scale_loss averaged over the F-1 consecutive frame pairs of a stacked
/// input: frames_s [N,3F,H,W], flows_s [N,2(F-1),H,W].
TensorPtr scale_loss_stack(Graph& g, const TensorPtr& frames_s, const TensorPtr& flows_s,
                           const LossConfig& cfg);

/// Downsampled frame stacks matching the flow pyramid: entry i is at
/// 1/2^(i+2) of the input resolution (the finest flow scale is 1/4).
std::vector<TensorPtr> build_frame_pyramid(Graph& g, const TensorPtr& frames, int64_t n_scales);

/// sum_s delta[s] * scale_loss_stack(frames[s], flows[s]), finest scale first.
/// Pyramid sizes must match and fit the five delta weights.
TensorPtr total_loss(Graph& g, const std::vector<TensorPtr>& flow_pyramid,
                     const std::vector<TensorPtr>& frame_pyramid, const LossConfig& cfg);

/// total_loss plus the lambda/delta-weighted per-term values for logging.
/// The parts are plain numbers read off the same term tensors; `total` is a
/// node of `g` and is built exactly like total_loss builds it.
struct UnsupLossBreakdown {
  TensorPtr total;
  double pixel = 0.0;
  double smooth = 0.0;
  double ssim = 0.0;
};

UnsupLossBreakdown total_loss_breakdown(Graph& g, const std::vector<TensorPtr>& flow_pyramid,
                                        const std::vector<TensorPtr>& frame_pyramid,
                                        const LossConfig& cfg);

}  // namespace motionnet
