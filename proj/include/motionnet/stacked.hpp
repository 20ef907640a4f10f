#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "motionnet/graph.hpp"
#include "motionnet/tensor.hpp"

namespace motionnet {

/// Affine flow normalization: displacements are clipped to [-clip, clip] and
/// mapped to [out_lo, out_hi] with round-half-away-from-zero quantization.
/// The map is fixed (not per-sample min-max) so identical flows always
/// normalize identically.
struct NormalizationSpec {
  double clip = 20.0;
  double out_lo = 0.0;
  double out_hi = 255.0;

  void validate() const;
};

/// round((out_hi-out_lo) * (clamp(v,-clip,clip)+clip) / (2 clip) + out_lo).
/// Plain tensor version for data preparation and tests.
Tensor normalize_flow(const Tensor& flow, const NormalizationSpec& spec);

/// Graph form of normalize_flow with a straight-through backward rule: the
/// incoming gradient passes through unchanged where |v| <= clip and is zero
/// outside (the gradient of the clamp; rounding is treated as identity).
/// With quantize=false the forward is just clamp(v,-clip,clip), whose true
/// gradient equals the straight-through rule almost everywhere -- that mode
/// is what the finite-difference checks exercise.
TensorPtr quantize_flow(Graph& g, const TensorPtr& flow, const NormalizationSpec& spec,
                        bool quantize = true);

/// Concatenates F-1 two-channel fields into [N,2(F-1),H,W], preserving order:
/// [Vx1, Vy1, Vx2, Vy2, ...].
Tensor stack_flows(const std::vector<Tensor>& flows);

/// How the classifier fine-tunes the flow network underneath it:
///   FixedMotionNet  -- flow weights frozen, only the head trains
///   ActionLossOnly  -- cross-entropy backpropagates through normalization
///                      into the flow network
///   JointLoss       -- cross-entropy plus the unsupervised flow objective
enum class FineTuneMode { FixedMotionNet, ActionLossOnly, JointLoss };

FineTuneMode parse_fine_tune_mode(const std::string& s);
std::string to_string(FineTuneMode mode);

/// Desk-scale action head: two stride-2 conv blocks, global average pooling,
/// one linear layer. input_scale is applied first (1/255 maps normalized
/// flows back into unit range).
struct ClassifierConfig {
  int64_t in_channels = 2;
  int64_t classes = 5;
  int64_t width = 32;
  double activation_slope = 0.1;
  double input_scale = 1.0 / 255.0;

  void validate() const;
};

class ClassifierHead {
 public:
  ClassifierHead(ClassifierConfig cfg, uint64_t seed);

  /// x [N,C,H,W] -> logits [N,classes].
  TensorPtr forward(Graph& g, const TensorPtr& x) const;

  const ClassifierConfig& config() const { return cfg_; }
  const std::vector<std::pair<std::string, TensorPtr>>& parameters() const { return params_; }
  int64_t parameter_count() const;
  void set_trainable(bool on);

 private:
  ClassifierConfig cfg_;
  TensorPtr conv1_w_, conv1_b_, conv2_w_, conv2_b_, fc_w_, fc_b_;
  std::vector<std::pair<std::string, TensorPtr>> params_;
};

/// (wa*a + wb*b) / (wa+wb) on raw pre-softmax scores.
Tensor fuse_scores(const Tensor& score_a, const Tensor& score_b, double weight_a, double weight_b);

}  // namespace motionnet
