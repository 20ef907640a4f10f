#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "motionnet/graph.hpp"
#include "motionnet/tensor.hpp"

namespace motionnet {

/// Encoder-decoder flow network configuration. `levels` counts encoder
/// downsamplings; the decoder emits levels-1 flow fields at resolutions
/// 1/4 .. 1/2^levels of the input (finest first), 2*(input_frames-1)
/// channels each.
struct MotionNetConfig {
  int64_t input_frames = 11;
  int64_t base_channels = 16;
  int64_t levels = 6;
  bool use_small_disp = true;
  bool use_cdc = true;
  bool use_multiscale = true;
  double activation_slope = 0.1;

  int64_t in_channels() const { return 3 * input_frames; }
  int64_t flow_channels() const { return 2 * (input_frames - 1); }
  int64_t n_scales() const { return use_multiscale ? levels - 1 : 1; }
  int64_t divisor() const { return int64_t{1} << levels; }

  void validate() const;
};

/// The flow network. Weights are created and initialized deterministically
/// from (config, seed): Kaiming-style fan-in scaling for conv weights, zeros
/// for biases, zeros for the flow prediction heads (so training starts from
/// the well-conditioned identity warp).
///
/// Architectural toggles:
///   - use_small_disp: two stride-1 3x3 layers in front and a 3x3 stride-2
///     first downsampling, instead of a single 7x7 stride-2 layer.
///   - use_cdc: an extra 3x3 conv after every deconv stage.
///   - use_multiscale: flow heads at every decoder scale (and coarse-to-fine
///     flow feedback); otherwise only the finest head exists.
class MotionNet {
 public:
  MotionNet(MotionNetConfig cfg, uint64_t seed);

  /// Flow pyramid, finest scale (1/4 resolution) first. Throws ConfigError on
  /// indivisible extents, NumericError (naming the layer) on non-finite
  /// activations.
  std::vector<TensorPtr> forward(Graph& g, const TensorPtr& frames) const;

  /// Finest flow upsampled x4 to input resolution with values scaled x4.
  TensorPtr infer_flow(Graph& g, const TensorPtr& frames) const;

  const MotionNetConfig& config() const { return cfg_; }

  /// Parameters in registration order; names are stable for a given config
  /// (conv1.w, deconv3.b, flow2.w, ...). The checkpoint and optimizer key on
  /// these names.
  const std::vector<std::pair<std::string, TensorPtr>>& parameters() const { return params_; }
  int64_t parameter_count() const;

  /// Flips requires_grad on every parameter (freezing for fine-tune mode (a)).
  void set_trainable(bool on);
  bool trainable() const { return trainable_; }

 private:
  struct ConvLayer {
    std::string name;
    TensorPtr w, b;
    int64_t stride = 1, pad = 1;
  };

  ConvLayer make_conv(const std::string& name, int64_t c_in, int64_t c_out, int64_t k,
                      int64_t stride, int64_t pad, class Rng& rng, bool zero_init);
  ConvLayer make_deconv(const std::string& name, int64_t c_in, int64_t c_out, class Rng& rng);

  /// Channels of encoder level l in [1, levels].
  int64_t enc_channels(int64_t l) const;
  /// Deconv output channels at level l in [2, levels-1].
  int64_t dec_channels(int64_t l) const;

  MotionNetConfig cfg_;
  bool trainable_ = true;

  // Encoder: optional stem (small-disp) then one strided conv per level.
  std::vector<ConvLayer> stem_;
  std::vector<ConvLayer> enc_;
  // Decoder, coarse to fine: deconv into level l, optional cdc conv, flow head.
  std::vector<ConvLayer> deconv_;
  std::vector<ConvLayer> cdc_;
  std::vector<ConvLayer> heads_;  // heads_[0] = coarsest; omitted coarse heads when not multiscale
  std::vector<std::pair<std::string, TensorPtr>> params_;
};

}  // namespace motionnet
