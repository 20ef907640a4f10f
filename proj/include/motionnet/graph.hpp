#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "motionnet/tensor.hpp"

namespace motionnet {

/// Dynamic tape: operations append nodes as they execute, backward() replays
/// them in reverse order. Gradients accumulate additively, so a tensor feeding
/// two consumers receives the sum of both contributions.
///
/// A Graph instance is confined to one thread; distinct graphs may run
/// concurrently. Ops whose inputs all have requires_grad == false are executed
/// forward-only and leave no node on the tape.
class Graph {
 public:
  /// Appends a custom node. `backward` must read output->grad and accumulate
  /// into the grads of whichever inputs require them. Public so callers can
  /// define ops outside this class (the quantization layer does, and tests
  /// use it to install deliberately broken backward rules).
  TensorPtr record(std::string name, std::vector<TensorPtr> inputs, TensorPtr output,
                   std::function<void()> backward);

  /// Seeds d(root)/d(root) = 1 and replays the tape in reverse. `root` must be
  /// a scalar produced by this graph (or a leaf requiring grad).
  void backward(const TensorPtr& root);

  void clear();
  std::size_t size() const { return nodes_.size(); }

  // -- elementwise -----------------------------------------------------------
  TensorPtr add(const TensorPtr& a, const TensorPtr& b);
  TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
  TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
  TensorPtr div(const TensorPtr& a, const TensorPtr& b);
  TensorPtr scale(const TensorPtr& x, double s);
  TensorPtr add_scalar(const TensorPtr& x, double s);
  TensorPtr leaky_relu(const TensorPtr& x, double slope);
  /// Elementwise robust penalty (x^2 + eps^2)^alpha.
  TensorPtr charbonnier(const TensorPtr& x, double eps, double alpha);

  // -- convolution -----------------------------------------------------------
  /// x [N,C,H,W], w [K,C,kh,kw], b [K]. Zero padding, output
  /// [N,K,(H+2p-kh)/s+1,(W+2p-kw)/s+1].
  TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                   int64_t stride, int64_t pad);
  /// Adjoint of conv2d with the same stride/pad. w [C,K,kh,kw] maps C input
  /// channels to K output channels; output extent (H-1)*s - 2p + kh.
  TensorPtr conv2d_transposed(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                              int64_t stride, int64_t pad);

  // -- sampling --------------------------------------------------------------
  /// out(i,j) = bilinear(image, i + flow_y(i,j), j + flow_x(i,j)), border
  /// clamped. flow is [N,2,H,W]: channel 0 horizontal (x), channel 1 vertical.
  TensorPtr backward_warp(const TensorPtr& image, const TensorPtr& flow);
  /// Mean over 2x2 blocks; requires even spatial extents.
  TensorPtr avg_downsample2x(const TensorPtr& x);
  /// Mean over k x k windows at the given stride, no padding.
  TensorPtr avg_pool(const TensorPtr& x, int64_t k, int64_t stride);
  /// [N,C,H,W] -> [N,C]: spatial mean per channel.
  TensorPtr global_avg_pool(const TensorPtr& x);
  /// Bilinear 2x spatial upsampling.
  TensorPtr upsample2x(const TensorPtr& x);
  /// upsample2x with values doubled: pixel displacements rescale with
  /// resolution.
  TensorPtr upsample_flow2x(const TensorPtr& x);

  // -- spatial differences ---------------------------------------------------
  /// Forward difference along width: out(i,j) = x(i,j+1) - x(i,j); last
  /// column 0.
  TensorPtr forward_diff_x(const TensorPtr& x);
  /// Forward difference along height; last row 0.
  TensorPtr forward_diff_y(const TensorPtr& x);

  // -- shape -----------------------------------------------------------------
  TensorPtr concat_channels(const std::vector<TensorPtr>& xs);
  /// Channels [c0, c1) of a 4-d tensor.
  TensorPtr slice_channels(const TensorPtr& x, int64_t c0, int64_t c1);

  // -- reductions & classifier -----------------------------------------------
  TensorPtr sum_all(const TensorPtr& x);
  TensorPtr mean_all(const TensorPtr& x);
  /// x [N,D], w [A,D], b [A] -> x w^T + b, shape [N,A].
  TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b);
  /// Mean negative log-softmax of the true class; max-stabilized.
  TensorPtr cross_entropy(const TensorPtr& logits, const std::vector<int64_t>& labels);

 private:
  struct Node {
    std::string name;
    std::vector<TensorPtr> inputs;
    TensorPtr output;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;
};

}  // namespace motionnet
