#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "motionnet/tensor.hpp"

namespace motionnet {

/// Textures are analytic functions of continuous image coordinates, so frames
/// under motion are rendered by evaluating them at inverse-motion coordinates
/// and the ground-truth flow is exact by construction.
enum class TextureKind { Checker, Noise, Gradient, Flat };

enum class MotionKind { Translate, Rotate, Zoom };

struct MotionSpec {
  MotionKind kind = MotionKind::Translate;
  double dx = 0.0;     // per-step pixels (Translate)
  double dy = 0.0;
  double theta = 0.0;  // per-step radians about the image center (Rotate)
  double scale = 1.0;  // per-step factor about the image center (Zoom)
};

struct SampleSpec {
  int64_t extent = 64;  // square frames
  TextureKind texture = TextureKind::Checker;
  MotionSpec motion;
  /// When set, a textured disc moves per `motion` over a background moving
  /// per this translation (Translate only); when unset the whole frame moves.
  /// Rotate/Zoom are always whole-frame motions about the image center.
  bool foreground_object = false;
  TextureKind bg_texture = TextureKind::Flat;
  std::optional<MotionSpec> background_motion;
  double fg_radius_frac = 0.3;
  /// Optional photometric Gaussian noise (breaks exact consistency; off by
  /// default).
  double noise_std = 0.0;
};

/// Frames in [0,1], exact ground-truth flow, per-frame foreground mask.
/// Regeneration from (seed, spec) is bit-identical.
struct ClipSample {
  Tensor frames;    // [F,3,H,W]
  Tensor gt_flows;  // [F-1,2,H,W]; channel 0 horizontal, 1 vertical
  Tensor fg_mask;   // [F,1,H,W], 1 on the foreground object (all ones without one)
  int64_t label = -1;
  uint64_t seed = 0;
};

inline constexpr const char* kClassNames[5] = {"left", "right", "up", "down", "rotate"};
inline constexpr int64_t kNumClasses = 5;

/// Two frames under spec.motion. Translations are bounded by extent/4.
ClipSample gen_pair(uint64_t seed, const SampleSpec& spec);

/// F frames under a constant per-step motion. Cumulative translation must
/// stay within extent/4.
ClipSample gen_clip(uint64_t seed, const SampleSpec& spec, int64_t frames);

/// Classifier clip: the class (left/right/up/down/rotate) is drawn uniformly
/// from the seed, motion magnitude randomized, label filled in.
ClipSample gen_class_clip(uint64_t seed, int64_t extent, int64_t frames);

/// Same with a forced label; used by tests.
ClipSample gen_class_clip(uint64_t seed, int64_t extent, int64_t frames, int64_t label);

/// Deterministic sample streams for training/evaluation.
///   translate -- whole-frame textured translations, |d| <= max_disp per axis
///   mixed     -- alternating textured translations and textured-disc-over-
///                flat-background samples (the homogeneous / aperture case)
///   static    -- zero motion, identical frames
///   clips     -- labeled 5-class motion clips
struct DatasetSpec {
  std::string preset = "translate";
  int64_t count = 64;
  int64_t extent = 64;
  int64_t frames = 2;
  uint64_t seed = 7;
  double max_disp = 5.0;
  double noise_std = 0.0;

  void validate() const;
};

/// Sample i of the stream; depends only on (spec, index).
ClipSample dataset_sample(const DatasetSpec& spec, int64_t index);

/// [F,3,H,W] frames (or [F-1,2,H,W] flows) viewed as one network input
/// [1, F*3, H, W]: the row-major layouts coincide, only the shape changes.
Tensor as_network_input(const Tensor& stacked);

/// Writes frame_XX.png and flow_XX.flo (plus mask_XX.png) under dir.
void export_clip(const ClipSample& sample, const std::string& dir);

}  // namespace motionnet
