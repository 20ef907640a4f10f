#pragma once

#include <cstdint>
#include <string>

#include "motionnet/losses.hpp"
#include "motionnet/model.hpp"
#include "motionnet/stacked.hpp"
#include "motionnet/synth.hpp"
#include "motionnet/trainer.hpp"

namespace motionnet {

/// Stacked-classifier options ([stacked] section).
struct StackedConfig {
  FineTuneMode mode = FineTuneMode::FixedMotionNet;
  NormalizationSpec norm;
  int64_t head_width = 32;
  int64_t classes = 5;
  uint64_t seed = 4321;  // head initialization

  void validate() const;
};

/// Everything one run needs, assembled from an INI-style config file:
///   [train]     steps, batch_size, lr, seed, checkpoint_every, log_every,
///               out_dir, task (flow|stacked), action_weight, unsup_weight,
///               mode (fixed|action_only|joint)
///   [motionnet] input_frames, base_channels, levels, small_disp, cdc,
///               multiscale, activation_slope, seed
///   [loss]      lambda1..3, delta1..5, epsilon, alpha, ssim_window,
///               ssim_stride, c1, c2
///   [stacked]   clip, out_lo, out_hi, head_width, classes, seed
///   [data]      preset, count, extent, frames, seed, max_disp, noise_std
/// Comments (# or ;) and blank lines are skipped; later duplicates win;
/// unknown sections or keys fail with ConfigError naming "[section] key".
struct RunConfig {
  std::string task = "flow";
  TrainConfig train;
  MotionNetConfig model;
  uint64_t model_seed = 1234;
  LossConfig loss;
  StackedConfig stacked;
  DatasetSpec data;

  void validate() const;
};

RunConfig parse_run_config_text(const std::string& text, const std::string& origin);
RunConfig parse_run_config_file(const std::string& path);

/// Every key with its resolved value (defaults filled in), %.17g for reals;
/// parsing the dump reproduces the config exactly.
std::string dump_run_config(const RunConfig& cfg);

}  // namespace motionnet
