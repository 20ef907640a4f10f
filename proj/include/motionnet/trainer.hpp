#pragma once

#include <cstdint>
#include <ostream>
#include <string>

#include "motionnet/checkpoint.hpp"
#include "motionnet/losses.hpp"
#include "motionnet/model.hpp"
#include "motionnet/stacked.hpp"
#include "motionnet/synth.hpp"

namespace motionnet {

struct TrainConfig {
  int64_t steps = 100;
  int64_t batch_size = 4;
  double lr = 1e-4;
  uint64_t seed = 1;
  int64_t checkpoint_every = 0;  // 0 = final checkpoint only
  int64_t log_every = 1;         // 0 = silent
  std::string out_dir = "run";
  // Stacked task only:
  FineTuneMode mode = FineTuneMode::FixedMotionNet;
  double action_weight = 1.0;
  double unsup_weight = 0.0;

  void validate() const;
};

struct TrainResult {
  int64_t steps_done = 0;
  double final_total = 0.0;
  double final_accuracy = -1.0;  // stacked: accuracy of the last batch
  std::string final_checkpoint;
};

/// Checkpoint assembly. Model parameters are stored under their registration
/// names next to meta tensors describing the architecture, so a checkpoint
/// alone reconstructs the network:
///   meta.motionnet = [frames, base, levels, small_disp, cdc, multiscale, slope]
///   meta.head      = [in_channels, classes, width, slope, input_scale]
///   meta.norm      = [clip, out_lo, out_hi]
NamedTensors model_state(const MotionNet& model);
void append_head_state(NamedTensors& out, const ClassifierHead& head,
                       const NormalizationSpec& norm);

/// Strict loads: every expected parameter must be present with its exact
/// shape (ParseError otherwise). Extra entries are ignored.
void load_model_state(MotionNet& model, const NamedTensors& ckpt);
void load_head_state(ClassifierHead& head, const NamedTensors& ckpt);

MotionNetConfig motionnet_config_from(const NamedTensors& ckpt);
bool has_head_state(const NamedTensors& ckpt);
ClassifierConfig head_config_from(const NamedTensors& ckpt);
NormalizationSpec norm_from(const NamedTensors& ckpt);

/// Unsupervised flow training. Batches are drawn from the dataset stream with
/// a per-step derived seed, so step k samples identically whether the run is
/// fresh or resumed. Log lines (every log_every steps):
///   step=N total=... pixel=... smooth=... ssim=... time_ms=...
/// with %.17g values; everything but time_ms is bit-reproducible.
/// Checkpoints go to out_dir (ckpt_NNNNNN.ckpt at the cadence, final.ckpt at
/// the end, optimizer state included). Throws NumericError naming the step if
/// the loss leaves the finite range.
TrainResult train_flow(MotionNet& model, const LossConfig& loss, const DatasetSpec& data,
                       const TrainConfig& tc, std::ostream& log,
                       const std::string& resume_checkpoint = "");

/// Action-classification fine-tuning on stacked normalized flows. The data
/// preset must carry labels ("clips"). Mode selects what trains:
/// FixedMotionNet freezes the flow network (restored on exit), the other two
/// backpropagate into it; JointLoss adds unsup_weight * unsupervised
/// objective. Log lines: step=N total=... action=... unsup=... acc=...
/// time_ms=...
TrainResult train_stacked(MotionNet& model, ClassifierHead& head, const NormalizationSpec& norm,
                          const LossConfig& loss, const DatasetSpec& data, const TrainConfig& tc,
                          std::ostream& log, const std::string& resume_checkpoint = "");

}  // namespace motionnet
