#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace motionnet {

/// Process exit codes shared by every subcommand:
///   0 success, 2 configuration/input/parse problems, 3 numeric failure
/// (non-finite values where finite ones are required).
inline constexpr int kExitOk = 0;
inline constexpr int kExitBadInput = 2;
inline constexpr int kExitNumeric = 3;

/// Subcommands are plain functions over argument structs so tests drive them
/// in-process; the CLI binary only fills the structs. Each catches domain
/// errors, writes one "error: ..." line to err and returns the exit code.

struct TrainArgs {
  std::string config_path;
  std::string resume;     // checkpoint with optimizer state; continues the run
  std::string init_from;  // checkpoint for weights only (fresh optimizer)
};
/// Resolves the config (MOTIONNET_OUT_DIR overrides [train] out_dir), writes
/// config.resolved.ini and train.log into the run directory, trains the
/// configured task, reports the final checkpoint path on out.
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);

struct InferArgs {
  std::string checkpoint;
  std::string frames_dir;  // frame_*.png, lexicographic order
  std::string out_dir;
  bool write_flo = true;
  bool write_png = false;
  int64_t timing_repeats = 10;
};
/// Slides an F-frame window with stride F-1 over the frame sequence (the
/// count must satisfy (n-1) % (F-1) == 0), writes flow_NNNN.{flo,png} per
/// consecutive pair, and reports pairs/sec over timed repeated forwards.
int cmd_infer(const InferArgs& args, std::ostream& out, std::ostream& err);

struct EvalArgs {
  std::string config_path;  // [data] provides the evaluation stream
  std::string checkpoint;   // optional in oracle mode
  bool json = false;
  bool oracle = false;  // score ground truth against itself
};
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);

struct AblateArgs {
  std::string config_path;
  /// Subset of {full, no-small-disp, no-ssim, no-cdc, no-smooth,
  /// no-multiscale}; empty = all six. --grid ignores rows and sweeps all 2^5
  /// toggle combinations.
  std::vector<std::string> rows;
  bool grid = false;
};
/// Trains each variant from scratch and prints a table of held-out EPE.
int cmd_ablate(const AblateArgs& args, std::ostream& out, std::ostream& err);

struct VizArgs {
  std::string flo_path;
  std::string png_path;
  double max_mag = 0.0;  // 0 = normalize by the field's 99th percentile
};
int cmd_viz(const VizArgs& args, std::ostream& out, std::ostream& err);

}  // namespace motionnet
