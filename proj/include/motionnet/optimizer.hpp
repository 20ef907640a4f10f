#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "motionnet/checkpoint.hpp"
#include "motionnet/tensor.hpp"

namespace motionnet {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// Adam over a fixed list of named parameters. Moment buffers live per
/// parameter; the bias-correction powers beta^t are kept as iteratively
/// multiplied accumulators so a resumed run reproduces the original update
/// bits exactly (recomputing pow(beta, t) would not).
class Adam {
 public:
  Adam(std::vector<std::pair<std::string, TensorPtr>> params, AdamConfig cfg = {});

  /// Applies one update from the accumulated gradients, then zeroes them.
  void step();

  int64_t steps_taken() const { return steps_; }
  const AdamConfig& config() const { return cfg_; }

  /// Appends opt.m.<name>, opt.v.<name> per parameter plus
  /// opt.powers = [beta1^t, beta2^t, t].
  void export_state(NamedTensors& out) const;

  /// Restores state written by export_state; throws ParseError when entries
  /// are missing or shaped differently.
  void import_state(const NamedTensors& in);

 private:
  struct Slot {
    std::string name;
    TensorPtr param;
    std::vector<double> m;
    std::vector<double> v;
  };

  AdamConfig cfg_;
  std::vector<Slot> slots_;
  double pow1_ = 1.0;
  double pow2_ = 1.0;
  int64_t steps_ = 0;
};

}  // namespace motionnet
