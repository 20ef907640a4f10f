#pragma once

#include <functional>
#include <string>
#include <vector>

#include "motionnet/graph.hpp"
#include "motionnet/tensor.hpp"

namespace motionnet {

struct GradCheckReport {
  /// max over checked elements of |analytic - numeric| / max(|analytic|, |numeric|, 1).
  /// The unit floor keeps near-zero gradients from inflating the ratio.
  double max_rel_dev = 0.0;
  bool passed = false;
  /// Location and values of the worst element.
  std::string worst;
  /// Non-finite findings ("input 0 element 12 ..."), empty when clean.
  std::string diagnostics;

  bool ok() const { return passed && diagnostics.empty(); }
};

/// Builds `op` on a fresh graph; if the output is not scalar it is contracted
/// with a fixed random projection vector so a single backward pass yields all
/// analytic gradients.
using OpFn = std::function<TensorPtr(Graph&, const std::vector<TensorPtr>&)>;

/// Central-difference check: perturbs every element of every grad-requiring
/// input by +-step and compares (L+ - L-)/(2 step) against the tape's
/// gradients. Inputs are restored afterwards.
GradCheckReport check_gradients(const OpFn& op, const std::vector<TensorPtr>& inputs,
                                double tolerance, double step = 1e-4,
                                uint64_t projection_seed = 0x67ad11);

}  // namespace motionnet
