#pragma once

#include <cstdint>
#include <optional>

#include "motionnet/model.hpp"
#include "motionnet/stacked.hpp"
#include "motionnet/synth.hpp"
#include "motionnet/tensor.hpp"

namespace motionnet {

/// Flow fields compare as sequences of (u,v) plane pairs, so [2,H,W] single
/// fields and [N,2k,H,W] stacks both work. Ground-truth components with
/// magnitude > 1e9 (unknown-flow sentinels) are excluded from all metrics.

/// Mean endpoint error in pixels. An optional mask (numel == H*W, > 0.5 keeps
/// the pixel) restricts the average, e.g. to the foreground object.
double epe(const Tensor& pred, const Tensor& gt);
double epe(const Tensor& pred, const Tensor& gt, const Tensor& mask);

/// Percent of pixels whose endpoint error exceeds 3 px and 5% of the
/// ground-truth magnitude (both strictly).
double fl_outliers(const Tensor& pred, const Tensor& gt);

/// Mean per-plane variance of the flow over the selected pixels
/// (mask > 0.5 when inside, <= 0.5 otherwise); used to quantify smoothness in
/// homogeneous regions.
double flow_variance(const Tensor& flow, const Tensor& mask, bool inside);

struct EvalReport {
  double mean_epe = 0.0;
  double fl_percent = 0.0;
  double accuracy = -1.0;  // negative = no labels in the dataset
  int64_t sample_count = 0;

  bool has_accuracy() const { return accuracy >= 0.0; }
};

struct EvalOptions {
  /// Score ground truth against itself (the perfect-predictor plumbing).
  bool oracle = false;
  /// When set and the dataset carries labels, flows are normalized and
  /// classified to produce accuracy.
  const ClassifierHead* head = nullptr;
  NormalizationSpec norm;
};

/// Aggregates epe / fl (and accuracy when applicable) over the dataset;
/// per-sample work may fan out across threads, the reduction order is fixed.
/// `model` may be null in oracle mode.
EvalReport evaluate_dataset(const MotionNet* model, const DatasetSpec& data,
                            const EvalOptions& opts = {});

}  // namespace motionnet
