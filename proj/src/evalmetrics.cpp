#include "motionnet/evalmetrics.hpp"

#include <cmath>
#include <exception>
#include <stdexcept>
#include <vector>

#include "motionnet/errors.hpp"
#include "motionnet/graph.hpp"

namespace motionnet {
namespace {

constexpr double kUnknownMag = 1e9;

struct PlanePairs {
  const double* a;
  const double* b;
  int64_t pairs;
  int64_t hw;
};

PlanePairs pair_view(const Tensor& pred, const Tensor& gt) {
  if (pred.shape != gt.shape) {
    throw InputError("flow metric: prediction shape " + pred.shape_str() +
                     " does not match ground truth " + gt.shape_str());
  }
  if (pred.ndim() < 3) {
    throw InputError("flow metric: expected at least [2,H,W], got " + pred.shape_str());
  }
  const int64_t h = pred.shape[pred.ndim() - 2];
  const int64_t w = pred.shape[pred.ndim() - 1];
  const int64_t planes = pred.numel() / (h * w);
  if (planes % 2 != 0) {
    throw InputError("flow metric: flow needs (u,v) plane pairs, got " +
                     std::to_string(planes) + " planes in " + pred.shape_str());
  }
  return {pred.data.data(), gt.data.data(), planes / 2, h * w};
}

bool known(double u, double v) {
  return std::fabs(u) <= kUnknownMag && std::fabs(v) <= kUnknownMag;
}

double epe_impl(const Tensor& pred, const Tensor& gt, const Tensor* mask) {
  PlanePairs v = pair_view(pred, gt);
  if (mask != nullptr && mask->numel() != v.hw) {
    throw InputError("flow metric: mask numel " + std::to_string(mask->numel()) +
                     " does not match plane size " + std::to_string(v.hw));
  }
  double sum = 0.0;
  int64_t count = 0;
  for (int64_t p = 0; p < v.pairs; ++p) {
    const double* pu = v.a + (2 * p) * v.hw;
    const double* pv = v.a + (2 * p + 1) * v.hw;
    const double* gu = v.b + (2 * p) * v.hw;
    const double* gv = v.b + (2 * p + 1) * v.hw;
    for (int64_t i = 0; i < v.hw; ++i) {
      if (!known(gu[i], gv[i])) continue;
      if (mask != nullptr && mask->data[i] <= 0.5) continue;
      const double du = pu[i] - gu[i];
      const double dv = pv[i] - gv[i];
      sum += std::sqrt(du * du + dv * dv);
      ++count;
    }
  }
  if (count == 0) {
    throw InputError("flow metric: no valid pixels to average over");
  }
  return sum / static_cast<double>(count);
}

}  // namespace

double epe(const Tensor& pred, const Tensor& gt) { return epe_impl(pred, gt, nullptr); }

double epe(const Tensor& pred, const Tensor& gt, const Tensor& mask) {
  return epe_impl(pred, gt, &mask);
}

double fl_outliers(const Tensor& pred, const Tensor& gt) {
  PlanePairs v = pair_view(pred, gt);
  int64_t outliers = 0;
  int64_t count = 0;
  for (int64_t p = 0; p < v.pairs; ++p) {
    const double* pu = v.a + (2 * p) * v.hw;
    const double* pv = v.a + (2 * p + 1) * v.hw;
    const double* gu = v.b + (2 * p) * v.hw;
    const double* gv = v.b + (2 * p + 1) * v.hw;
    for (int64_t i = 0; i < v.hw; ++i) {
      if (!known(gu[i], gv[i])) continue;
      const double du = pu[i] - gu[i];
      const double dv = pv[i] - gv[i];
      const double err = std::sqrt(du * du + dv * dv);
      const double mag = std::sqrt(gu[i] * gu[i] + gv[i] * gv[i]);
      if (err > 3.0 && err > 0.05 * mag) ++outliers;
      ++count;
    }
  }
  if (count == 0) {
    throw InputError("flow metric: no valid pixels to average over");
  }
  return 100.0 * static_cast<double>(outliers) / static_cast<double>(count);
}

double flow_variance(const Tensor& flow, const Tensor& mask, bool inside) {
  if (flow.ndim() < 3) {
    throw InputError("flow_variance: expected at least [2,H,W], got " + flow.shape_str());
  }
  const int64_t h = flow.shape[flow.ndim() - 2];
  const int64_t w = flow.shape[flow.ndim() - 1];
  const int64_t hw = h * w;
  const int64_t planes = flow.numel() / hw;
  if (mask.numel() != hw) {
    throw InputError("flow_variance: mask numel " + std::to_string(mask.numel()) +
                     " does not match plane size " + std::to_string(hw));
  }
  double total = 0.0;
  for (int64_t p = 0; p < planes; ++p) {
    const double* pl = flow.data.data() + p * hw;
    double sum = 0.0, sumsq = 0.0;
    int64_t count = 0;
    for (int64_t i = 0; i < hw; ++i) {
      const bool in = mask.data[i] > 0.5;
      if (in != inside) continue;
      sum += pl[i];
      sumsq += pl[i] * pl[i];
      ++count;
    }
    if (count == 0) {
      throw InputError("flow_variance: selected region is empty");
    }
    const double mean = sum / static_cast<double>(count);
    total += sumsq / static_cast<double>(count) - mean * mean;
  }
  return total / static_cast<double>(planes);
}

EvalReport evaluate_dataset(const MotionNet* model, const DatasetSpec& data,
                            const EvalOptions& opts) {
  data.validate();
  if (model == nullptr && !opts.oracle) {
    throw InputError("evaluate_dataset: model is required unless oracle mode is on");
  }
  const int64_t n = data.count;
  std::vector<double> epe_i(n, 0.0), fl_i(n, 0.0);
  std::vector<int> correct_i(n, -1);  // -1 = unlabelled sample
  std::exception_ptr failure;

#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    try {
      ClipSample sample = dataset_sample(data, i);
      Tensor gt = as_network_input(sample.gt_flows);
      Graph g;
      TensorPtr pred;
      if (opts.oracle) {
        pred = make_value(gt);
      } else {
        TensorPtr frames = make_value(as_network_input(sample.frames));
        pred = model->infer_flow(g, frames);
      }
      epe_i[i] = epe(*pred, gt);
      fl_i[i] = fl_outliers(*pred, gt);
      if (sample.label >= 0) {
        if (opts.oracle) {
          correct_i[i] = 1;
        } else if (opts.head != nullptr) {
          TensorPtr scores = opts.head->forward(g, quantize_flow(g, pred, opts.norm));
          int64_t best = 0;
          for (int64_t k = 1; k < scores->numel(); ++k) {
            if (scores->data[k] > scores->data[best]) best = k;
          }
          correct_i[i] = best == sample.label ? 1 : 0;
        }
      }
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  EvalReport report;
  report.sample_count = n;
  int64_t labelled = 0, correct = 0;
  for (int64_t i = 0; i < n; ++i) {
    report.mean_epe += epe_i[i];
    report.fl_percent += fl_i[i];
    if (correct_i[i] >= 0) {
      ++labelled;
      correct += correct_i[i];
    }
  }
  report.mean_epe /= static_cast<double>(n);
  report.fl_percent /= static_cast<double>(n);
  if (labelled > 0) {
    report.accuracy = static_cast<double>(correct) / static_cast<double>(labelled);
  }
  return report;
}

}  // namespace motionnet
