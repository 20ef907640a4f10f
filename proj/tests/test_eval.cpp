#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "motionnet/errors.hpp"
#include "motionnet/evalmetrics.hpp"
#include "motionnet/model.hpp"
#include "motionnet/rng.hpp"
#include "motionnet/synth.hpp"
#include "motionnet/tensor.hpp"

using namespace motionnet;

namespace {

Tensor const_flow(double u, double v, int64_t h = 4, int64_t w = 4) {
  Tensor t = Tensor::zeros({2, h, w});
  for (int64_t p = 0; p < h * w; ++p) {
    t.data[static_cast<size_t>(p)] = u;
    t.data[static_cast<size_t>(h * w + p)] = v;
  }
  return t;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("endpoint error of a (3,4) offset is exactly 5") {
  Tensor pred = const_flow(3.0, 4.0);
  Tensor gt = const_flow(0.0, 0.0);
  CHECK(epe(pred, gt) == 5.0);
  CHECK(epe(pred, pred) == 0.0);
}

TEST_CASE("epe matches a brute-force reference on random stacks") {
  Rng rng(23);
  Tensor pred = Tensor::zeros({2, 4, 3, 5});  // two samples, two plane pairs each
  Tensor gt = Tensor::zeros({2, 4, 3, 5});
  for (double& v : pred.data) v = rng.uniform(-4.0, 4.0);
  for (double& v : gt.data) v = rng.uniform(-4.0, 4.0);

  const int64_t hw = 15;
  double sum = 0.0;
  int64_t n = 0;
  // Plane pairs in order: for each sample, (u0,v0), (u1,v1).
  for (int64_t pair = 0; pair < 4; ++pair) {
    const double* pu = pred.data.data() + (2 * pair) * hw;
    const double* pv = pred.data.data() + (2 * pair + 1) * hw;
    const double* gu = gt.data.data() + (2 * pair) * hw;
    const double* gv = gt.data.data() + (2 * pair + 1) * hw;
    for (int64_t p = 0; p < hw; ++p) {
      sum += std::hypot(pu[p] - gu[p], pv[p] - gv[p]);
      ++n;
    }
  }
  CHECK(epe(pred, gt) == doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));
}

TEST_CASE("epe validates shapes") {
  CHECK_THROWS_AS(epe(Tensor::zeros({2, 4, 4}), Tensor::zeros({2, 4, 5})), InputError);
  CHECK_THROWS_AS(epe(Tensor::zeros({3, 4, 4}), Tensor::zeros({3, 4, 4})), InputError);
  CHECK_THROWS_AS(epe(Tensor::zeros({8}), Tensor::zeros({8})), InputError);
}

TEST_CASE("fl outlier thresholds are strict") {
  Tensor gt = const_flow(100.0, 0.0);

  // Error 3.0 px on |gt|=100: not > 3, not an outlier.
  CHECK(fl_outliers(const_flow(103.0, 0.0), gt) == 0.0);
  // Error 4.0 px: > 3 but 4% of magnitude, not > 5%: still inlier.
  CHECK(fl_outliers(const_flow(104.0, 0.0), gt) == 0.0);
  // Exactly 5.0 px = 5%: strict comparison keeps it an inlier.
  CHECK(fl_outliers(const_flow(105.0, 0.0), gt) == 0.0);
  // 5.1 px on |gt|=100 fails both -> 100%.
  CHECK(fl_outliers(const_flow(105.1, 0.0), gt) == 100.0);
  // Small ground truth: error 3.5 > 3 px and > 5% of 1.0.
  CHECK(fl_outliers(const_flow(4.5, 0.0), const_flow(1.0, 0.0)) == 100.0);

  // Half the pixels outliers -> 50%.
  Tensor mixed = const_flow(100.0, 0.0);
  for (int64_t p = 0; p < 8; ++p) mixed.data[static_cast<size_t>(p)] = 110.0;
  CHECK(fl_outliers(mixed, gt) == 50.0);
}

TEST_CASE("sentinel ground truth is excluded from the average") {
  Tensor gt = const_flow(1.0, 0.0, 2, 2);
  Tensor pred = const_flow(2.0, 0.0, 2, 2);  // error 1 everywhere
  pred.data[0] = 100.0;                       // would be error 99 ...
  gt.data[0] = 2e9;                           // ... but this pixel is unknown
  CHECK(epe(pred, gt) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fl_outliers(pred, gt) == 0.0);

  // All pixels unknown: refusing to average beats returning NaN.
  Tensor all_bad = const_flow(2e9, 2e9, 2, 2);
  CHECK_THROWS_AS(epe(pred, all_bad), InputError);
}

TEST_CASE("mask restricts the average") {
  Tensor gt = const_flow(0.0, 0.0, 2, 2);
  Tensor pred = const_flow(0.0, 0.0, 2, 2);
  pred.data[0] = 8.0;  // pixel (0,0) has error 8, the rest 0
  Tensor keep_bad = Tensor::from({2, 2}, {1.0, 0.0, 0.0, 0.0});
  Tensor drop_bad = Tensor::from({2, 2}, {0.0, 1.0, 1.0, 1.0});
  CHECK(epe(pred, gt, keep_bad) == 8.0);
  CHECK(epe(pred, gt, drop_bad) == 0.0);
  CHECK_THROWS_AS(epe(pred, gt, Tensor::zeros({3, 3})), InputError);
}

TEST_CASE("flow_variance measures spread over the selected region") {
  // u-plane: 0 on the left half, 10 on the right; v-plane constant.
  Tensor flow = Tensor::zeros({2, 2, 2});
  flow.data = {0.0, 10.0, 0.0, 10.0, 3.0, 3.0, 3.0, 3.0};
  Tensor all = Tensor::from({2, 2}, {1.0, 1.0, 1.0, 1.0});
  // Population variance of {0,10,0,10} is 25; v-plane contributes 0.
  CHECK(flow_variance(flow, all, true) == doctest::Approx(12.5).epsilon(1e-12));
  // Outside an all-ones mask there are no pixels: that is an error, not a 0.
  CHECK_THROWS_AS(flow_variance(flow, all, false), InputError);

  Tensor left = Tensor::from({2, 2}, {1.0, 0.0, 1.0, 0.0});
  CHECK(flow_variance(flow, left, true) == 0.0);   // constant inside
  CHECK(flow_variance(flow, left, false) == 0.0);  // constant outside
}

TEST_CASE("oracle evaluation is perfect by construction") {
  DatasetSpec data;
  data.preset = "translate";
  data.count = 4;
  data.extent = 16;
  data.frames = 2;
  data.seed = 5;
  data.max_disp = 3.0;
  EvalOptions opts;
  opts.oracle = true;
  EvalReport rep = evaluate_dataset(nullptr, data, opts);
  CHECK(rep.sample_count == 4);
  CHECK(rep.mean_epe == 0.0);
  CHECK(rep.fl_percent == 0.0);
  CHECK_FALSE(rep.has_accuracy());

  SUBCASE("labeled clips report perfect oracle accuracy") {
    data.preset = "clips";
    data.frames = 3;
    EvalReport labeled = evaluate_dataset(nullptr, data, opts);
    CHECK(labeled.has_accuracy());
    CHECK(labeled.accuracy == 1.0);
  }
}

TEST_CASE("a fresh network scores the zero-flow baseline") {
  // Zero-init flow heads mean the untrained net predicts exactly zero, so its
  // EPE equals the mean ground-truth magnitude -- a useful lower anchor.
  DatasetSpec data;
  data.preset = "translate";
  data.count = 3;
  data.extent = 16;
  data.frames = 2;
  data.seed = 31;
  data.max_disp = 3.0;

  MotionNetConfig cfg;
  cfg.input_frames = 2;
  cfg.base_channels = 4;
  cfg.levels = 2;
  MotionNet net(cfg, 1);
  EvalReport rep = evaluate_dataset(&net, data);
  CHECK(rep.sample_count == 3);

  double mag = 0.0;
  for (int64_t i = 0; i < 3; ++i) {
    ClipSample clip = dataset_sample(data, i);
    mag += std::hypot(clip.gt_flows.at4(0, 0, 0, 0), clip.gt_flows.at4(0, 1, 0, 0));
  }
  CHECK(rep.mean_epe == doctest::Approx(mag / 3.0).epsilon(1e-9));

  SUBCASE("null model without oracle is rejected") {
    CHECK_THROWS_AS(evaluate_dataset(nullptr, data), InputError);
  }
}

}  // TEST_SUITE
