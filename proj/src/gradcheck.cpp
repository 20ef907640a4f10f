#include "motionnet/gradcheck.hpp"

#include <cmath>
#include <cstdint>

#include "motionnet/rng.hpp"

namespace motionnet {

namespace {

// Projection weights are drawn once per check so repeated forward evaluations
// see the same functional.
std::vector<double> projection(int64_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> r(static_cast<size_t>(n));
  for (auto& v : r) v = rng.uniform(-1.0, 1.0);
  return r;
}

double project(const Tensor& y, const std::vector<double>& r) {
  double acc = 0.0;
  for (int64_t i = 0; i < y.numel(); ++i) acc += r[static_cast<size_t>(i)] * y.data[i];
  return acc;
}

}  // namespace

GradCheckReport check_gradients(const OpFn& op, const std::vector<TensorPtr>& inputs,
                                double tolerance, double step, uint64_t projection_seed) {
  GradCheckReport report;

  // Analytic pass: contract the op output with the projection (a constant
  // leaf) so one backward pass fills every input gradient.
  Graph g;
  TensorPtr y = op(g, inputs);
  std::vector<double> r = projection(y->numel(), projection_seed);
  for (const auto& x : inputs) {
    if (x->requires_grad) {
      x->ensure_grad();
      x->zero_grad();
    }
  }
  auto r_const = make_value(Tensor::from(y->shape, r));
  g.backward(g.sum_all(g.mul(y, r_const)));

  const double scale = 1.0 / (2.0 * step);
  for (size_t xi = 0; xi < inputs.size(); ++xi) {
    const TensorPtr& x = inputs[xi];
    if (!x->requires_grad) continue;
    for (int64_t i = 0; i < x->numel(); ++i) {
      const double analytic = x->grad[i];
      if (!std::isfinite(analytic)) {
        report.diagnostics += "non-finite analytic gradient at input " + std::to_string(xi) +
                              " element " + std::to_string(i) + "\n";
        continue;
      }
      const double saved = x->data[i];
      x->data[i] = saved + step;
      Graph gp;
      const double lp = project(*op(gp, inputs), r);
      x->data[i] = saved - step;
      Graph gm;
      const double lm = project(*op(gm, inputs), r);
      x->data[i] = saved;
      if (!std::isfinite(lp) || !std::isfinite(lm)) {
        report.diagnostics += "non-finite forward value probing input " + std::to_string(xi) +
                              " element " + std::to_string(i) + "\n";
        continue;
      }
      const double numeric = (lp - lm) * scale;
      const double dev = std::fabs(analytic - numeric) /
                         std::max({std::fabs(analytic), std::fabs(numeric), 1.0});
      if (dev > report.max_rel_dev) {
        report.max_rel_dev = dev;
        report.worst = "input " + std::to_string(xi) + " element " + std::to_string(i) +
                       ": analytic " + std::to_string(analytic) + " numeric " +
                       std::to_string(numeric);
      }
    }
  }
  report.passed = report.max_rel_dev <= tolerance;
  return report;
}

}  // namespace motionnet
