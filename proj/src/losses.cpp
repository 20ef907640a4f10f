#include "motionnet/losses.hpp"

#include <cmath>
#include <string>

#include "motionnet/errors.hpp"

namespace motionnet {

void LossConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("loss.epsilon must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("loss.alpha must be in (0,1]");
  if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0) {
    throw ConfigError("loss.lambda weights must be nonnegative");
  }
  if (lambda1 == 0.0 && lambda2 == 0.0 && lambda3 == 0.0) {
    throw ConfigError("loss.lambda: at least one of lambda1..3 must be positive");
  }
  bool any_delta = false;
  for (double d : delta) {
    if (d < 0.0) throw ConfigError("loss.delta weights must be nonnegative");
    any_delta = any_delta || d > 0.0;
  }
  if (!any_delta) throw ConfigError("loss.delta: at least one scale weight must be positive");
  if (ssim_window < 1) throw ConfigError("loss.ssim_window must be >= 1");
  if (ssim_stride < 1) throw ConfigError("loss.ssim_stride must be >= 1");
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw ConfigError("loss.c1 and loss.c2 must be positive");
}

TensorPtr pixel_loss(Graph& g, const TensorPtr& i1, const TensorPtr& i2, const TensorPtr& flow,
                     const LossConfig& cfg) {
  require_same_shape(*i1, *i2, "pixel_loss");
  auto rec = g.backward_warp(i2, flow);
  return g.mean_all(g.charbonnier(g.sub(i1, rec), cfg.epsilon, cfg.alpha));
}

TensorPtr smoothness_loss(Graph& g, const TensorPtr& flow, const LossConfig& cfg) {
  if (flow->ndim() != 4 || flow->dim(1) % 2 != 0 || flow->dim(1) == 0) {
    throw ConfigError("smoothness_loss: expected [N,2k,H,W] flow, got " + flow->shape_str());
  }
  // Per pixel and pair, the four Charbonnier terms of the x/y differences of
  // both components. mean_all averages over the 2k channels as well, so the
  // per-pair 4-term sum equals twice the channel mean.
  auto dx = g.charbonnier(g.forward_diff_x(flow), cfg.epsilon, cfg.alpha);
  auto dy = g.charbonnier(g.forward_diff_y(flow), cfg.epsilon, cfg.alpha);
  return g.scale(g.mean_all(g.add(dx, dy)), 2.0);
}

double ssim_patch(const Tensor& p1, const Tensor& p2, const LossConfig& cfg) {
  require_same_shape(p1, p2, "ssim_patch");
  const int64_t n = p1.numel();
  const double inv = 1.0 / static_cast<double>(n);
  double mu1 = 0.0, mu2 = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    mu1 += p1.data[i];
    mu2 += p2.data[i];
  }
  mu1 *= inv;
  mu2 *= inv;
  double var1 = 0.0, var2 = 0.0, cov = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double d1 = p1.data[i] - mu1;
    const double d2 = p2.data[i] - mu2;
    var1 += d1 * d1;
    var2 += d2 * d2;
    cov += d1 * d2;
  }
  var1 *= inv;
  var2 *= inv;
  cov *= inv;
  return (2.0 * mu1 * mu2 + cfg.c1) * (2.0 * cov + cfg.c2) /
         ((mu1 * mu1 + mu2 * mu2 + cfg.c1) * (var1 + var2 + cfg.c2));
}

TensorPtr ssim_loss(Graph& g, const TensorPtr& i1, const TensorPtr& i1_rec, const LossConfig& cfg) {
  require_same_shape(*i1, *i1_rec, "ssim_loss");
  if (i1->ndim() != 4) throw ConfigError("ssim_loss: expected [N,C,H,W], got " + i1->shape_str());
  if (i1->dim(2) < cfg.ssim_window || i1->dim(3) < cfg.ssim_window) {
    throw ConfigError("ssim_loss: image " + std::to_string(i1->dim(2)) + "x" +
                      std::to_string(i1->dim(3)) + " smaller than SSIM window " +
                      std::to_string(cfg.ssim_window));
  }
  const int64_t k = cfg.ssim_window, s = cfg.ssim_stride;
  // Windowed population moments via average pooling; variances may be
  // computed as E[x^2] - mu^2 because everything stays in 64-bit.
  auto mu1 = g.avg_pool(i1, k, s);
  auto mu2 = g.avg_pool(i1_rec, k, s);
  auto e11 = g.avg_pool(g.mul(i1, i1), k, s);
  auto e22 = g.avg_pool(g.mul(i1_rec, i1_rec), k, s);
  auto e12 = g.avg_pool(g.mul(i1, i1_rec), k, s);
  auto mu1mu1 = g.mul(mu1, mu1);
  auto mu2mu2 = g.mul(mu2, mu2);
  auto mu1mu2 = g.mul(mu1, mu2);
  auto var1 = g.sub(e11, mu1mu1);
  auto var2 = g.sub(e22, mu2mu2);
  auto cov = g.sub(e12, mu1mu2);
  auto num = g.mul(g.add_scalar(g.scale(mu1mu2, 2.0), cfg.c1),
                   g.add_scalar(g.scale(cov, 2.0), cfg.c2));
  auto den = g.mul(g.add_scalar(g.add(mu1mu1, mu2mu2), cfg.c1),
                   g.add_scalar(g.add(var1, var2), cfg.c2));
  auto ssim_map = g.div(num, den);
  return g.mean_all(g.add_scalar(g.scale(ssim_map, -1.0), 1.0));
}

namespace {

struct Parts {
  double pixel = 0.0;
  double smooth = 0.0;
  double ssim = 0.0;
};

// Shared composition for scale_loss / scale_loss_stack so the pair case and
// the stacked case are bitwise-consistent: the reconstruction is warped once
// and reused by the pixel and SSIM terms. `parts`, when given, collects the
// weighted term values for logging without touching the tape.
TensorPtr pair_scale_loss(Graph& g, const TensorPtr& i1, const TensorPtr& i2,
                          const TensorPtr& flow, const LossConfig& cfg, Parts* parts) {
  TensorPtr rec;
  TensorPtr acc;
  auto accumulate = [&](const TensorPtr& term, double weight, double Parts::* part) {
    auto weighted = g.scale(term, weight);
    if (parts != nullptr) parts->*part += weighted->data[0];
    acc = acc ? g.add(acc, weighted) : weighted;
  };
  if (cfg.lambda1 > 0.0 || cfg.lambda3 > 0.0) rec = g.backward_warp(i2, flow);
  if (cfg.lambda1 > 0.0) {
    accumulate(g.mean_all(g.charbonnier(g.sub(i1, rec), cfg.epsilon, cfg.alpha)), cfg.lambda1,
               &Parts::pixel);
  }
  if (cfg.lambda2 > 0.0) accumulate(smoothness_loss(g, flow, cfg), cfg.lambda2, &Parts::smooth);
  // The SSIM term only exists where the scale can hold a full window; the
  // coarse pyramid tail is supervised by the other two terms.
  if (cfg.lambda3 > 0.0 && i1->dim(2) >= cfg.ssim_window && i1->dim(3) >= cfg.ssim_window) {
    accumulate(ssim_loss(g, i1, rec, cfg), cfg.lambda3, &Parts::ssim);
  }
  if (!acc) acc = make_value(Tensor::zeros({1}));
  return acc;
}

TensorPtr stack_loss_impl(Graph& g, const TensorPtr& frames_s, const TensorPtr& flows_s,
                          const LossConfig& cfg, Parts* parts) {
  if (frames_s->ndim() != 4 || frames_s->dim(1) % 3 != 0) {
    throw ConfigError("scale_loss_stack: frames must be [N,3F,H,W], got " + frames_s->shape_str());
  }
  const int64_t f = frames_s->dim(1) / 3;
  if (f < 2) throw ConfigError("scale_loss_stack: need at least 2 frames");
  if (flows_s->ndim() != 4 || flows_s->dim(1) != 2 * (f - 1)) {
    throw ConfigError("scale_loss_stack: expected " + std::to_string(2 * (f - 1)) +
                      " flow channels for " + std::to_string(f) + " frames, got " +
                      flows_s->shape_str());
  }
  Parts pair_parts;
  TensorPtr acc;
  for (int64_t t = 0; t < f - 1; ++t) {
    auto i1 = g.slice_channels(frames_s, 3 * t, 3 * (t + 1));
    auto i2 = g.slice_channels(frames_s, 3 * (t + 1), 3 * (t + 2));
    auto flow = g.slice_channels(flows_s, 2 * t, 2 * (t + 1));
    auto term = pair_scale_loss(g, i1, i2, flow, cfg, parts != nullptr ? &pair_parts : nullptr);
    acc = acc ? g.add(acc, term) : term;
  }
  const double inv = 1.0 / static_cast<double>(f - 1);
  if (parts != nullptr) {
    parts->pixel += pair_parts.pixel * inv;
    parts->smooth += pair_parts.smooth * inv;
    parts->ssim += pair_parts.ssim * inv;
  }
  return g.scale(acc, inv);
}

TensorPtr total_loss_impl(Graph& g, const std::vector<TensorPtr>& flow_pyramid,
                          const std::vector<TensorPtr>& frame_pyramid, const LossConfig& cfg,
                          Parts* parts) {
  if (flow_pyramid.empty()) throw ConfigError("total_loss: empty flow pyramid");
  if (flow_pyramid.size() != frame_pyramid.size()) {
    throw ConfigError("total_loss: " + std::to_string(flow_pyramid.size()) + " flow levels vs " +
                      std::to_string(frame_pyramid.size()) + " image levels");
  }
  if (flow_pyramid.size() > cfg.delta.size()) {
    throw ConfigError("total_loss: " + std::to_string(flow_pyramid.size()) +
                      " levels exceed the " + std::to_string(cfg.delta.size()) +
                      " per-scale delta weights");
  }
  TensorPtr acc;
  for (size_t s = 0; s < flow_pyramid.size(); ++s) {
    const auto& flow = flow_pyramid[s];
    const auto& frames = frame_pyramid[s];
    if (flow->dim(0) != frames->dim(0) || flow->dim(2) != frames->dim(2) ||
        flow->dim(3) != frames->dim(3)) {
      throw ConfigError("total_loss: level " + std::to_string(s) + " flow " + flow->shape_str() +
                        " does not match images " + frames->shape_str());
    }
    if (cfg.delta[s] == 0.0) continue;
    Parts level;
    auto term = g.scale(stack_loss_impl(g, frames, flow, cfg, parts != nullptr ? &level : nullptr),
                        cfg.delta[s]);
    if (parts != nullptr) {
      parts->pixel += cfg.delta[s] * level.pixel;
      parts->smooth += cfg.delta[s] * level.smooth;
      parts->ssim += cfg.delta[s] * level.ssim;
    }
    acc = acc ? g.add(acc, term) : term;
  }
  if (!acc) acc = make_value(Tensor::zeros({1}));
  return acc;
}

}  // namespace

TensorPtr scale_loss(Graph& g, const TensorPtr& i1_s, const TensorPtr& i2_s,
                     const TensorPtr& flow_s, const LossConfig& cfg) {
  require_same_shape(*i1_s, *i2_s, "scale_loss");
  return pair_scale_loss(g, i1_s, i2_s, flow_s, cfg, nullptr);
}

TensorPtr scale_loss_stack(Graph& g, const TensorPtr& frames_s, const TensorPtr& flows_s,
                           const LossConfig& cfg) {
  return stack_loss_impl(g, frames_s, flows_s, cfg, nullptr);
}

std::vector<TensorPtr> build_frame_pyramid(Graph& g, const TensorPtr& frames, int64_t n_scales) {
  std::vector<TensorPtr> pyramid;
  pyramid.reserve(static_cast<size_t>(n_scales));
  TensorPtr cur = g.avg_downsample2x(g.avg_downsample2x(frames));
  for (int64_t i = 0; i < n_scales; ++i) {
    pyramid.push_back(cur);
    if (i + 1 < n_scales) cur = g.avg_downsample2x(cur);
  }
  return pyramid;
}

TensorPtr total_loss(Graph& g, const std::vector<TensorPtr>& flow_pyramid,
                     const std::vector<TensorPtr>& frame_pyramid, const LossConfig& cfg) {
  return total_loss_impl(g, flow_pyramid, frame_pyramid, cfg, nullptr);
}

UnsupLossBreakdown total_loss_breakdown(Graph& g, const std::vector<TensorPtr>& flow_pyramid,
                                        const std::vector<TensorPtr>& frame_pyramid,
                                        const LossConfig& cfg) {
  Parts parts;
  UnsupLossBreakdown out;
  out.total = total_loss_impl(g, flow_pyramid, frame_pyramid, cfg, &parts);
  out.pixel = parts.pixel;
  out.smooth = parts.smooth;
  out.ssim = parts.ssim;
  return out;
}

}  // namespace motionnet
