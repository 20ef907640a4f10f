#include "motionnet/stacked.hpp"

#include <cmath>

#include "motionnet/errors.hpp"
#include "motionnet/rng.hpp"

namespace motionnet {

void NormalizationSpec::validate() const {
  if (!(clip > 0.0)) throw ConfigError("stacked.clip must be positive");
  if (!(out_hi > out_lo)) throw ConfigError("stacked: output range must be nonempty");
}

Tensor normalize_flow(const Tensor& flow, const NormalizationSpec& spec) {
  spec.validate();
  Tensor out = Tensor::zeros(flow.shape);
  const double span = spec.out_hi - spec.out_lo;
  const double inv = 1.0 / (2.0 * spec.clip);
  for (int64_t i = 0; i < flow.numel(); ++i) {
    const double c = std::clamp(flow.data[i], -spec.clip, spec.clip);
    // std::round rounds halves away from zero, which pins the midpoint:
    // v=0 -> 127.5 -> 128 for the default [0,255] range.
    out.data[i] = std::round(span * (c + spec.clip) * inv + spec.out_lo);
  }
  return out;
}

TensorPtr quantize_flow(Graph& g, const TensorPtr& flow, const NormalizationSpec& spec,
                        bool quantize) {
  spec.validate();
  auto out = std::make_shared<Tensor>();
  if (quantize) {
    *out = normalize_flow(*flow, spec);
  } else {
    *out = Tensor::zeros(flow->shape);
    for (int64_t i = 0; i < flow->numel(); ++i) {
      out->data[i] = std::clamp(flow->data[i], -spec.clip, spec.clip);
    }
  }
  if (!flow->requires_grad) return out;
  const double clip = spec.clip;
  return g.record("quantize_flow", {flow}, out, [flow, out, clip] {
    flow->ensure_grad();
    for (int64_t i = 0; i < flow->numel(); ++i) {
      if (std::fabs(flow->data[i]) <= clip) flow->grad[i] += out->grad[i];
    }
  });
}

Tensor stack_flows(const std::vector<Tensor>& flows) {
  if (flows.empty()) throw InputError("stack_flows: no fields given");
  const Tensor& first = flows.front();
  if (first.ndim() != 4 || first.dim(1) != 2) {
    throw InputError("stack_flows: fields must be [N,2,H,W], got " + first.shape_str());
  }
  for (const auto& f : flows) {
    if (f.shape != first.shape) {
      throw InputError("stack_flows: mismatched field shapes " + first.shape_str() + " vs " +
                       f.shape_str());
    }
  }
  const int64_t n = first.dim(0), h = first.dim(2), w = first.dim(3);
  const int64_t k = static_cast<int64_t>(flows.size());
  const int64_t plane = h * w;
  Tensor out = Tensor::zeros({n, 2 * k, h, w});
  for (int64_t b = 0; b < n; ++b) {
    for (int64_t t = 0; t < k; ++t) {
      std::copy_n(flows[static_cast<size_t>(t)].data.data() + b * 2 * plane, 2 * plane,
                  out.data.data() + (b * 2 * k + 2 * t) * plane);
    }
  }
  return out;
}

FineTuneMode parse_fine_tune_mode(const std::string& s) {
  if (s == "fixed") return FineTuneMode::FixedMotionNet;
  if (s == "action_only") return FineTuneMode::ActionLossOnly;
  if (s == "joint") return FineTuneMode::JointLoss;
  throw ConfigError("stacked.mode must be one of fixed|action_only|joint, got '" + s + "'");
}

std::string to_string(FineTuneMode mode) {
  switch (mode) {
    case FineTuneMode::FixedMotionNet: return "fixed";
    case FineTuneMode::ActionLossOnly: return "action_only";
    case FineTuneMode::JointLoss: return "joint";
  }
  return "?";
}

void ClassifierConfig::validate() const {
  if (in_channels < 1) throw ConfigError("stacked.in_channels must be >= 1");
  if (classes < 2) throw ConfigError("stacked.classes must be >= 2");
  if (width < 1) throw ConfigError("stacked.width must be >= 1");
  if (!(activation_slope >= 0.0 && activation_slope < 1.0)) {
    throw ConfigError("stacked.activation_slope must be in [0,1)");
  }
  if (!(input_scale > 0.0)) throw ConfigError("stacked.input_scale must be positive");
}

ClassifierHead::ClassifierHead(ClassifierConfig cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  auto conv_param = [&](const std::string& name, int64_t c_in, int64_t c_out, int64_t k) {
    Tensor w = Tensor::zeros({c_out, c_in, k, k});
    const double std = std::sqrt(2.0 / static_cast<double>(c_in * k * k));
    for (auto& v : w.data) v = rng.normal(0.0, std);
    auto wp = make_param(std::move(w));
    auto bp = make_param(Tensor::zeros({c_out}));
    params_.emplace_back(name + ".w", wp);
    params_.emplace_back(name + ".b", bp);
    return std::make_pair(wp, bp);
  };
  std::tie(conv1_w_, conv1_b_) = conv_param("head.conv1", cfg_.in_channels, cfg_.width, 3);
  std::tie(conv2_w_, conv2_b_) = conv_param("head.conv2", cfg_.width, 2 * cfg_.width, 3);
  Tensor fw = Tensor::zeros({cfg_.classes, 2 * cfg_.width});
  const double std = std::sqrt(1.0 / static_cast<double>(2 * cfg_.width));
  for (auto& v : fw.data) v = rng.normal(0.0, std);
  fc_w_ = make_param(std::move(fw));
  fc_b_ = make_param(Tensor::zeros({cfg_.classes}));
  params_.emplace_back("head.fc.w", fc_w_);
  params_.emplace_back("head.fc.b", fc_b_);
}

TensorPtr ClassifierHead::forward(Graph& g, const TensorPtr& x) const {
  if (x->ndim() != 4 || x->dim(1) != cfg_.in_channels) {
    throw ConfigError("classifier: expected [N," + std::to_string(cfg_.in_channels) +
                      ",H,W], got " + x->shape_str());
  }
  auto h = g.scale(x, cfg_.input_scale);
  h = g.leaky_relu(g.conv2d(h, conv1_w_, conv1_b_, 2, 1), cfg_.activation_slope);
  h->check_finite("head.conv1");
  h = g.leaky_relu(g.conv2d(h, conv2_w_, conv2_b_, 2, 1), cfg_.activation_slope);
  h->check_finite("head.conv2");
  auto logits = g.linear(g.global_avg_pool(h), fc_w_, fc_b_);
  logits->check_finite("head.fc");
  return logits;
}

int64_t ClassifierHead::parameter_count() const {
  int64_t count = 0;
  for (const auto& [name, p] : params_) count += p->numel();
  return count;
}

void ClassifierHead::set_trainable(bool on) {
  for (auto& [name, p] : params_) p->requires_grad = on;
}

Tensor fuse_scores(const Tensor& score_a, const Tensor& score_b, double weight_a, double weight_b) {
  if (score_a.shape != score_b.shape) {
    throw InputError("fuse_scores: shape mismatch " + score_a.shape_str() + " vs " +
                     score_b.shape_str());
  }
  if (weight_a < 0.0 || weight_b < 0.0 || weight_a + weight_b == 0.0) {
    throw InputError("fuse_scores: weights must be nonnegative and not both zero");
  }
  const double inv = 1.0 / (weight_a + weight_b);
  Tensor out = Tensor::zeros(score_a.shape);
  for (int64_t i = 0; i < out.numel(); ++i) {
    out.data[i] = (weight_a * score_a.data[i] + weight_b * score_b.data[i]) * inv;
  }
  return out;
}

}  // namespace motionnet
