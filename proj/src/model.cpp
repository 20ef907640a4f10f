#include "motionnet/model.hpp"

#include <algorithm>
#include <cmath>

#include "motionnet/errors.hpp"
#include "motionnet/rng.hpp"

namespace motionnet {

void MotionNetConfig::validate() const {
  if (input_frames < 2) {
    throw ConfigError("motionnet.input_frames must be >= 2, got " + std::to_string(input_frames));
  }
  if (base_channels < 1) {
    throw ConfigError("motionnet.base_channels must be >= 1, got " + std::to_string(base_channels));
  }
  if (levels < 2 || levels > 6) {
    // Six encoder levels give the five flow scales the per-scale loss weights
    // cover; fewer levels shrink the pyramid from the coarse end.
    throw ConfigError("motionnet.levels must be in [2,6], got " + std::to_string(levels));
  }
  if (!(activation_slope >= 0.0 && activation_slope < 1.0)) {
    throw ConfigError("motionnet.activation_slope must be in [0,1)");
  }
}

int64_t MotionNet::enc_channels(int64_t l) const {
  const int64_t c = cfg_.base_channels << (l - 1);
  return std::min<int64_t>(c, 128);
}

int64_t MotionNet::dec_channels(int64_t l) const {
  return std::max<int64_t>(enc_channels(l) / 2, 4);
}

MotionNet::ConvLayer MotionNet::make_conv(const std::string& name, int64_t c_in, int64_t c_out,
                                          int64_t k, int64_t stride, int64_t pad, Rng& rng,
                                          bool zero_init) {
  ConvLayer layer;
  layer.name = name;
  layer.stride = stride;
  layer.pad = pad;
  Tensor w = Tensor::zeros({c_out, c_in, k, k});
  if (!zero_init) {
    const double std = std::sqrt(2.0 / static_cast<double>(c_in * k * k));
    for (auto& v : w.data) v = rng.normal(0.0, std);
  }
  layer.w = make_param(std::move(w));
  layer.b = make_param(Tensor::zeros({c_out}));
  params_.emplace_back(name + ".w", layer.w);
  params_.emplace_back(name + ".b", layer.b);
  return layer;
}

MotionNet::ConvLayer MotionNet::make_deconv(const std::string& name, int64_t c_in, int64_t c_out,
                                            Rng& rng) {
  ConvLayer layer;
  layer.name = name;
  layer.stride = 2;
  layer.pad = 1;
  Tensor w = Tensor::zeros({c_in, c_out, 4, 4});
  const double std = std::sqrt(2.0 / static_cast<double>(c_in * 16));
  for (auto& v : w.data) v = rng.normal(0.0, std);
  layer.w = make_param(std::move(w));
  layer.b = make_param(Tensor::zeros({c_out}));
  params_.emplace_back(name + ".w", layer.w);
  params_.emplace_back(name + ".b", layer.b);
  return layer;
}

MotionNet::MotionNet(MotionNetConfig cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const int64_t L = cfg_.levels;
  const int64_t flow_ch = cfg_.flow_channels();

  if (cfg_.use_small_disp) {
    stem_.push_back(make_conv("conv0a", cfg_.in_channels(), cfg_.base_channels, 3, 1, 1, rng, false));
    stem_.push_back(make_conv("conv0b", cfg_.base_channels, cfg_.base_channels, 3, 1, 1, rng, false));
    enc_.push_back(make_conv("conv1", cfg_.base_channels, enc_channels(1), 3, 2, 1, rng, false));
  } else {
    enc_.push_back(make_conv("conv1", cfg_.in_channels(), enc_channels(1), 7, 2, 3, rng, false));
  }
  for (int64_t l = 2; l <= L; ++l) {
    enc_.push_back(
        make_conv("conv" + std::to_string(l), enc_channels(l - 1), enc_channels(l), 3, 2, 1, rng, false));
  }

  int64_t cur_ch = enc_channels(L);
  if (cfg_.use_multiscale) {
    heads_.push_back(make_conv("flow" + std::to_string(L), cur_ch, flow_ch, 3, 1, 1, rng, true));
  }
  for (int64_t l = L - 1; l >= 2; --l) {
    const int64_t cd = dec_channels(l);
    deconv_.push_back(make_deconv("deconv" + std::to_string(l), cur_ch, cd, rng));
    const int64_t concat_ch = enc_channels(l) + cd + (cfg_.use_multiscale ? flow_ch : 0);
    if (cfg_.use_cdc) {
      cdc_.push_back(make_conv("cdc" + std::to_string(l), concat_ch, cd, 3, 1, 1, rng, false));
      cur_ch = cd;
    } else {
      cur_ch = concat_ch;
    }
    if (cfg_.use_multiscale || l == 2) {
      heads_.push_back(make_conv("flow" + std::to_string(l), cur_ch, flow_ch, 3, 1, 1, rng, true));
    }
  }
}

std::vector<TensorPtr> MotionNet::forward(Graph& g, const TensorPtr& frames) const {
  if (frames->ndim() != 4 || frames->dim(1) != cfg_.in_channels()) {
    throw ConfigError("forward: expected [N," + std::to_string(cfg_.in_channels()) +
                      ",H,W] frames for input_frames=" + std::to_string(cfg_.input_frames) +
                      ", got " + frames->shape_str());
  }
  const int64_t div = cfg_.divisor();
  if (frames->dim(2) % div != 0 || frames->dim(3) % div != 0) {
    throw ConfigError("forward: input extent " + std::to_string(frames->dim(2)) + "x" +
                      std::to_string(frames->dim(3)) + " must be divisible by " +
                      std::to_string(div) + " (levels=" + std::to_string(cfg_.levels) + ")");
  }

  auto apply = [&](const ConvLayer& layer, const TensorPtr& x, bool activated) {
    auto y = g.conv2d(x, layer.w, layer.b, layer.stride, layer.pad);
    if (activated) y = g.leaky_relu(y, cfg_.activation_slope);
    y->check_finite(layer.name);
    return y;
  };

  TensorPtr x = frames;
  for (const auto& layer : stem_) x = apply(layer, x, true);
  std::vector<TensorPtr> feats;  // feats[l-1] = encoder level l
  for (const auto& layer : enc_) {
    x = apply(layer, x, true);
    feats.push_back(x);
  }

  const int64_t L = cfg_.levels;
  std::vector<TensorPtr> flows;  // coarsest first while decoding
  size_t head_idx = 0;
  TensorPtr cur = feats.back();
  if (cfg_.use_multiscale) flows.push_back(apply(heads_[head_idx++], cur, false));

  for (int64_t l = L - 1; l >= 2; --l) {
    const size_t stage = static_cast<size_t>(L - 1 - l);
    const auto& dc = deconv_[stage];
    auto up = g.leaky_relu(g.conv2d_transposed(cur, dc.w, dc.b, 2, 1), cfg_.activation_slope);
    up->check_finite(dc.name);
    std::vector<TensorPtr> parts{feats[static_cast<size_t>(l - 1)], up};
    if (cfg_.use_multiscale) parts.push_back(g.upsample_flow2x(flows.back()));
    cur = g.concat_channels(parts);
    if (cfg_.use_cdc) cur = apply(cdc_[stage], cur, true);
    if (cfg_.use_multiscale || l == 2) {
      flows.push_back(apply(heads_[head_idx++], cur, false));
    }
  }
  std::reverse(flows.begin(), flows.end());
  return flows;
}

TensorPtr MotionNet::infer_flow(Graph& g, const TensorPtr& frames) const {
  auto pyramid = forward(g, frames);
  // The finest scale sits at 1/4 resolution; two flow upsamplings restore the
  // input resolution and rescale displacements by 4.
  return g.upsample_flow2x(g.upsample_flow2x(pyramid.front()));
}

int64_t MotionNet::parameter_count() const {
  int64_t count = 0;
  for (const auto& [name, p] : params_) count += p->numel();
  return count;
}

void MotionNet::set_trainable(bool on) {
  trainable_ = on;
  for (auto& [name, p] : params_) p->requires_grad = on;
}

}  // namespace motionnet
