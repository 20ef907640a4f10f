#include "motionnet/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <vector>

#include "motionnet/errors.hpp"
#include "motionnet/graph.hpp"
#include "motionnet/optimizer.hpp"
#include "motionnet/rng.hpp"

namespace motionnet {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Tensor strip(const TensorPtr& p) { return Tensor::from(p->shape, p->data); }

Tensor meta_vec(std::initializer_list<double> vals) {
  return Tensor::from({static_cast<int64_t>(vals.size())}, vals);
}

const Tensor& require_meta(const NamedTensors& ckpt, const std::string& name, int64_t len) {
  const Tensor* t = find_tensor(ckpt, name);
  if (t == nullptr || t->numel() != len) {
    throw ParseError("checkpoint: missing or malformed " + name + " (expected " +
                     std::to_string(len) + " values)");
  }
  return *t;
}

void load_params(const std::vector<std::pair<std::string, TensorPtr>>& params,
                 const NamedTensors& ckpt) {
  for (const auto& [name, p] : params) {
    const Tensor* t = find_tensor(ckpt, name);
    if (t == nullptr) throw ParseError("checkpoint: missing parameter \"" + name + "\"");
    if (t->shape != p->shape) {
      throw ParseError("checkpoint: parameter \"" + name + "\" has shape " + t->shape_str() +
                       ", model expects " + p->shape_str());
    }
    p->data = t->data;
  }
}

std::string checkpoint_path(const std::string& dir, int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt_%06lld.ckpt", static_cast<long long>(step));
  return dir + "/" + buf;
}

/// Samples a training batch; sampling depends only on (seed, step, index) so
/// resumed runs reconstruct the exact batches of a fresh run.
struct Batch {
  Tensor frames;
  std::vector<int64_t> labels;
};

Batch draw_batch(const DatasetSpec& data, uint64_t seed, int64_t step, int64_t batch_size) {
  Rng rng(mix_seed(seed, static_cast<uint64_t>(step)));
  Batch batch;
  for (int64_t b = 0; b < batch_size; ++b) {
    const int64_t idx = rng.uniform_int(data.count);
    ClipSample sample = dataset_sample(data, idx);
    Tensor row = as_network_input(sample.frames);
    if (b == 0) {
      std::vector<int64_t> shape = row.shape;
      shape[0] = batch_size;
      batch.frames = Tensor::zeros(shape);
    }
    const size_t n = row.data.size();
    std::memcpy(batch.frames.data.data() + static_cast<size_t>(b) * n, row.data.data(),
                n * sizeof(double));
    batch.labels.push_back(sample.label);
  }
  return batch;
}

void require_finite_loss(double value, const char* task, int64_t step) {
  if (!std::isfinite(value)) {
    throw NumericError(std::string(task) + ": loss is not finite at step " +
                       std::to_string(step));
  }
}

// Freezes the flow network for fine-tune mode (a) and restores the previous
// state even when training throws.
class FreezeGuard {
 public:
  FreezeGuard(MotionNet& model, bool freeze) : model_(model), was_(model.trainable()) {
    if (freeze) model_.set_trainable(false);
  }
  ~FreezeGuard() { model_.set_trainable(was_); }

 private:
  MotionNet& model_;
  bool was_;
};

}  // namespace

void TrainConfig::validate() const {
  if (steps < 1) throw ConfigError("train.steps must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be >= 0");
  if (log_every < 0) throw ConfigError("train.log_every must be >= 0");
  if (out_dir.empty()) throw ConfigError("train.out_dir must not be empty");
  if (action_weight < 0.0) throw ConfigError("train.action_weight must be >= 0");
  if (unsup_weight < 0.0) throw ConfigError("train.unsup_weight must be >= 0");
}

NamedTensors model_state(const MotionNet& model) {
  const MotionNetConfig& c = model.config();
  NamedTensors out;
  out.emplace_back("meta.motionnet",
                   meta_vec({static_cast<double>(c.input_frames),
                             static_cast<double>(c.base_channels),
                             static_cast<double>(c.levels), c.use_small_disp ? 1.0 : 0.0,
                             c.use_cdc ? 1.0 : 0.0, c.use_multiscale ? 1.0 : 0.0,
                             c.activation_slope}));
  for (const auto& [name, p] : model.parameters()) out.emplace_back(name, strip(p));
  return out;
}

void append_head_state(NamedTensors& out, const ClassifierHead& head,
                       const NormalizationSpec& norm) {
  const ClassifierConfig& c = head.config();
  out.emplace_back("meta.head",
                   meta_vec({static_cast<double>(c.in_channels), static_cast<double>(c.classes),
                             static_cast<double>(c.width), c.activation_slope, c.input_scale}));
  out.emplace_back("meta.norm", meta_vec({norm.clip, norm.out_lo, norm.out_hi}));
  for (const auto& [name, p] : head.parameters()) out.emplace_back(name, strip(p));
}

void load_model_state(MotionNet& model, const NamedTensors& ckpt) {
  load_params(model.parameters(), ckpt);
}

void load_head_state(ClassifierHead& head, const NamedTensors& ckpt) {
  load_params(head.parameters(), ckpt);
}

MotionNetConfig motionnet_config_from(const NamedTensors& ckpt) {
  const Tensor& m = require_meta(ckpt, "meta.motionnet", 7);
  MotionNetConfig cfg;
  cfg.input_frames = static_cast<int64_t>(m.data[0]);
  cfg.base_channels = static_cast<int64_t>(m.data[1]);
  cfg.levels = static_cast<int64_t>(m.data[2]);
  cfg.use_small_disp = m.data[3] != 0.0;
  cfg.use_cdc = m.data[4] != 0.0;
  cfg.use_multiscale = m.data[5] != 0.0;
  cfg.activation_slope = m.data[6];
  cfg.validate();
  return cfg;
}

bool has_head_state(const NamedTensors& ckpt) {
  return find_tensor(ckpt, "meta.head") != nullptr;
}

ClassifierConfig head_config_from(const NamedTensors& ckpt) {
  const Tensor& m = require_meta(ckpt, "meta.head", 5);
  ClassifierConfig cfg;
  cfg.in_channels = static_cast<int64_t>(m.data[0]);
  cfg.classes = static_cast<int64_t>(m.data[1]);
  cfg.width = static_cast<int64_t>(m.data[2]);
  cfg.activation_slope = m.data[3];
  cfg.input_scale = m.data[4];
  cfg.validate();
  return cfg;
}

NormalizationSpec norm_from(const NamedTensors& ckpt) {
  const Tensor& m = require_meta(ckpt, "meta.norm", 3);
  NormalizationSpec spec;
  spec.clip = m.data[0];
  spec.out_lo = m.data[1];
  spec.out_hi = m.data[2];
  spec.validate();
  return spec;
}

TrainResult train_flow(MotionNet& model, const LossConfig& loss, const DatasetSpec& data,
                       const TrainConfig& tc, std::ostream& log,
                       const std::string& resume_checkpoint) {
  tc.validate();
  loss.validate();
  data.validate();
  if (data.frames != model.config().input_frames) {
    throw ConfigError("train_flow: dataset has " + std::to_string(data.frames) +
                      " frames per clip, model expects " +
                      std::to_string(model.config().input_frames));
  }
  std::filesystem::create_directories(tc.out_dir);

  AdamConfig acfg;
  acfg.lr = tc.lr;
  Adam opt(model.parameters(), acfg);
  int64_t start = 0;
  if (!resume_checkpoint.empty()) {
    NamedTensors ckpt = read_checkpoint(resume_checkpoint);
    load_model_state(model, ckpt);
    opt.import_state(ckpt);
    start = opt.steps_taken();
  }

  auto save = [&](const std::string& path) {
    NamedTensors state = model_state(model);
    opt.export_state(state);
    write_checkpoint(path, state);
  };

  TrainResult result;
  char line[512];
  for (int64_t step = start + 1; step <= tc.steps; ++step) {
    const auto t0 = Clock::now();
    Batch batch = draw_batch(data, tc.seed, step, tc.batch_size);
    Graph g;
    TensorPtr x = make_value(std::move(batch.frames));
    std::vector<TensorPtr> flows = model.forward(g, x);
    std::vector<TensorPtr> frames = build_frame_pyramid(g, x, static_cast<int64_t>(flows.size()));
    UnsupLossBreakdown bd = total_loss_breakdown(g, flows, frames, loss);
    require_finite_loss(bd.total->data[0], "train_flow", step);
    g.backward(bd.total);
    opt.step();
    result.final_total = bd.total->data[0];
    result.steps_done = step;
    if (tc.log_every > 0 && (step % tc.log_every == 0 || step == tc.steps)) {
      std::snprintf(line, sizeof line,
                    "step=%lld total=%.17g pixel=%.17g smooth=%.17g ssim=%.17g time_ms=%.3f\n",
                    static_cast<long long>(step), bd.total->data[0], bd.pixel, bd.smooth, bd.ssim,
                    ms_since(t0));
      log << line << std::flush;
    }
    if (tc.checkpoint_every > 0 && step % tc.checkpoint_every == 0 && step != tc.steps) {
      save(checkpoint_path(tc.out_dir, step));
    }
  }
  result.final_checkpoint = tc.out_dir + "/final.ckpt";
  save(result.final_checkpoint);
  return result;
}

TrainResult train_stacked(MotionNet& model, ClassifierHead& head, const NormalizationSpec& norm,
                          const LossConfig& loss, const DatasetSpec& data, const TrainConfig& tc,
                          std::ostream& log, const std::string& resume_checkpoint) {
  tc.validate();
  loss.validate();
  norm.validate();
  data.validate();
  if (data.frames != model.config().input_frames) {
    throw ConfigError("train_stacked: dataset has " + std::to_string(data.frames) +
                      " frames per clip, model expects " +
                      std::to_string(model.config().input_frames));
  }
  if (head.config().in_channels != model.config().flow_channels()) {
    throw ConfigError("train_stacked: head expects " + std::to_string(head.config().in_channels) +
                      " channels, model emits " + std::to_string(model.config().flow_channels()));
  }
  const bool joint = tc.mode == FineTuneMode::JointLoss;
  if (tc.action_weight == 0.0 && !(joint && tc.unsup_weight > 0.0)) {
    throw ConfigError("train_stacked: nothing to optimize with action_weight=0");
  }
  std::filesystem::create_directories(tc.out_dir);

  FreezeGuard freeze(model, tc.mode == FineTuneMode::FixedMotionNet);
  std::vector<std::pair<std::string, TensorPtr>> params;
  if (tc.mode != FineTuneMode::FixedMotionNet) {
    params = model.parameters();
  }
  for (const auto& p : head.parameters()) params.push_back(p);

  AdamConfig acfg;
  acfg.lr = tc.lr;
  Adam opt(params, acfg);
  int64_t start = 0;
  if (!resume_checkpoint.empty()) {
    NamedTensors ckpt = read_checkpoint(resume_checkpoint);
    load_model_state(model, ckpt);
    load_head_state(head, ckpt);
    opt.import_state(ckpt);
    start = opt.steps_taken();
  }

  auto save = [&](const std::string& path) {
    NamedTensors state = model_state(model);
    append_head_state(state, head, norm);
    opt.export_state(state);
    write_checkpoint(path, state);
  };

  TrainResult result;
  char line[512];
  for (int64_t step = start + 1; step <= tc.steps; ++step) {
    const auto t0 = Clock::now();
    Batch batch = draw_batch(data, tc.seed, step, tc.batch_size);
    for (int64_t b = 0; b < tc.batch_size; ++b) {
      if (batch.labels[static_cast<size_t>(b)] < 0) {
        throw InputError("train_stacked: dataset preset \"" + data.preset +
                         "\" has no labels; use the clips preset");
      }
    }
    Graph g;
    TensorPtr x = make_value(std::move(batch.frames));
    std::vector<TensorPtr> flows = model.forward(g, x);
    TensorPtr full = g.upsample_flow2x(g.upsample_flow2x(flows[0]));
    TensorPtr scores = head.forward(g, quantize_flow(g, full, norm));
    TensorPtr ce = g.cross_entropy(scores, batch.labels);

    double unsup_value = 0.0;
    TensorPtr total;
    if (tc.action_weight > 0.0) total = g.scale(ce, tc.action_weight);
    if (joint && tc.unsup_weight > 0.0) {
      std::vector<TensorPtr> frames =
          build_frame_pyramid(g, x, static_cast<int64_t>(flows.size()));
      UnsupLossBreakdown bd = total_loss_breakdown(g, flows, frames, loss);
      unsup_value = bd.total->data[0];
      TensorPtr weighted = g.scale(bd.total, tc.unsup_weight);
      total = total ? g.add(total, weighted) : weighted;
    }
    require_finite_loss(total->data[0], "train_stacked", step);
    g.backward(total);
    opt.step();

    int64_t correct = 0;
    for (int64_t b = 0; b < tc.batch_size; ++b) {
      int64_t best = 0;
      const int64_t k = scores->dim(1);
      for (int64_t c = 1; c < k; ++c) {
        if (scores->data[b * k + c] > scores->data[b * k + best]) best = c;
      }
      if (best == batch.labels[static_cast<size_t>(b)]) ++correct;
    }
    result.final_total = total->data[0];
    result.final_accuracy = static_cast<double>(correct) / static_cast<double>(tc.batch_size);
    result.steps_done = step;
    if (tc.log_every > 0 && (step % tc.log_every == 0 || step == tc.steps)) {
      std::snprintf(line, sizeof line,
                    "step=%lld total=%.17g action=%.17g unsup=%.17g acc=%.4f time_ms=%.3f\n",
                    static_cast<long long>(step), total->data[0], ce->data[0], unsup_value,
                    result.final_accuracy, ms_since(t0));
      log << line << std::flush;
    }
    if (tc.checkpoint_every > 0 && step % tc.checkpoint_every == 0 && step != tc.steps) {
      save(checkpoint_path(tc.out_dir, step));
    }
  }
  result.final_checkpoint = tc.out_dir + "/final.ckpt";
  save(result.final_checkpoint);
  return result;
}

}  // namespace motionnet
