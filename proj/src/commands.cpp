#include "motionnet/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>

#include "json.hpp"

#include "motionnet/config.hpp"
#include "motionnet/errors.hpp"
#include "motionnet/evalmetrics.hpp"
#include "motionnet/floio.hpp"
#include "motionnet/flowviz.hpp"
#include "motionnet/graph.hpp"
#include "motionnet/pngio.hpp"
#include "motionnet/rng.hpp"

namespace fs = std::filesystem;

namespace motionnet {
namespace {

int guard(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
}

RunConfig load_config(const std::string& path) {
  RunConfig cfg = parse_run_config_file(path);
  if (const char* dir = std::getenv("MOTIONNET_OUT_DIR"); dir != nullptr && *dir != '\0') {
    cfg.train.out_dir = dir;
  }
  cfg.validate();
  return cfg;
}

ClassifierConfig head_config(const RunConfig& cfg) {
  ClassifierConfig hc;
  hc.in_channels = cfg.model.flow_channels();
  hc.classes = cfg.stacked.classes;
  hc.width = cfg.stacked.head_width;
  return hc;
}

Tensor image_to_tensor(const ColorImage& img) {
  Tensor t = Tensor::zeros({3, img.h, img.w});
  const double inv = 1.0 / 255.0;
  for (int64_t i = 0; i < img.h; ++i) {
    for (int64_t j = 0; j < img.w; ++j) {
      const unsigned char* p = img.px(i, j);
      for (int64_t c = 0; c < 3; ++c) {
        t.data[static_cast<size_t>((c * img.h + i) * img.w + j)] = p[c] * inv;
      }
    }
  }
  return t;
}

Tensor slice_pair(const Tensor& flows, int64_t t) {
  const int64_t h = flows.dim(2), w = flows.dim(3);
  Tensor out = Tensor::zeros({2, h, w});
  const double* src = flows.data.data() + static_cast<size_t>(2 * t * h * w);
  std::copy(src, src + 2 * h * w, out.data.begin());
  return out;
}

struct Variant {
  std::string name;
  std::function<void(RunConfig&)> tweak;
};

std::vector<Variant> named_variants() {
  return {
      {"full", [](RunConfig&) {}},
      {"no-small-disp", [](RunConfig& c) { c.model.use_small_disp = false; }},
      {"no-ssim", [](RunConfig& c) { c.loss.lambda3 = 0.0; }},
      {"no-cdc", [](RunConfig& c) { c.model.use_cdc = false; }},
      {"no-smooth", [](RunConfig& c) { c.loss.lambda2 = 0.0; }},
      {"no-multiscale", [](RunConfig& c) { c.model.use_multiscale = false; }},
  };
}

std::vector<Variant> grid_variants() {
  std::vector<Variant> rows;
  for (int bits = 0; bits < 32; ++bits) {
    const bool sd = bits & 1, cdc = bits & 2, ms = bits & 4, ssim = bits & 8, sm = bits & 16;
    char name[48];
    std::snprintf(name, sizeof name, "sd%d_cdc%d_ms%d_ssim%d_sm%d", sd ? 1 : 0, cdc ? 1 : 0,
                  ms ? 1 : 0, ssim ? 1 : 0, sm ? 1 : 0);
    rows.push_back({name, [=](RunConfig& c) {
                      c.model.use_small_disp = sd;
                      c.model.use_cdc = cdc;
                      c.model.use_multiscale = ms;
                      if (!ssim) c.loss.lambda3 = 0.0;
                      if (!sm) c.loss.lambda2 = 0.0;
                    }});
  }
  return rows;
}

}  // namespace

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return guard(err, [&]() {
    RunConfig cfg = load_config(args.config_path);
    fs::create_directories(cfg.train.out_dir);
    {
      std::ofstream resolved(cfg.train.out_dir + "/config.resolved.ini");
      resolved << dump_run_config(cfg);
    }
    std::ofstream log(cfg.train.out_dir + "/train.log");
    if (!log) throw InputError("train: cannot open " + cfg.train.out_dir + "/train.log");

    MotionNet model(cfg.model, cfg.model_seed);
    TrainResult result;
    if (cfg.task == "flow") {
      if (!args.init_from.empty()) {
        load_model_state(model, read_checkpoint(args.init_from));
      }
      out << "task=flow steps=" << cfg.train.steps << " params=" << model.parameter_count()
          << "\n";
      result = train_flow(model, cfg.loss, cfg.data, cfg.train, log, args.resume);
    } else {
      ClassifierHead head(head_config(cfg), cfg.stacked.seed);
      if (!args.init_from.empty()) {
        NamedTensors ckpt = read_checkpoint(args.init_from);
        load_model_state(model, ckpt);
        if (has_head_state(ckpt)) load_head_state(head, ckpt);
      }
      out << "task=stacked mode=" << to_string(cfg.train.mode) << " steps=" << cfg.train.steps
          << " params=" << model.parameter_count() + head.parameter_count() << "\n";
      result = train_stacked(model, head, cfg.stacked.norm, cfg.loss, cfg.data, cfg.train, log,
                             args.resume);
      char acc[64];
      std::snprintf(acc, sizeof acc, "final_batch_acc=%.4f\n", result.final_accuracy);
      out << acc;
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "done steps=%lld total=%.17g\n",
                  static_cast<long long>(result.steps_done), result.final_total);
    out << buf;
    out << "checkpoint=" << result.final_checkpoint << "\n";
    return kExitOk;
  });
}

int cmd_infer(const InferArgs& args, std::ostream& out, std::ostream& err) {
  return guard(err, [&]() {
    NamedTensors ckpt = read_checkpoint(args.checkpoint);
    const MotionNetConfig mcfg = motionnet_config_from(ckpt);
    MotionNet model(mcfg, 0);
    load_model_state(model, ckpt);
    model.set_trainable(false);

    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(args.frames_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("frame_", 0) == 0 && name.size() > 4 &&
          name.substr(name.size() - 4) == ".png") {
        names.push_back(name);
      }
    }
    std::sort(names.begin(), names.end());
    const int64_t n = static_cast<int64_t>(names.size());
    const int64_t f = mcfg.input_frames;
    if (n < f) {
      throw InputError("infer: found " + std::to_string(n) + " frame_*.png in " +
                       args.frames_dir + ", need at least " + std::to_string(f));
    }
    if ((n - 1) % (f - 1) != 0) {
      throw InputError("infer: " + std::to_string(n) + " frames cannot be covered by windows of " +
                       std::to_string(f) + " sliding by " + std::to_string(f - 1) +
                       "; need (count-1) divisible by " + std::to_string(f - 1));
    }
    std::vector<Tensor> frames;
    frames.reserve(static_cast<size_t>(n));
    for (const std::string& name : names) {
      frames.push_back(image_to_tensor(read_png(args.frames_dir + "/" + name)));
      if (frames.back().shape != frames.front().shape) {
        throw InputError("infer: " + name + " has extent " + frames.back().shape_str() +
                         ", first frame has " + frames.front().shape_str());
      }
    }
    const int64_t h = frames[0].dim(1), w = frames[0].dim(2);

    fs::create_directories(args.out_dir);
    std::vector<int64_t> starts;
    for (int64_t s = 0; s + f <= n; s += f - 1) starts.push_back(s);
    auto window_input = [&](int64_t s) {
      Tensor x = Tensor::zeros({1, 3 * f, h, w});
      for (int64_t k = 0; k < f; ++k) {
        std::copy(frames[static_cast<size_t>(s + k)].data.begin(),
                  frames[static_cast<size_t>(s + k)].data.end(),
                  x.data.begin() + static_cast<size_t>(3 * k * h * w));
      }
      return x;
    };
    int64_t written = 0;
    for (int64_t s : starts) {
      Graph g;
      TensorPtr flow = model.infer_flow(g, make_value(window_input(s)));
      for (int64_t t = 0; t < f - 1; ++t) {
        Tensor pair = slice_pair(*flow, t);
        char name[32];
        std::snprintf(name, sizeof name, "flow_%04lld", static_cast<long long>(s + t));
        if (args.write_flo) write_flo(args.out_dir + "/" + name + std::string(".flo"), pair);
        if (args.write_png) {
          write_png(args.out_dir + "/" + name + std::string(".png"), flow_to_color(pair));
        }
        ++written;
      }
    }

    const int64_t repeats = std::max<int64_t>(args.timing_repeats, 1);
    const auto t0 = std::chrono::steady_clock::now();
    for (int64_t r = 0; r < repeats; ++r) {
      for (int64_t s : starts) {
        Graph g;
        model.infer_flow(g, make_value(window_input(s)));
      }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double pairs = static_cast<double>(written) * static_cast<double>(repeats);
    char buf[160];
    std::snprintf(buf, sizeof buf, "windows=%lld pairs=%lld repeats=%lld pairs_per_sec=%.2f\n",
                  static_cast<long long>(starts.size()), static_cast<long long>(written),
                  static_cast<long long>(repeats), secs > 0.0 ? pairs / secs : 0.0);
    out << buf;
    return kExitOk;
  });
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  return guard(err, [&]() {
    RunConfig cfg = parse_run_config_file(args.config_path);
    cfg.validate();
    std::unique_ptr<MotionNet> model;
    std::unique_ptr<ClassifierHead> head;
    EvalOptions opts;
    opts.oracle = args.oracle;
    if (!args.checkpoint.empty()) {
      NamedTensors ckpt = read_checkpoint(args.checkpoint);
      model = std::make_unique<MotionNet>(motionnet_config_from(ckpt), 0);
      load_model_state(*model, ckpt);
      model->set_trainable(false);
      if (has_head_state(ckpt)) {
        head = std::make_unique<ClassifierHead>(head_config_from(ckpt), 0);
        load_head_state(*head, ckpt);
        head->set_trainable(false);
        opts.head = head.get();
        opts.norm = norm_from(ckpt);
      }
    } else if (!args.oracle) {
      throw InputError("eval: a checkpoint is required unless --oracle is given");
    }
    EvalReport report = evaluate_dataset(model.get(), cfg.data, opts);
    if (args.json) {
      nlohmann::json j;
      j["samples"] = report.sample_count;
      j["epe"] = report.mean_epe;
      j["fl_percent"] = report.fl_percent;
      if (report.has_accuracy()) j["accuracy"] = report.accuracy;
      out << j.dump(2) << "\n";
    } else {
      char buf[192];
      std::snprintf(buf, sizeof buf, "samples=%lld epe=%.17g fl=%.17g",
                    static_cast<long long>(report.sample_count), report.mean_epe,
                    report.fl_percent);
      out << buf;
      if (report.has_accuracy()) {
        std::snprintf(buf, sizeof buf, " acc=%.4f", report.accuracy);
        out << buf;
      }
      out << "\n";
    }
    return kExitOk;
  });
}

int cmd_ablate(const AblateArgs& args, std::ostream& out, std::ostream& err) {
  return guard(err, [&]() {
    const RunConfig base = load_config(args.config_path);
    if (base.task != "flow") {
      throw ConfigError("ablate: requires task = flow");
    }
    std::vector<Variant> variants;
    if (args.grid) {
      variants = grid_variants();
    } else if (args.rows.empty()) {
      variants = named_variants();
    } else {
      for (const std::string& want : args.rows) {
        bool found = false;
        for (Variant& v : named_variants()) {
          if (v.name == want) {
            variants.push_back(std::move(v));
            found = true;
            break;
          }
        }
        if (!found) {
          throw ConfigError("ablate: unknown variant \"" + want +
                            "\" (try full, no-small-disp, no-ssim, no-cdc, no-smooth, "
                            "no-multiscale)");
        }
      }
    }

    // Held-out stream: same distribution, disjoint seed.
    DatasetSpec heldout = base.data;
    heldout.seed = mix_seed(base.data.seed, 0x48454c44);

    out << "variant                   epe       fl%     final_loss\n";
    for (const Variant& v : variants) {
      RunConfig cfg = base;
      v.tweak(cfg);
      cfg.train.out_dir = base.train.out_dir + "/" + v.name;
      cfg.train.log_every = 0;
      fs::create_directories(cfg.train.out_dir);
      std::ofstream log(cfg.train.out_dir + "/train.log");
      MotionNet model(cfg.model, cfg.model_seed);
      TrainResult r = train_flow(model, cfg.loss, cfg.data, cfg.train, log);
      model.set_trainable(false);
      EvalReport report = evaluate_dataset(&model, heldout, {});
      model.set_trainable(true);
      char buf[160];
      std::snprintf(buf, sizeof buf, "%-18s %10.6f %9.4f %14.8g\n", v.name.c_str(),
                    report.mean_epe, report.fl_percent, r.final_total);
      out << buf;
    }
    return kExitOk;
  });
}

int cmd_viz(const VizArgs& args, std::ostream& out, std::ostream& err) {
  return guard(err, [&]() {
    Tensor flow = read_flo(args.flo_path);
    write_png(args.png_path, flow_to_color(flow, args.max_mag));
    out << "wrote " << args.png_path << " (" << flow.dim(2) << "x" << flow.dim(1) << ")\n";
    return kExitOk;
  });
}

}  // namespace motionnet
