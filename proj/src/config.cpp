#include "motionnet/config.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "motionnet/errors.hpp"

namespace motionnet {
namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bad_value(const std::string& section, const std::string& key,
                            const std::string& value, const char* want) {
  throw ConfigError("[" + section + "] " + key + ": cannot parse \"" + value + "\" as " + want);
}

int64_t to_int(const std::string& section, const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') bad_value(section, key, v, "an integer");
  return static_cast<int64_t>(x);
}

uint64_t to_seed(const std::string& section, const std::string& key, const std::string& v) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') bad_value(section, key, v, "an unsigned integer");
  return static_cast<uint64_t>(x);
}

double to_double(const std::string& section, const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') bad_value(section, key, v, "a number");
  return x;
}

bool to_bool(const std::string& section, const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  bad_value(section, key, v, "a boolean (true/false)");
}

void apply(RunConfig& cfg, const std::string& sec, const std::string& key,
           const std::string& val) {
  auto unknown = [&]() -> void { throw ConfigError("unknown config key [" + sec + "] " + key); };
  if (sec == "train") {
    if (key == "steps") cfg.train.steps = to_int(sec, key, val);
    else if (key == "batch_size") cfg.train.batch_size = to_int(sec, key, val);
    else if (key == "lr") cfg.train.lr = to_double(sec, key, val);
    else if (key == "seed") cfg.train.seed = to_seed(sec, key, val);
    else if (key == "checkpoint_every") cfg.train.checkpoint_every = to_int(sec, key, val);
    else if (key == "log_every") cfg.train.log_every = to_int(sec, key, val);
    else if (key == "out_dir") cfg.train.out_dir = val;
    else if (key == "task") cfg.task = val;
    else if (key == "action_weight") cfg.train.action_weight = to_double(sec, key, val);
    else if (key == "unsup_weight") cfg.train.unsup_weight = to_double(sec, key, val);
    else if (key == "mode") cfg.train.mode = parse_fine_tune_mode(val);
    else unknown();
  } else if (sec == "motionnet") {
    if (key == "input_frames") cfg.model.input_frames = to_int(sec, key, val);
    else if (key == "base_channels") cfg.model.base_channels = to_int(sec, key, val);
    else if (key == "levels") cfg.model.levels = to_int(sec, key, val);
    else if (key == "small_disp") cfg.model.use_small_disp = to_bool(sec, key, val);
    else if (key == "cdc") cfg.model.use_cdc = to_bool(sec, key, val);
    else if (key == "multiscale") cfg.model.use_multiscale = to_bool(sec, key, val);
    else if (key == "activation_slope") cfg.model.activation_slope = to_double(sec, key, val);
    else if (key == "seed") cfg.model_seed = to_seed(sec, key, val);
    else unknown();
  } else if (sec == "loss") {
    if (key == "lambda1") cfg.loss.lambda1 = to_double(sec, key, val);
    else if (key == "lambda2") cfg.loss.lambda2 = to_double(sec, key, val);
    else if (key == "lambda3") cfg.loss.lambda3 = to_double(sec, key, val);
    else if (key == "delta1") cfg.loss.delta[0] = to_double(sec, key, val);
    else if (key == "delta2") cfg.loss.delta[1] = to_double(sec, key, val);
    else if (key == "delta3") cfg.loss.delta[2] = to_double(sec, key, val);
    else if (key == "delta4") cfg.loss.delta[3] = to_double(sec, key, val);
    else if (key == "delta5") cfg.loss.delta[4] = to_double(sec, key, val);
    else if (key == "epsilon") cfg.loss.epsilon = to_double(sec, key, val);
    else if (key == "alpha") cfg.loss.alpha = to_double(sec, key, val);
    else if (key == "ssim_window") cfg.loss.ssim_window = to_int(sec, key, val);
    else if (key == "ssim_stride") cfg.loss.ssim_stride = to_int(sec, key, val);
    else if (key == "c1") cfg.loss.c1 = to_double(sec, key, val);
    else if (key == "c2") cfg.loss.c2 = to_double(sec, key, val);
    else unknown();
  } else if (sec == "stacked") {
    if (key == "clip") cfg.stacked.norm.clip = to_double(sec, key, val);
    else if (key == "out_lo") cfg.stacked.norm.out_lo = to_double(sec, key, val);
    else if (key == "out_hi") cfg.stacked.norm.out_hi = to_double(sec, key, val);
    else if (key == "head_width") cfg.stacked.head_width = to_int(sec, key, val);
    else if (key == "classes") cfg.stacked.classes = to_int(sec, key, val);
    else if (key == "seed") cfg.stacked.seed = to_seed(sec, key, val);
    else unknown();
  } else if (sec == "data") {
    if (key == "preset") cfg.data.preset = val;
    else if (key == "count") cfg.data.count = to_int(sec, key, val);
    else if (key == "extent") cfg.data.extent = to_int(sec, key, val);
    else if (key == "frames") cfg.data.frames = to_int(sec, key, val);
    else if (key == "seed") cfg.data.seed = to_seed(sec, key, val);
    else if (key == "max_disp") cfg.data.max_disp = to_double(sec, key, val);
    else if (key == "noise_std") cfg.data.noise_std = to_double(sec, key, val);
    else unknown();
  } else {
    throw ConfigError("unknown config section [" + sec + "]");
  }
}

}  // namespace

void StackedConfig::validate() const {
  norm.validate();
  if (head_width < 1) throw ConfigError("stacked.head_width must be >= 1");
  if (classes < 2) throw ConfigError("stacked.classes must be >= 2");
}

void RunConfig::validate() const {
  if (task != "flow" && task != "stacked") {
    throw ConfigError("train.task must be \"flow\" or \"stacked\", got \"" + task + "\"");
  }
  train.validate();
  model.validate();
  loss.validate();
  stacked.validate();
  data.validate();
}

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ParseError(origin + ":" + std::to_string(lineno) + ": malformed section header \"" +
                         line + "\"");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": expected key = value, got \"" +
                       line + "\"");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    if (section.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": key \"" + key +
                        "\" outside any [section]");
    }
    apply(cfg, section, key, val);
  }
  return cfg;
}

RunConfig parse_run_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config_text(ss.str(), path);
}

std::string dump_run_config(const RunConfig& cfg) {
  std::ostringstream out;
  char buf[64];
  auto real = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto onoff = [](bool b) { return b ? "true" : "false"; };
  out << "[train]\n";
  out << "steps = " << cfg.train.steps << "\n";
  out << "batch_size = " << cfg.train.batch_size << "\n";
  out << "lr = " << real(cfg.train.lr) << "\n";
  out << "seed = " << cfg.train.seed << "\n";
  out << "checkpoint_every = " << cfg.train.checkpoint_every << "\n";
  out << "log_every = " << cfg.train.log_every << "\n";
  out << "out_dir = " << cfg.train.out_dir << "\n";
  out << "task = " << cfg.task << "\n";
  out << "action_weight = " << real(cfg.train.action_weight) << "\n";
  out << "unsup_weight = " << real(cfg.train.unsup_weight) << "\n";
  out << "mode = " << to_string(cfg.train.mode) << "\n";
  out << "\n[motionnet]\n";
  out << "input_frames = " << cfg.model.input_frames << "\n";
  out << "base_channels = " << cfg.model.base_channels << "\n";
  out << "levels = " << cfg.model.levels << "\n";
  out << "small_disp = " << onoff(cfg.model.use_small_disp) << "\n";
  out << "cdc = " << onoff(cfg.model.use_cdc) << "\n";
  out << "multiscale = " << onoff(cfg.model.use_multiscale) << "\n";
  out << "activation_slope = " << real(cfg.model.activation_slope) << "\n";
  out << "seed = " << cfg.model_seed << "\n";
  out << "\n[loss]\n";
  out << "lambda1 = " << real(cfg.loss.lambda1) << "\n";
  out << "lambda2 = " << real(cfg.loss.lambda2) << "\n";
  out << "lambda3 = " << real(cfg.loss.lambda3) << "\n";
  for (size_t i = 0; i < cfg.loss.delta.size(); ++i) {
    out << "delta" << (i + 1) << " = " << real(cfg.loss.delta[i]) << "\n";
  }
  out << "epsilon = " << real(cfg.loss.epsilon) << "\n";
  out << "alpha = " << real(cfg.loss.alpha) << "\n";
  out << "ssim_window = " << cfg.loss.ssim_window << "\n";
  out << "ssim_stride = " << cfg.loss.ssim_stride << "\n";
  out << "c1 = " << real(cfg.loss.c1) << "\n";
  out << "c2 = " << real(cfg.loss.c2) << "\n";
  out << "\n[stacked]\n";
  out << "clip = " << real(cfg.stacked.norm.clip) << "\n";
  out << "out_lo = " << real(cfg.stacked.norm.out_lo) << "\n";
  out << "out_hi = " << real(cfg.stacked.norm.out_hi) << "\n";
  out << "head_width = " << cfg.stacked.head_width << "\n";
  out << "classes = " << cfg.stacked.classes << "\n";
  out << "seed = " << cfg.stacked.seed << "\n";
  out << "\n[data]\n";
  out << "preset = " << cfg.data.preset << "\n";
  out << "count = " << cfg.data.count << "\n";
  out << "extent = " << cfg.data.extent << "\n";
  out << "frames = " << cfg.data.frames << "\n";
  out << "seed = " << cfg.data.seed << "\n";
  out << "max_disp = " << real(cfg.data.max_disp) << "\n";
  out << "noise_std = " << real(cfg.data.noise_std) << "\n";
  return out.str();
}

}  // namespace motionnet
