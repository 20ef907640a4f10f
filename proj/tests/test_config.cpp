#include <string>

#include "doctest.h"
#include "motionnet/config.hpp"
#include "motionnet/errors.hpp"
#include "motionnet/stacked.hpp"

using namespace motionnet;

TEST_SUITE("config") {

TEST_CASE("empty text yields the documented defaults") {
  RunConfig cfg = parse_run_config_text("", "mem");
  CHECK(cfg.task == "flow");
  CHECK(cfg.train.steps == 100);
  CHECK(cfg.train.batch_size == 4);
  CHECK(cfg.train.lr == 1e-4);
  CHECK(cfg.model.input_frames == 11);
  CHECK(cfg.model.levels == 6);
  CHECK(cfg.model.use_small_disp);
  CHECK(cfg.model_seed == 1234);
  CHECK(cfg.loss.lambda3 == 0.16);
  CHECK(cfg.loss.delta[0] == 0.32);
  CHECK(cfg.stacked.norm.clip == 20.0);
  CHECK(cfg.stacked.classes == 5);
  CHECK(cfg.data.preset == "translate");
  cfg.model.input_frames = 2;  // default 11 frames at 64x64 is fine
  cfg.validate();
}

TEST_CASE("a full file parses into every field") {
  const std::string text = R"(# training setup
[train]
steps = 250
batch_size = 2
lr = 0.001
seed = 9
checkpoint_every = 50
log_every = 10
out_dir = /tmp/mn_run
task = stacked
action_weight = 2.0
unsup_weight = 0.25
mode = joint

[motionnet]
input_frames = 3
base_channels = 8
levels = 4
small_disp = false
cdc = off
multiscale = true
activation_slope = 0.2
seed = 77

[loss]
lambda1 = 0.5
lambda2 = 0.75
lambda3 = 0.0
delta1 = 0.4
delta5 = 0.001
epsilon = 0.01
alpha = 0.5
ssim_window = 4
ssim_stride = 4

[stacked]
clip = 10
out_lo = 0
out_hi = 255
head_width = 16
classes = 5
seed = 5

[data]
preset = clips
count = 32
extent = 32
frames = 3
seed = 13
max_disp = 4.5
noise_std = 0.01
)";
  RunConfig cfg = parse_run_config_text(text, "mem");
  CHECK(cfg.train.steps == 250);
  CHECK(cfg.train.lr == 0.001);
  CHECK(cfg.train.out_dir == "/tmp/mn_run");
  CHECK(cfg.task == "stacked");
  CHECK(cfg.train.mode == FineTuneMode::JointLoss);
  CHECK(cfg.train.action_weight == 2.0);
  CHECK(cfg.train.unsup_weight == 0.25);
  CHECK(cfg.model.input_frames == 3);
  CHECK_FALSE(cfg.model.use_small_disp);
  CHECK_FALSE(cfg.model.use_cdc);       // "off" is a valid false
  CHECK(cfg.model.activation_slope == 0.2);
  CHECK(cfg.model_seed == 77);
  CHECK(cfg.loss.lambda2 == 0.75);
  CHECK(cfg.loss.delta[0] == 0.4);
  CHECK(cfg.loss.delta[1] == 0.08);  // untouched default
  CHECK(cfg.loss.delta[4] == 0.001);
  CHECK(cfg.loss.ssim_window == 4);
  CHECK(cfg.stacked.norm.clip == 10.0);
  CHECK(cfg.stacked.head_width == 16);
  CHECK(cfg.stacked.seed == 5);
  CHECK(cfg.data.preset == "clips");
  CHECK(cfg.data.max_disp == 4.5);
  cfg.validate();
}

TEST_CASE("unknown keys and sections name themselves") {
  CHECK_THROWS_WITH_AS(parse_run_config_text("[train]\nmomentum = 0.9\n", "mem"),
                       doctest::Contains("unknown config key [train] momentum"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config_text("[optimizer]\nlr = 1\n", "mem"),
                       doctest::Contains("unknown config section [optimizer]"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config_text("[data]\npreset = translate\nrotate = yes\n", "mem"),
                       doctest::Contains("[data] rotate"), ConfigError);
}

TEST_CASE("bad values report section, key, and the offending text") {
  CHECK_THROWS_WITH_AS(parse_run_config_text("[train]\nsteps = soon\n", "mem"),
                       doctest::Contains("[train] steps"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config_text("[train]\nlr = fast\n", "mem"),
                       doctest::Contains("\"fast\""), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config_text("[motionnet]\ncdc = maybe\n", "mem"),
                       doctest::Contains("boolean"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config_text("[train]\nmode = sideways\n", "mem"),
                       doctest::Contains("sideways"), ConfigError);
  // Trailing garbage after a number is not silently dropped.
  CHECK_THROWS_AS(parse_run_config_text("[train]\nsteps = 12x\n", "mem"), ConfigError);
}

TEST_CASE("syntax errors carry file and line") {
  CHECK_THROWS_WITH_AS(parse_run_config_text("[train]\nsteps\n", "conf.ini"),
                       doctest::Contains("conf.ini:2"), ParseError);
  CHECK_THROWS_WITH_AS(parse_run_config_text("\n\n[train\nsteps = 1\n", "conf.ini"),
                       doctest::Contains("conf.ini:3"), ParseError);
  CHECK_THROWS_WITH_AS(parse_run_config_text("[train]\n = 5\n", "conf.ini"),
                       doctest::Contains("conf.ini:2"), ParseError);
  CHECK_THROWS_WITH_AS(parse_run_config_text("steps = 1\n", "conf.ini"),
                       doctest::Contains("outside any [section]"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_file("/nonexistent/config.ini"), InputError);
}

TEST_CASE("comments, blanks, and whitespace are tolerated") {
  const std::string text =
      "; leading comment\n"
      "\n"
      "[ train ]\n"
      "  steps   =   42  \n"
      "# another comment\n"
      "log_every = 0\n";
  RunConfig cfg = parse_run_config_text(text, "mem");
  CHECK(cfg.train.steps == 42);
  CHECK(cfg.train.log_every == 0);
}

TEST_CASE("later duplicates win") {
  RunConfig cfg = parse_run_config_text("[train]\nsteps = 10\nsteps = 20\n", "mem");
  CHECK(cfg.train.steps == 20);
}

TEST_CASE("dump -> parse -> dump is a fixpoint") {
  RunConfig cfg = parse_run_config_text(
      "[train]\nlr = 0.12345678901234567\nsteps = 7\n[motionnet]\nlevels = 3\n"
      "[loss]\nalpha = 0.47\n[data]\nmax_disp = 2.25\n",
      "mem");
  const std::string d1 = dump_run_config(cfg);
  RunConfig cfg2 = parse_run_config_text(d1, "dump");
  const std::string d2 = dump_run_config(cfg2);
  CHECK(d1 == d2);
  CHECK(cfg2.train.lr == cfg.train.lr);  // %.17g keeps every bit
  CHECK(cfg2.train.steps == 7);
  CHECK(cfg2.model.levels == 3);
}

TEST_CASE("validate() rejects cross-field nonsense") {
  RunConfig cfg = parse_run_config_text("", "mem");
  cfg.model.input_frames = 2;
  cfg.validate();  // baseline is fine

  RunConfig bad = cfg;
  bad.task = "segmentation";
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.train.steps = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.train.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.loss.alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.data.extent = 4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.stacked.norm.clip = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

}  // TEST_SUITE
