#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "motionnet/commands.hpp"

int main(int argc, char** argv) {
  using namespace motionnet;
  CLI::App app{"motionnet: desk-scale unsupervised optical flow and stacked action recognition"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "train the flow network or the stacked classifier");
  t->add_option("config", train.config_path, "INI run config")->required();
  t->add_option("--resume", train.resume, "checkpoint to continue from (restores the optimizer)");
  t->add_option("--init-from", train.init_from, "checkpoint providing initial weights only");

  InferArgs infer;
  auto* i = app.add_subcommand("infer", "run flow inference over a directory of frame_*.png");
  i->add_option("checkpoint", infer.checkpoint, "trained checkpoint")->required();
  i->add_option("frames", infer.frames_dir, "directory with frame_*.png")->required();
  i->add_option("out", infer.out_dir, "output directory")->required();
  i->add_flag("--png", infer.write_png, "also write flow color visualizations");
  bool no_flo = false;
  i->add_flag("--no-flo", no_flo, "skip writing .flo files");
  i->add_option("--repeats", infer.timing_repeats, "timed forward repeats for the speed report");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "evaluate flow quality on a synthetic stream");
  e->add_option("config", eval.config_path, "INI run config (the [data] section is used)")
      ->required();
  e->add_option("--checkpoint", eval.checkpoint, "trained checkpoint");
  e->add_flag("--json", eval.json, "machine-readable output");
  e->add_flag("--oracle", eval.oracle, "score ground truth against itself");

  AblateArgs ablate;
  auto* a = app.add_subcommand("ablate", "train architecture/loss variants and compare EPE");
  a->add_option("config", ablate.config_path, "INI run config used as the baseline")->required();
  a->add_option("--row", ablate.rows, "variant name (repeatable); default: all six");
  a->add_flag("--grid", ablate.grid, "sweep all 2^5 toggle combinations instead");

  VizArgs viz;
  auto* v = app.add_subcommand("viz", "render a .flo file as a color PNG");
  v->add_option("flo", viz.flo_path, "input .flo")->required();
  v->add_option("png", viz.png_path, "output .png")->required();
  v->add_option("--max", viz.max_mag, "fixed magnitude normalization (default: 99th percentile)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  if (t->parsed()) return cmd_train(train, std::cout, std::cerr);
  if (i->parsed()) {
    infer.write_flo = !no_flo;
    return cmd_infer(infer, std::cout, std::cerr);
  }
  if (e->parsed()) return cmd_eval(eval, std::cout, std::cerr);
  if (a->parsed()) return cmd_ablate(ablate, std::cout, std::cerr);
  if (v->parsed()) return cmd_viz(viz, std::cout, std::cerr);
  return kExitBadInput;
}
