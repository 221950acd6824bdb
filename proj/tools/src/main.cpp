#include <cstdio>
#include <functional>

#include <CLI11.hpp>

#include "commands.hpp"
#include "freqbooth/errors.hpp"

using namespace freqbooth;
using namespace freqbooth::cli;

int main(int argc, char** argv) {
  CLI::App app{"freqbooth: toy dual-branch diffusion with identity injection and DCT control"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "freqbooth 0.1.0");

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Master seed")->capture_default_str();
  app.add_option("--out-dir", global.out_dir, "Output directory (FREQBOOTH_OUT overrides)")
      ->capture_default_str();
  app.add_option("--checkpoint", global.checkpoint_dir,
                 "Checkpoint directory (default <out-dir>/checkpoints)");
  app.add_option("--preset", global.preset, "Model preset")
      ->check(CLI::IsMember({"toy", "paper-scale", "tiny"}))
      ->capture_default_str();

  std::function<int(const Context&)> run;

  DataOptions data;
  auto* gen = app.add_subcommand("gen-data", "Generate the procedural identity dataset");
  gen->add_option("--n-identities", data.n_identities)->capture_default_str();
  gen->add_option("--n-contexts", data.n_contexts, "Default 4, capped by the preset");
  gen->add_option("--train-size", data.train_size)->capture_default_str();
  gen->add_option("--test-size", data.test_size)->capture_default_str();
  gen->add_option("--data-seed", data.data_seed)->capture_default_str();
  gen->callback([&] { run = [&](const Context& c) { return cmd_gen_data(c, data); }; });

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "Run one training stage (0 backbone, 1 identity, 2 control)");
  train->add_option("--stage", tr.stage)->required()->check(CLI::Range(0, 2));
  train->add_option("--steps", tr.steps, "Default 1500 / 2000 / 1000 for stages 0 / 1 / 2");
  train->add_option("--lr", tr.learning_rate, "Learning rate (default 1e-3; paper-scale 1e-5)");
  train->add_option("--batch", tr.batch_size)->capture_default_str();
  train->add_option("--lambda", tr.lambda)->capture_default_str();
  train->add_option("--mask", tr.mask, "Stage-2 mask")
      ->check(CLI::IsMember({"mini", "low", "mid", "high", "all"}))
      ->capture_default_str();
  train->add_option("--optimizer", tr.optimizer)->check(CLI::IsMember({"adam", "adamw"}));
  train->add_option("--data-seed", tr.data_seed)->capture_default_str();
  train->callback([&] { run = [&](const Context& c) { return cmd_train(c, tr); }; });

  SampleOptions sm;
  auto* sample = app.add_subcommand("sample", "Sample images with DDIM and classifier-free guidance");
  sample->add_option("--ref", sm.ref, "Reference image (PPM)");
  sample->add_option("--text-id", sm.text_id, "Text/context condition id");
  sample->add_option("--lambda", sm.lambda)->capture_default_str();
  sample->add_option("--guidance", sm.guidance)->capture_default_str();
  sample->add_option("--mask", sm.mask)
      ->check(CLI::IsMember({"none", "mini", "low", "mid", "high", "all"}))
      ->capture_default_str();
  sample->add_option("--steps", sm.steps)->capture_default_str();
  sample->add_option("--n", sm.n)->capture_default_str();
  sample->callback([&] { run = [&](const Context& c) { return cmd_sample(c, sm); }; });

  FilterOptions fl;
  auto* filter = app.add_subcommand("filter", "Apply a DCT band mask to an image's latent");
  filter->add_option("--input", fl.input)->required();
  filter->add_option("--mask", fl.mask)
      ->required()
      ->check(CLI::IsMember({"mini", "low", "mid", "high", "all"}));
  filter->add_option("--out", fl.out, "Output PPM (default <out-dir>/filter/filtered-<mask>.ppm)");
  filter->callback([&] { run = [&](const Context& c) { return cmd_filter(c, fl); }; });

  SweepOptions sw;
  auto* sweep = app.add_subcommand("sweep-lambda", "Identity metric across lambda values");
  sweep->add_option("--values", sw.values, "Comma-separated lambdas")->capture_default_str();
  sweep->add_option("--trials", sw.trials)->capture_default_str();
  sweep->add_option("--guidance", sw.guidance)->capture_default_str();
  sweep->add_option("--steps", sw.steps)->capture_default_str();
  sweep->add_option("--data-seed", sw.data_seed)->capture_default_str();
  sweep->callback([&] { run = [&](const Context& c) { return cmd_sweep_lambda(c, sw); }; });

  AblateOptions ab;
  auto* ablate = app.add_subcommand("ablate-masks", "Compare none/mini/low/mid/high control");
  ablate->add_option("--trials", ab.trials)->capture_default_str();
  ablate->add_option("--train-steps", ab.train_steps, "Stage-2 steps for missing checkpoints")
      ->capture_default_str();
  ablate->add_option("--guidance", ab.guidance)->capture_default_str();
  ablate->add_option("--steps", ab.steps)->capture_default_str();
  ablate->add_option("--data-seed", ab.data_seed)->capture_default_str();
  ablate->callback([&] { run = [&](const Context& c) { return cmd_ablate_masks(c, ab); }; });

  GradcheckOptionsCli gc;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of training gradients");
  grad->add_option("--stage", gc.stage, "0, 1, 2 or all")->capture_default_str();
  grad->add_option("--inject-fault", gc.fault, "Test hook: none or sign-flip")
      ->check(CLI::IsMember({"none", "sign-flip"}))
      ->capture_default_str();
  grad->callback([&] { run = [&](const Context& c) { return cmd_gradcheck(c, gc); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    return run(Context::resolve(global));
  } catch (const StateError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kMissingPrerequisite;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
}
