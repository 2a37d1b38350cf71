#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "auxvae/commands.hpp"
#include "auxvae/run_config.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  auxvae::cli::CliOverrides overrides;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("-c,--config", args.config_path,
                  "Run configuration JSON (defaults apply when omitted)")
      ->check(CLI::ExistingFile);
  sub->add_option("--data-dir", args.overrides.data_dir,
                  "Override paths.data_dir");
  sub->add_option("--out-dir", args.overrides.out_dir,
                  "Override paths.out_dir (also via AUXVAE_OUT_DIR)");
  sub->add_option("--checkpoint-dir", args.overrides.checkpoint_dir,
                  "Override paths.checkpoint_dir");
  sub->add_option("--seed", args.overrides.seed, "Override the global seed");
  sub->add_option("--epochs", args.overrides.epochs,
                  "Override train.max_epochs");
  sub->add_option("--folds", args.overrides.folds,
                  "Override train.max_folds (0 runs every fold)");
}

auxvae::cli::RunConfig load(const CommonArgs& args) {
  if (args.config_path.empty())
    return auxvae::cli::parse_run_config("", args.overrides);
  return auxvae::cli::load_run_config(args.config_path, args.overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hand-load estimation from gait with an auxiliary unloaded "
               "stream (training, evaluation, ablation)"};
  app.require_subcommand(1);

  CommonArgs args;
  auxvae::cli::PredictArgs predict_args;
  int gc_seeds = 3;
  double gc_tolerance = 1e-4;

  auto* synth = app.add_subcommand("synth", "Generate the synthetic dataset");
  add_common(synth, args);
  auto* train = app.add_subcommand(
      "train", "Cross-validated training of the configured wiring");
  add_common(train, args);
  auto* evaluate = app.add_subcommand(
      "evaluate", "Score saved checkpoints on their held-out participants");
  add_common(evaluate, args);
  auto* ablate = app.add_subcommand(
      "ablate", "Compare all configured wirings under one seed");
  add_common(ablate, args);

  auto* predict =
      app.add_subcommand("predict", "Predict a single trial from a checkpoint");
  add_common(predict, args);
  predict->add_option("--checkpoint", predict_args.checkpoint,
                      "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  predict->add_option("--participant", predict_args.participant,
                      "Participant id")
      ->required();
  predict->add_option("--trial", predict_args.trial, "Trial id")->required();
  predict->add_option("--latent-out", predict_args.latent_out,
                      "Write the latent posterior (dim,mu,sigma) to this CSV");
  predict->add_option(
      "--attention-out", predict_args.attention_out,
      "Write cross-attention scores (direction,head,row,col,score) to this CSV");

  auto* grad_check = app.add_subcommand(
      "grad-check",
      "Verify objective gradients against finite differences (double "
      "precision, miniature shapes)");
  grad_check->add_option("--seeds", gc_seeds, "Number of random restarts")
      ->check(CLI::PositiveNumber);
  grad_check->add_option("--tolerance", gc_tolerance,
                         "Maximum allowed relative error");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return auxvae::cli::cmd_synth(load(args));
    if (train->parsed()) return auxvae::cli::cmd_train(load(args));
    if (evaluate->parsed()) return auxvae::cli::cmd_evaluate(load(args));
    if (ablate->parsed()) return auxvae::cli::cmd_ablate(load(args));
    if (predict->parsed())
      return auxvae::cli::cmd_predict(load(args), predict_args);
    if (grad_check->parsed())
      return auxvae::cli::cmd_grad_check(gc_seeds, gc_tolerance);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
