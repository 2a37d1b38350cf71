#pragma once

// Subcommand implementations. Each takes a resolved RunConfig, reads and
// writes only under the configured paths, embeds (config hash, seed, code
// version) in every artifact, and returns a process exit code. Invalid
// inputs and missing or mismatched artifacts surface as exceptions; the CLI
// turns them into error messages.

#include <string>

#include "auxvae/run_config.hpp"

namespace auxvae::cli {

// Generates the synthetic dataset into paths.data_dir.
int cmd_synth(const RunConfig& cfg);

// Cross-validated training of the configured wiring: checkpoints into
// paths.checkpoint_dir, metrics.csv and summary.json into paths.out_dir.
int cmd_train(const RunConfig& cfg);

// Scores every checkpoint in paths.checkpoint_dir on its own held-out
// participant: predictions.csv and eval_summary.json into paths.out_dir.
int cmd_evaluate(const RunConfig& cfg);

// Trains every configured wiring under one seed and writes the comparison
// table (ablation.csv, per-run rows in ablation_runs.csv).
int cmd_ablate(const RunConfig& cfg);

struct PredictArgs {
  std::string checkpoint;
  std::string participant;
  std::string trial;
  std::string latent_out;     // optional: per-dimension posterior dump
  std::string attention_out;  // optional: attention score dump
};

// Predicts one trial and prints the row to stdout.
int cmd_predict(const RunConfig& cfg, const PredictArgs& args);

// Finite-difference verification of the whole objective's gradients at
// miniature shapes, in double precision. Nonzero exit on failure.
int cmd_grad_check(int num_seeds, double tolerance);

}  // namespace auxvae::cli
