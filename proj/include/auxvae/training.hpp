#pragma once

// Training: per-fold optimization and leave-one-participant-out runs.
//
// Every fold is hermetic. Windows are resampled to the model's lengths,
// normalization statistics are fit on the training participants only (and
// recorded in the report so leakage is auditable), parameters are freshly
// initialized from a seed derived from (run seed, fold, repeat), and epochs
// draw their shuffle and latent-noise streams from per-epoch derived seeds.
// Nothing about a fold depends on which other folds exist or on thread
// scheduling, so fold-level parallelism cannot change results.
//
// The learning rate steps down by `lr_decay` every `lr_step_epochs`; the KL
// weight follows the linear warmup in objective.hpp. A non-finite loss or
// gradient aborts the fold: parameters roll back to the end of the last
// finished epoch and the report carries the diagnostic.

#include <cstdint>
#include <string>
#include <vector>

#include "auxvae/adam.hpp"
#include "auxvae/checkpoint.hpp"
#include "auxvae/data.hpp"
#include "auxvae/inference.hpp"
#include "auxvae/model.hpp"
#include "auxvae/objective.hpp"
#include "auxvae/param_store.hpp"

namespace auxvae::train {

struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 128;
  int max_epochs = 500;
  int lr_step_epochs = 100;
  double lr_decay = 0.1;
  double weight_decay = 1e-4;
  double warmup_frac = 0.5;   // fraction of epochs to anneal beta over
  int num_z_samples = 1;
  int grad_chunk = 8;         // items per loss graph; also the set of windows
                              // batch norm normalizes together
  int repeats = 1;
  int num_threads = 0;        // 0: hardware concurrency
  int max_folds = 0;          // 0: every participant; >0 caps a sweep
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double beta = 0.0;
  objective::LossBreakdown loss;
};

struct TrainReport {
  std::string setting_name;
  std::string held_out;
  int fold_index = 0;
  int repeat = 0;
  std::vector<EpochStats> epochs;
  double wall_seconds = 0.0;  // diagnostic only, never serialized
  bool aborted = false;
  std::string abort_reason;

  double test_mae = 0.0;
  double test_accuracy = 0.0;
  bool has_style = false;
  bool evaluated = false;
  std::string checkpoint_path;

  // Leakage audit trail: participants whose windows fed the normalization
  // statistics, and participants whose trials appeared in training batches.
  std::vector<std::string> stats_participants;
  std::vector<std::string> batch_participants;
};

struct RunContext {
  std::string config_hash;
  std::string code_version;
  std::string checkpoint_dir;  // empty: keep checkpoints in memory only
  std::string resume_from;     // empty: fresh start
};

struct FoldOutcome {
  TrainReport report;
  nn::ParamStore<float> store;
  nn::AdamState<float> adam;
  data::NormalizationStats stats;
};

FoldOutcome train_fold(const std::vector<data::ParticipantRecord>& dataset,
                       const data::FoldSplit& fold, int fold_index, int repeat,
                       const model::ModelConfig& mcfg, const TrainConfig& tcfg,
                       const infer::InferenceConfig& icfg,
                       const RunContext& ctx);

struct LopoSummary {
  double mae_mean = 0.0;
  double mae_std = 0.0;
  double acc_mean = 0.0;
  double acc_std = 0.0;
  bool has_style = false;
  int completed_runs = 0;
  int aborted_runs = 0;
  std::vector<TrainReport> reports;  // fold-major, repeat-minor order
};

// Trains folds x repeats (parallel across a worker pool) and aggregates
// held-out metrics with equal weight per run. A failed run is recorded as
// aborted and excluded from the aggregates; sibling runs continue.
LopoSummary run_lopo(const std::vector<data::ParticipantRecord>& dataset,
                     const model::ModelConfig& mcfg, const TrainConfig& tcfg,
                     const infer::InferenceConfig& icfg, const RunContext& ctx);

}  // namespace auxvae::train
