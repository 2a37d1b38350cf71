#include "auxvae/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <thread>

#include "auxvae/objective.hpp"
#include "auxvae/ops.hpp"
#include "auxvae/rng.hpp"

namespace auxvae::train {

namespace {

using infer::window_to_tensor;

struct TrainItem {
  objective::BatchItem<float> batch;
  std::string participant_id;
};

std::vector<const data::ParticipantRecord*> select_records(
    const std::vector<data::ParticipantRecord>& dataset,
    const std::vector<std::string>& ids) {
  std::vector<const data::ParticipantRecord*> out;
  for (const auto& rec : dataset)
    if (std::find(ids.begin(), ids.end(), rec.participant_id) != ids.end())
      out.push_back(&rec);
  if (out.size() != ids.size())
    throw std::invalid_argument("train_fold: fold names unknown participants");
  return out;
}

// Normalization constants ride along in the checkpoint as buffers so a
// checkpoint alone suffices for prediction.
void store_norm_buffers(nn::ParamStore<float>& store,
                        const data::NormalizationStats& stats) {
  int c = static_cast<int>(stats.mean.size());
  auto mean = store.add_buffer("norm.mean", 1, c);
  auto sd = store.add_buffer("norm.std", 1, c);
  for (int i = 0; i < c; ++i) {
    mean->val[i] = static_cast<float>(stats.mean[i]);
    sd->val[i] = static_cast<float>(stats.stddev[i]);
  }
}

void check_norm_buffers(const nn::ParamStore<float>& store,
                        const data::NormalizationStats& stats) {
  auto mean = store.buffer("norm.mean");
  auto sd = store.buffer("norm.std");
  if (mean->val.size() != stats.mean.size())
    throw std::runtime_error("resume: channel count changed under checkpoint");
  for (std::size_t i = 0; i < stats.mean.size(); ++i)
    if (mean->val[i] != static_cast<float>(stats.mean[i]) ||
        sd->val[i] != static_cast<float>(stats.stddev[i]))
      throw std::runtime_error(
          "resume: normalization statistics do not match the training fold");
}

void copy_values(nn::ParamStore<float>& dst, const nn::ParamStore<float>& src) {
  for (const auto& [path, t] : src.params()) dst.param(path)->val = t->val;
  for (const auto& [path, t] : src.buffers()) dst.buffer(path)->val = t->val;
}

}  // namespace

void TrainConfig::validate() const {
  auto bad = [](const std::string& msg) {
    throw std::invalid_argument("TrainConfig: " + msg);
  };
  if (!(lr > 0.0)) bad("lr must be positive");
  if (batch_size < 1) bad("batch_size must be >= 1");
  if (max_epochs < 1) bad("max_epochs must be >= 1");
  if (lr_step_epochs < 1) bad("lr_step_epochs must be >= 1");
  if (!(lr_decay > 0.0) || lr_decay > 1.0) bad("lr_decay must be in (0, 1]");
  if (weight_decay < 0.0) bad("weight_decay must be >= 0");
  if (warmup_frac < 0.0 || warmup_frac > 1.0)
    bad("warmup_frac must be in [0, 1]");
  if (num_z_samples < 1) bad("num_z_samples must be >= 1");
  if (grad_chunk < 1) bad("grad_chunk must be >= 1");
  if (repeats < 1) bad("repeats must be >= 1");
  if (num_threads < 0) bad("num_threads must be >= 0");
  if (max_folds < 0) bad("max_folds must be >= 0");
}

FoldOutcome train_fold(const std::vector<data::ParticipantRecord>& dataset,
                       const data::FoldSplit& fold, int fold_index, int repeat,
                       const model::ModelConfig& mcfg, const TrainConfig& tcfg,
                       const infer::InferenceConfig& icfg,
                       const RunContext& ctx) {
  tcfg.validate();
  mcfg.validate();
  auto train_ptrs = select_records(dataset, fold.train_ids);
  auto test_ptrs = select_records(dataset, fold.test_ids);
  if (train_ptrs.empty())
    throw std::invalid_argument("train_fold: empty training split");

  std::vector<data::ParticipantRecord> train_records, test_records;
  for (auto* p : train_ptrs) train_records.push_back(*p);
  for (auto* p : test_ptrs) test_records.push_back(*p);

  FoldOutcome out;
  auto& report = out.report;
  report.setting_name = mcfg.setting.name;
  report.held_out = fold.held_out_participant;
  report.fold_index = fold_index;
  report.repeat = repeat;

  out.stats = data::fit_normalization(train_records);
  for (const auto& rec : train_records)
    report.stats_participants.push_back(rec.participant_id);

  // Cache input tensors once; graphs reference them as shared leaves.
  std::vector<TrainItem> items;
  for (const auto& rec : train_records) {
    auto aux = window_to_tensor(data::apply_normalization(
        data::resample_to_length(rec.baseline_gait, mcfg.aux_len), out.stats));
    for (const auto& trial : rec.trials) {
      TrainItem it;
      it.participant_id = trial.participant_id;
      it.batch.x = window_to_tensor(data::apply_normalization(
          data::resample_to_length(trial.loaded_gait, mcfg.input_len),
          out.stats));
      it.batch.x_aux = aux;
      it.batch.load_lbs = trial.load_lbs;
      it.batch.style = trial.style.index;
      items.push_back(std::move(it));
    }
  }
  if (items.empty())
    throw std::invalid_argument("train_fold: training split has no trials");
  {
    std::set<std::string> ids;
    for (const auto& it : items) ids.insert(it.participant_id);
    report.batch_participants.assign(ids.begin(), ids.end());
  }

  auto chain = [&](const char* label) {
    return derive_seed(
        derive_seed(derive_seed(tcfg.seed, label),
                    static_cast<std::uint64_t>(fold_index)),
        static_cast<std::uint64_t>(repeat));
  };
  std::uint64_t init_seed = chain("init");
  std::uint64_t shuffle_base = chain("shuffle");
  std::uint64_t latent_base = chain("latent");
  std::uint64_t eval_seed = chain("eval");

  int start_epoch = 0;
  if (ctx.resume_from.empty()) {
    out.store.set_seed(init_seed);
    model::init_params(out.store, mcfg);
    store_norm_buffers(out.store, out.stats);
  } else {
    auto ck = ckpt::load_checkpoint(ctx.resume_from, ctx.config_hash);
    if (ck.meta.setting_name != mcfg.setting.name)
      throw std::runtime_error("resume: checkpoint wiring is " +
                               ck.meta.setting_name + ", run expects " +
                               mcfg.setting.name);
    if (ck.meta.held_out != fold.held_out_participant)
      throw std::runtime_error("resume: checkpoint fold held out " +
                               ck.meta.held_out + ", run holds out " +
                               fold.held_out_participant);
    check_norm_buffers(ck.store, out.stats);
    out.store = std::move(ck.store);
    out.adam = std::move(ck.adam);
    start_epoch = ck.meta.next_epoch;
  }
  out.adam.weight_decay = static_cast<float>(tcfg.weight_decay);

  // Last finished epoch's state; divergence rolls back to it.
  nn::ParamStore<float> good_store = out.store.cast<float>();
  nn::AdamState<float> good_adam = out.adam;
  int good_epoch = start_epoch - 1;

  std::vector<int> order(items.size());
  auto wall_start = std::chrono::steady_clock::now();

  for (int epoch = start_epoch; epoch < tcfg.max_epochs; ++epoch) {
    double lr = tcfg.lr * std::pow(tcfg.lr_decay, epoch / tcfg.lr_step_epochs);
    double beta =
        objective::beta_schedule(epoch, tcfg.max_epochs, tcfg.warmup_frac);
    out.adam.lr = static_cast<float>(lr);

    Rng shuffle_rng(derive_seed(shuffle_base,
                                static_cast<std::uint64_t>(epoch)));
    Rng latent_rng(derive_seed(latent_base,
                               static_cast<std::uint64_t>(epoch)));
    // shuffle from the identity so the epoch's batch order is a pure
    // function of its seed; a resumed run then replays it exactly
    for (std::size_t i = 0; i < order.size(); ++i)
      order[i] = static_cast<int>(i);
    shuffle_rng.shuffle(order);

    objective::LossBreakdown sums;
    int seen = 0;
    try {
      int n = static_cast<int>(order.size());
      for (int bstart = 0; bstart < n; bstart += tcfg.batch_size) {
        int bend = std::min(bstart + tcfg.batch_size, n);
        int batch_n = bend - bstart;
        out.store.zero_grad();
        // each chunk is one loss graph, so it is also the set of windows a
        // batch-norm layer normalizes together; the chunk_n/batch_n seed
        // makes the accumulated gradient the batch-weighted chunk mean
        for (int cstart = bstart; cstart < bend; cstart += tcfg.grad_chunk) {
          int cend = std::min(cstart + tcfg.grad_chunk, bend);
          std::vector<objective::BatchItem<float>> chunk;
          for (int i = cstart; i < cend; ++i)
            chunk.push_back(items[order[i]].batch);
          auto graph = objective::elbo_loss(chunk, out.store, mcfg, beta,
                                            latent_rng, tcfg.num_z_samples);
          int chunk_n = cend - cstart;
          nn::backward(graph.total,
                       static_cast<float>(chunk_n) / static_cast<float>(batch_n));
          sums.recon_mse += graph.parts.recon_mse * chunk_n;
          sums.style_ce += graph.parts.style_ce * chunk_n;
          sums.load_mae += graph.parts.load_mae * chunk_n;
          sums.kl += graph.parts.kl * chunk_n;
          sums.total += graph.parts.total * chunk_n;
          seen += chunk_n;
        }
        nn::adam_step(out.store, out.adam);
      }
    } catch (const std::exception& ex) {
      copy_values(out.store, good_store);
      out.adam = good_adam;
      report.aborted = true;
      report.abort_reason =
          std::string(ex.what()) + " (epoch " + std::to_string(epoch) + ")";
      break;
    }

    EpochStats es;
    es.epoch = epoch;
    es.lr = lr;
    es.beta = beta;
    es.loss.recon_mse = sums.recon_mse / seen;
    es.loss.style_ce = sums.style_ce / seen;
    es.loss.load_mae = sums.load_mae / seen;
    es.loss.kl = sums.kl / seen;
    es.loss.beta = beta;
    es.loss.total = sums.total / seen;
    report.epochs.push_back(es);

    good_store = out.store.cast<float>();
    good_adam = out.adam;
    good_epoch = epoch;
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    wall_start)
          .count();
  report.has_style = mcfg.setting.use_aux_output;
  if (!report.aborted) {
    auto eval = infer::evaluate(out.store, mcfg, test_records, out.stats, icfg,
                                eval_seed);
    report.test_mae = eval.mae_lbs;
    report.test_accuracy = eval.style_accuracy;
    report.evaluated = true;
  }

  if (!ctx.checkpoint_dir.empty()) {
    char name[128];
    std::snprintf(name, sizeof(name), "/ckpt_%s_f%d_r%d.bin",
                  mcfg.setting.name.c_str(), fold_index, repeat);
    ckpt::CheckpointMeta meta;
    meta.code_version = ctx.code_version;
    meta.config_hash = ctx.config_hash;
    meta.setting_name = mcfg.setting.name;
    meta.held_out = fold.held_out_participant;
    meta.store_seed = out.store.seed();
    meta.next_epoch = report.aborted ? good_epoch + 1 : tcfg.max_epochs;
    report.checkpoint_path = ctx.checkpoint_dir + name;
    ckpt::save_checkpoint(report.checkpoint_path, out.store, out.adam, meta);
  }
  return out;
}

LopoSummary run_lopo(const std::vector<data::ParticipantRecord>& dataset,
                     const model::ModelConfig& mcfg, const TrainConfig& tcfg,
                     const infer::InferenceConfig& icfg,
                     const RunContext& ctx) {
  tcfg.validate();
  auto folds = data::lopo_splits(dataset);
  if (folds.empty()) throw std::invalid_argument("run_lopo: empty dataset");
  if (tcfg.max_folds > 0 &&
      tcfg.max_folds < static_cast<int>(folds.size()))
    folds.resize(tcfg.max_folds);

  struct Job {
    int fold_index;
    int repeat;
  };
  std::vector<Job> jobs;
  for (std::size_t f = 0; f < folds.size(); ++f)
    for (int r = 0; r < tcfg.repeats; ++r)
      jobs.push_back({static_cast<int>(f), r});

  RunContext fold_ctx = ctx;
  fold_ctx.resume_from.clear();  // resume targets a single fold, not a sweep

  std::vector<TrainReport> reports(jobs.size());
  std::vector<std::string> hard_errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      try {
        auto outcome =
            train_fold(dataset, folds[jobs[j].fold_index], jobs[j].fold_index,
                       jobs[j].repeat, mcfg, tcfg, icfg, fold_ctx);
        reports[j] = std::move(outcome.report);
      } catch (const std::exception& ex) {
        hard_errors[j] = ex.what();
      }
    }
  };

  unsigned threads = tcfg.num_threads > 0
                         ? static_cast<unsigned>(tcfg.num_threads)
                         : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t j = 0; j < jobs.size(); ++j)
    if (!hard_errors[j].empty())
      throw std::runtime_error("run_lopo: fold " +
                               std::to_string(jobs[j].fold_index) + " repeat " +
                               std::to_string(jobs[j].repeat) + ": " +
                               hard_errors[j]);

  LopoSummary summary;
  summary.has_style = mcfg.setting.use_aux_output;
  double mae_sum = 0.0, acc_sum = 0.0;
  for (const auto& r : reports) {
    if (r.aborted) {
      ++summary.aborted_runs;
      continue;
    }
    ++summary.completed_runs;
    mae_sum += r.test_mae;
    if (summary.has_style) acc_sum += r.test_accuracy;
  }
  if (summary.completed_runs > 0) {
    int n = summary.completed_runs;
    summary.mae_mean = mae_sum / n;
    summary.acc_mean = summary.has_style ? acc_sum / n : 0.0;
    double mae_var = 0.0, acc_var = 0.0;
    for (const auto& r : reports) {
      if (r.aborted) continue;
      mae_var += (r.test_mae - summary.mae_mean) * (r.test_mae - summary.mae_mean);
      if (summary.has_style)
        acc_var +=
            (r.test_accuracy - summary.acc_mean) * (r.test_accuracy - summary.acc_mean);
    }
    summary.mae_std = std::sqrt(mae_var / n);
    summary.acc_std = summary.has_style ? std::sqrt(acc_var / n) : 0.0;
  }
  summary.reports = std::move(reports);
  return summary;
}

}  // namespace auxvae::train
