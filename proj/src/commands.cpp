#include "auxvae/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "auxvae/ablation.hpp"
#include "auxvae/checkpoint.hpp"
#include "auxvae/dataset_io.hpp"
#include "auxvae/grad_check.hpp"
#include "auxvae/inference.hpp"
#include "auxvae/objective.hpp"
#include "auxvae/rng.hpp"
#include "auxvae/synth.hpp"
#include "auxvae/training.hpp"
#include "json.hpp"

namespace auxvae::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Shortest exact decimal: artifacts must be byte-identical across runs and
// lossless to reparse.
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("short write: " + path);
}

std::string artifact_stamp(const RunConfig& cfg) {
  return "# config_hash=" + cfg.config_hash + " seed=" +
         std::to_string(cfg.seed) + " code_version=" + kCodeVersion + "\n";
}

json stamp_json(const RunConfig& cfg) {
  return {{"config_hash", cfg.config_hash},
          {"seed", cfg.seed},
          {"code_version", kCodeVersion}};
}

// The channel and style counts are properties of the dataset, not knobs.
model::ModelConfig resolved_model(const RunConfig& cfg,
                                  const data::DatasetMeta& meta) {
  model::ModelConfig m = cfg.model;
  m.num_channels = meta.layout.num_channels;
  m.num_styles = meta.num_styles;
  m.validate();
  return m;
}

data::NormalizationStats stats_from_store(const nn::ParamStore<float>& store) {
  if (!store.has_buffer("norm.mean") || !store.has_buffer("norm.std"))
    throw std::runtime_error(
        "checkpoint carries no normalization statistics (norm.mean/norm.std)");
  auto mean = store.buffer("norm.mean");
  auto sd = store.buffer("norm.std");
  data::NormalizationStats s;
  s.mean.assign(mean->val.begin(), mean->val.end());
  s.stddev.assign(sd->val.begin(), sd->val.end());
  return s;
}

const data::ParticipantRecord& find_participant(
    const std::vector<data::ParticipantRecord>& records,
    const std::string& id) {
  for (const auto& r : records)
    if (r.participant_id == id) return r;
  throw std::runtime_error("participant not in dataset: " + id);
}

train::RunContext run_context(const RunConfig& cfg) {
  train::RunContext ctx;
  ctx.config_hash = cfg.config_hash;
  ctx.code_version = kCodeVersion;
  ctx.checkpoint_dir = cfg.paths.checkpoint_dir;
  return ctx;
}

void append_metrics_rows(std::string& csv, const train::TrainReport& r) {
  for (const auto& es : r.epochs) {
    csv += r.setting_name + "," + std::to_string(r.fold_index) + "," +
           std::to_string(r.repeat) + "," + r.held_out + "," +
           std::to_string(es.epoch) + "," + fmt(es.lr) + "," + fmt(es.beta) +
           "," + fmt(es.loss.recon_mse) + "," + fmt(es.loss.style_ce) + "," +
           fmt(es.loss.load_mae) + "," + fmt(es.loss.kl) + "," +
           fmt(es.loss.total) + "\n";
  }
}

json run_row(const train::TrainReport& r) {
  // file name only: the artifact must not change with the output location
  json row = {{"fold", r.fold_index},
              {"repeat", r.repeat},
              {"held_out", r.held_out},
              {"aborted", r.aborted},
              {"checkpoint",
               fs::path(r.checkpoint_path).filename().string()}};
  if (r.aborted) row["abort_reason"] = r.abort_reason;
  if (r.evaluated) {
    row["mae_lbs"] = r.test_mae;
    if (r.has_style)
      row["style_accuracy"] = r.test_accuracy;
    else
      row["style_accuracy"] = nullptr;
  }
  return row;
}

void warn_aborted(const train::LopoSummary& summary) {
  for (const auto& r : summary.reports)
    if (r.aborted)
      std::fprintf(stderr, "warning: %s fold %d repeat %d aborted: %s\n",
                   r.setting_name.c_str(), r.fold_index, r.repeat,
                   r.abort_reason.c_str());
}

json summarize(const train::LopoSummary& s) {
  json out = {{"mae_mean", s.mae_mean},
              {"mae_std", s.mae_std},
              {"completed_runs", s.completed_runs},
              {"aborted_runs", s.aborted_runs}};
  if (s.has_style) {
    out["accuracy_mean"] = s.acc_mean;
    out["accuracy_std"] = s.acc_std;
  } else {
    out["accuracy_mean"] = nullptr;
    out["accuracy_std"] = nullptr;
  }
  return out;
}

constexpr const char* kMetricsHeader =
    "setting,fold,repeat,held_out,epoch,lr,beta,recon_mse,style_ce,load_mae,"
    "kl,total\n";

}  // namespace

int cmd_synth(const RunConfig& cfg) {
  auto records =
      synth::generate_dataset(cfg.synth, cfg.layout, cfg.synth_window_steps);
  data::DatasetMeta meta;
  meta.code_version = kCodeVersion;
  meta.config_hash = cfg.config_hash;
  meta.seed = cfg.seed;
  meta.layout = cfg.layout;
  meta.num_styles = cfg.synth.num_styles;
  meta.styles = data::style_names(cfg.synth.num_styles);
  data::write_dataset(cfg.paths.data_dir, records, meta);

  std::size_t trials = 0;
  for (const auto& r : records) trials += r.trials.size();
  std::printf("synth: %zu participants, %zu trials -> %s\n", records.size(),
              trials, cfg.paths.data_dir.c_str());
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  auto ds = data::load_dataset(cfg.paths.data_dir);
  auto m = resolved_model(cfg, ds.meta);
  fs::create_directories(cfg.paths.out_dir);
  fs::create_directories(cfg.paths.checkpoint_dir);

  auto summary =
      train::run_lopo(ds.records, m, cfg.train, cfg.inference, run_context(cfg));
  warn_aborted(summary);

  std::string csv = artifact_stamp(cfg) + kMetricsHeader;
  for (const auto& r : summary.reports) append_metrics_rows(csv, r);
  write_file(cfg.paths.out_dir + "/metrics.csv", csv);

  json doc = stamp_json(cfg);
  doc["setting"] = m.setting.name;
  doc["summary"] = summarize(summary);
  json runs = json::array();
  for (const auto& r : summary.reports) runs.push_back(run_row(r));
  doc["runs"] = runs;
  write_file(cfg.paths.out_dir + "/summary.json", doc.dump(2) + "\n");

  std::printf("train: %s mae %.4f +/- %.4f", m.setting.name.c_str(),
              summary.mae_mean, summary.mae_std);
  if (summary.has_style)
    std::printf(", style accuracy %.4f +/- %.4f", summary.acc_mean,
                summary.acc_std);
  std::printf(" over %d runs (%d aborted)\n", summary.completed_runs,
              summary.aborted_runs);
  std::printf("train: wrote %s/metrics.csv and %s/summary.json\n",
              cfg.paths.out_dir.c_str(), cfg.paths.out_dir.c_str());
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  auto ds = data::load_dataset(cfg.paths.data_dir);
  if (!fs::is_directory(cfg.paths.checkpoint_dir))
    throw std::runtime_error("no checkpoint directory: " +
                             cfg.paths.checkpoint_dir);
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(cfg.paths.checkpoint_dir)) {
    auto name = entry.path().filename().string();
    if (name.rfind("ckpt_", 0) == 0 && name.size() > 4 &&
        name.substr(name.size() - 4) == ".bin")
      names.push_back(name);
  }
  if (names.empty())
    throw std::runtime_error("no checkpoints under " +
                             cfg.paths.checkpoint_dir);
  std::sort(names.begin(), names.end());
  fs::create_directories(cfg.paths.out_dir);

  std::string csv = artifact_stamp(cfg) +
                    "checkpoint,setting,held_out,participant,trial,load_true,"
                    "load_pred,style_true,style_pred\n";
  json per_ckpt = json::array();
  // per setting: list of (mae, accuracy) for the aggregate
  std::map<std::string, std::vector<std::pair<double, double>>> by_setting;

  for (const auto& name : names) {
    auto ck = ckpt::load_checkpoint(cfg.paths.checkpoint_dir + "/" + name,
                                    cfg.config_hash);
    model::ModelConfig m = resolved_model(cfg, ds.meta);
    m.setting = model::setting_by_name(ck.meta.setting_name);
    auto stats = stats_from_store(ck.store);
    const auto& held = find_participant(ds.records, ck.meta.held_out);

    std::uint64_t seed =
        derive_seed(derive_seed(cfg.seed, "cli_eval"), name);
    auto report = infer::evaluate(ck.store, m, {held}, stats, cfg.inference,
                                  seed);
    for (const auto& t : report.trials) {
      csv += name + "," + m.setting.name + "," + ck.meta.held_out + "," +
             t.participant_id + "," + t.trial_id + "," + fmt(t.load_true) +
             "," + fmt(t.load_pred) + "," + std::to_string(t.style_true) +
             "," + std::to_string(t.style_pred) + "\n";
    }
    json row = {{"checkpoint", name},
                {"setting", m.setting.name},
                {"held_out", ck.meta.held_out},
                {"num_trials", report.trials.size()},
                {"mae_lbs", report.mae_lbs}};
    if (report.has_style)
      row["style_accuracy"] = report.style_accuracy;
    else
      row["style_accuracy"] = nullptr;
    per_ckpt.push_back(row);
    by_setting[m.setting.name].push_back(
        {report.mae_lbs, report.has_style ? report.style_accuracy : 0.0});
  }
  write_file(cfg.paths.out_dir + "/predictions.csv", csv);

  json agg;
  for (const auto& [setting, vals] : by_setting) {
    double mae = 0.0, acc = 0.0;
    for (const auto& [m_, a_] : vals) {
      mae += m_;
      acc += a_;
    }
    int n = static_cast<int>(vals.size());
    bool styled = model::setting_by_name(setting).use_aux_output;
    agg[setting] = {{"mae_mean", mae / n},
                    {"accuracy_mean", styled ? json(acc / n) : json(nullptr)},
                    {"checkpoints", n}};
  }
  json doc = stamp_json(cfg);
  doc["checkpoints"] = per_ckpt;
  doc["by_setting"] = agg;
  write_file(cfg.paths.out_dir + "/eval_summary.json", doc.dump(2) + "\n");

  std::printf("evaluate: %zu checkpoints -> %s/predictions.csv\n",
              names.size(), cfg.paths.out_dir.c_str());
  return 0;
}

int cmd_ablate(const RunConfig& cfg) {
  auto ds = data::load_dataset(cfg.paths.data_dir);
  auto base = resolved_model(cfg, ds.meta);
  fs::create_directories(cfg.paths.out_dir);
  fs::create_directories(cfg.paths.checkpoint_dir);

  auto rows = ablate::run_ablation(ds.records, base, cfg.train, cfg.inference,
                                   run_context(cfg), cfg.ablation);

  std::string table =
      artifact_stamp(cfg) +
      "setting,mae_mean,mae_std,accuracy_mean,accuracy_std,completed_runs,"
      "aborted_runs\n";
  std::string runs_csv = artifact_stamp(cfg) +
                         "setting,fold,repeat,held_out,aborted,mae_lbs,"
                         "style_accuracy\n";
  for (const auto& row : rows) {
    const auto& s = row.summary;
    warn_aborted(s);
    table += row.setting_name + "," + fmt(s.mae_mean) + "," + fmt(s.mae_std);
    if (s.has_style)
      table += "," + fmt(s.acc_mean) + "," + fmt(s.acc_std);
    else
      table += ",,";
    table += "," + std::to_string(s.completed_runs) + "," +
             std::to_string(s.aborted_runs) + "\n";
    for (const auto& r : s.reports) {
      runs_csv += row.setting_name + "," + std::to_string(r.fold_index) + "," +
                  std::to_string(r.repeat) + "," + r.held_out + "," +
                  (r.aborted ? "1" : "0");
      if (r.evaluated) {
        runs_csv += "," + fmt(r.test_mae);
        runs_csv += r.has_style ? "," + fmt(r.test_accuracy) : std::string(",");
      } else {
        runs_csv += ",,";
      }
      runs_csv += "\n";
    }
    std::printf("ablate: %-12s mae %.4f +/- %.4f", row.setting_name.c_str(),
                s.mae_mean, s.mae_std);
    if (s.has_style)
      std::printf(", style accuracy %.4f +/- %.4f", s.acc_mean, s.acc_std);
    std::printf(" (%d runs)\n", s.completed_runs);
  }
  write_file(cfg.paths.out_dir + "/ablation.csv", table);
  write_file(cfg.paths.out_dir + "/ablation_runs.csv", runs_csv);
  std::printf("ablate: wrote %s/ablation.csv\n", cfg.paths.out_dir.c_str());
  return 0;
}

int cmd_predict(const RunConfig& cfg, const PredictArgs& args) {
  auto ds = data::load_dataset(cfg.paths.data_dir);
  auto ck = ckpt::load_checkpoint(args.checkpoint, cfg.config_hash);
  model::ModelConfig m = resolved_model(cfg, ds.meta);
  m.setting = model::setting_by_name(ck.meta.setting_name);
  auto stats = stats_from_store(ck.store);

  const auto& rec = find_participant(ds.records, args.participant);
  const data::TrialSample* trial = nullptr;
  for (const auto& t : rec.trials)
    if (t.trial_id == args.trial) trial = &t;
  if (!trial)
    throw std::runtime_error("trial not in dataset: " + args.participant +
                             "/" + args.trial);

  auto x = data::apply_normalization(
      data::resample_to_length(trial->loaded_gait, m.input_len), stats);
  auto aux = data::apply_normalization(
      data::resample_to_length(rec.baseline_gait, m.aux_len), stats);
  auto pred =
      infer::predict_load(ck.store, m, x, aux, cfg.inference,
                          derive_seed(cfg.seed, "cli_predict"));

  std::string header = "participant,trial,load_true,load_pred,style_true";
  std::string row = args.participant + "," + args.trial + "," +
                    fmt(trial->load_lbs) + "," + fmt(pred.load_lbs) + "," +
                    std::to_string(trial->style.index);
  for (std::size_t l = 0; l < pred.style_probs.size(); ++l) {
    header += ",prob_" + ds.meta.styles[l];
    row += "," + fmt(pred.style_probs[l]);
  }
  std::printf("%s\n%s\n", header.c_str(), row.c_str());

  if (!args.latent_out.empty() || !args.attention_out.empty()) {
    auto xt = infer::window_to_tensor(x);
    nn::Tensor<float> xa;
    if (m.setting.use_aux_input) xa = infer::window_to_tensor(aux);
    auto enc = model::encode(ck.store, m, xt, xa, /*train=*/false,
                             /*want_trace=*/true);
    if (!args.latent_out.empty()) {
      std::string csv = artifact_stamp(cfg) + "dim,mu,sigma\n";
      for (int i = 0; i < enc.mu->cols; ++i)
        csv += std::to_string(i) + "," +
               fmt(static_cast<double>(enc.mu->val[i])) + "," +
               fmt(static_cast<double>(enc.sigma->val[i])) + "\n";
      write_file(args.latent_out, csv);
      std::printf("predict: wrote latent posterior to %s\n",
                  args.latent_out.c_str());
    }
    if (!args.attention_out.empty()) {
      if (m.setting.fusion != model::Fusion::CrossAttention)
        throw std::runtime_error(
            "attention dump requires a cross-attention wiring, got " +
            m.setting.name);
      std::string csv = artifact_stamp(cfg) + "direction,head,row,col,score\n";
      auto dump = [&](const char* dir,
                      const std::vector<nn::Tensor<float>>& heads) {
        for (std::size_t h = 0; h < heads.size(); ++h) {
          const auto& t = heads[h];
          for (int r = 0; r < t->rows; ++r)
            for (int c = 0; c < t->cols; ++c)
              csv += std::string(dir) + "," + std::to_string(h) + "," +
                     std::to_string(r) + "," + std::to_string(c) + "," +
                     fmt(static_cast<double>(
                         t->val[static_cast<std::size_t>(r) * t->cols + c])) +
                     "\n";
        }
      };
      dump("loaded_to_aux", enc.trace.scores);
      dump("aux_to_loaded", enc.trace.scores_aux);
      write_file(args.attention_out, csv);
      std::printf("predict: wrote attention scores to %s\n",
                  args.attention_out.c_str());
    }
  }
  return 0;
}

int cmd_grad_check(int num_seeds, double tolerance) {
  if (num_seeds < 1) throw std::invalid_argument("grad-check: need >= 1 seed");
  model::ModelConfig cfg;
  cfg.enc.tcn_channels = {5, 4};
  cfg.enc.kernel_size = 3;
  cfg.enc.pool_window = 2;
  cfg.enc.attn_dim = 6;
  cfg.enc.num_heads = 2;
  cfg.enc.head_key_dim = 3;
  cfg.enc.head_value_dim = 3;
  cfg.enc.latent_dim = 4;
  cfg.num_channels = 3;
  cfg.num_styles = 2;
  cfg.input_len = 16;
  cfg.aux_len = 16;
  cfg.head_hidden = 5;
  cfg.validate();

  bool ok = true;
  for (int s = 0; s < num_seeds; ++s) {
    std::uint64_t base = derive_seed(0x9e3779b97f4a7c15ull, s);
    nn::ParamStore<double> store(derive_seed(base, "params"));
    model::init_params(store, cfg);

    Rng data_rng(derive_seed(base, "data"));
    std::vector<objective::BatchItem<double>> batch(2);
    for (auto& item : batch) {
      item.x = nn::tensor<double>(cfg.input_len, cfg.num_channels);
      item.x_aux = nn::tensor<double>(cfg.aux_len, cfg.num_channels);
      for (auto& v : item.x->val) v = data_rng.uniform(-1.0, 1.0);
      for (auto& v : item.x_aux->val) v = data_rng.uniform(-1.0, 1.0);
      item.load_lbs = data_rng.uniform(5.0, 50.0);
      item.style = static_cast<int>(data_rng.uniform_int(cfg.num_styles));
    }

    std::uint64_t noise = derive_seed(base, "noise");
    auto f = [&](nn::ParamStore<double>& st) {
      Rng rng(noise);  // identical draws on every re-evaluation
      return objective::elbo_loss(batch, st, cfg, 0.7, rng, 1).total;
    };
    auto report =
        nn::grad_check<double>(f, store, 2, derive_seed(base, "coords"));
    bool pass = report.max_rel_err < tolerance;
    ok = ok && pass;
    std::printf("grad-check: seed %d: max rel err %.3e at %s[%d] over %d "
                "coords %s\n",
                s, report.max_rel_err, report.worst_param.c_str(),
                report.worst_coord, report.coords_checked,
                pass ? "(ok)" : "(FAIL)");
  }
  std::printf("grad-check: %s (tolerance %.1e)\n",
              ok ? "all seeds passed" : "FAILED", tolerance);
  return ok ? 0 : 1;
}

}  // namespace auxvae::cli
