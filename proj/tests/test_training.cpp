#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "auxvae/checkpoint.hpp"
#include "auxvae/data.hpp"
#include "auxvae/inference.hpp"
#include "auxvae/model.hpp"
#include "auxvae/synth.hpp"
#include "auxvae/training.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace auxvae;

namespace {

model::AblationSetting setting_by_name(const std::string& name) {
  for (const auto& s : model::registered_settings())
    if (s.name == name) return s;
  throw std::logic_error("unknown setting in test: " + name);
}

// Micro model sized to the 4-channel synthetic fixture below.
model::ModelConfig fixture_config(const std::string& setting = "full") {
  auto cfg = testutil::micro_config(setting_by_name(setting));
  cfg.num_channels = 4;
  cfg.validate();
  return cfg;
}

std::vector<data::ParticipantRecord> fixture_dataset(int participants = 3) {
  synth::SynthConfig scfg;
  scfg.num_participants = participants;
  scfg.trials_per_condition = 1;
  scfg.load_levels_lbs = {10.0, 30.0};
  scfg.num_styles = 2;
  scfg.seed = 7;
  data::SensorLayout layout;
  layout.num_channels = 4;
  layout.sample_rate_hz = 80.0;
  return synth::generate_dataset(scfg, layout, 24);
}

train::TrainConfig fixture_train_config() {
  train::TrainConfig t;
  t.lr = 1e-3;
  t.batch_size = 4;
  t.max_epochs = 3;
  t.lr_step_epochs = 2;
  t.lr_decay = 0.5;
  t.weight_decay = 1e-4;
  t.warmup_frac = 0.5;
  t.num_z_samples = 1;
  t.grad_chunk = 2;
  t.seed = 11;
  return t;
}

infer::InferenceConfig fast_inference() {
  infer::InferenceConfig i;
  i.num_latent_samples = 2;
  return i;
}

data::GaitWindow random_window(int time_steps, int channels, std::uint64_t seed) {
  auto w = data::make_window(time_steps, channels);
  Rng rng(seed);
  for (auto& v : w.values) v = rng.uniform(-1.0, 1.0);
  return w;
}

bool same_values(const nn::ParamStore<float>& a, const nn::ParamStore<float>& b) {
  if (a.params().size() != b.params().size()) return false;
  if (a.buffers().size() != b.buffers().size()) return false;
  for (const auto& [path, t] : a.params()) {
    if (!b.has_param(path)) return false;
    auto u = b.param(path);
    if (t->rows != u->rows || t->cols != u->cols || t->val != u->val)
      return false;
  }
  for (const auto& [path, t] : a.buffers()) {
    if (!b.has_buffer(path)) return false;
    if (t->val != b.buffer(path)->val) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("save and load round-trip every tensor and the optimizer bit-exactly") {
  auto cfg = testutil::micro_config();
  nn::ParamStore<float> store(42);
  model::init_params(store, cfg);
  nn::AdamState<float> adam;
  adam.weight_decay = 0.01f;
  nn::adam_step(store, adam);  // weight decay alone gives nonzero moments
  nn::adam_step(store, adam);

  ckpt::CheckpointMeta meta;
  meta.code_version = "test 0.0";
  meta.config_hash = "cafe1234";
  meta.setting_name = "full";
  meta.held_out = "p01";
  meta.store_seed = 42;
  meta.next_epoch = 7;

  const std::string path = "roundtrip.ckpt";
  ckpt::save_checkpoint(path, store, adam, meta);
  auto ck = ckpt::load_checkpoint(path, "cafe1234");

  CHECK(ck.meta.code_version == meta.code_version);
  CHECK(ck.meta.config_hash == meta.config_hash);
  CHECK(ck.meta.setting_name == meta.setting_name);
  CHECK(ck.meta.held_out == meta.held_out);
  CHECK(ck.meta.store_seed == meta.store_seed);
  CHECK(ck.meta.next_epoch == meta.next_epoch);

  CHECK(same_values(store, ck.store));
  CHECK(ck.store.seed() == store.seed());

  CHECK(ck.adam.step_count == adam.step_count);
  CHECK(ck.adam.weight_decay == adam.weight_decay);
  CHECK(ck.adam.beta1 == adam.beta1);
  CHECK(ck.adam.beta2 == adam.beta2);
  CHECK(ck.adam.eps == adam.eps);
  REQUIRE(ck.adam.m.size() == store.params().size());
  for (const auto& [p, m] : adam.m) CHECK(ck.adam.m.at(p) == m);
  for (const auto& [p, v] : adam.v) CHECK(ck.adam.v.at(p) == v);
}

TEST_CASE("a loaded model predicts bit-identically to the one that was saved") {
  auto cfg = testutil::micro_config();
  nn::ParamStore<float> store(13);
  model::init_params(store, cfg);
  auto x = random_window(cfg.input_len, cfg.num_channels, 100);
  auto aux = random_window(cfg.aux_len, cfg.num_channels, 101);
  infer::InferenceConfig icfg;
  icfg.num_latent_samples = 3;

  auto before = infer::predict_load(store, cfg, x, aux, icfg, 55);

  const std::string path = "forward.ckpt";
  ckpt::save_checkpoint(path, store, nn::AdamState<float>{}, {});
  auto ck = ckpt::load_checkpoint(path);
  auto after = infer::predict_load(ck.store, cfg, x, aux, icfg, 55);

  CHECK(after.load_lbs == before.load_lbs);
  REQUIRE(after.style_probs.size() == before.style_probs.size());
  for (std::size_t i = 0; i < before.style_probs.size(); ++i)
    CHECK(after.style_probs[i] == before.style_probs[i]);
}

TEST_CASE("corrupt files are rejected with a diagnostic") {
  auto cfg = testutil::micro_config();
  nn::ParamStore<float> store(1);
  model::init_params(store, cfg);
  ckpt::CheckpointMeta meta;
  meta.config_hash = "abc";
  const std::string path = "corrupt.ckpt";
  ckpt::save_checkpoint(path, store, nn::AdamState<float>{}, meta);

  CHECK_THROWS(ckpt::load_checkpoint("no_such_file.ckpt"));
  CHECK_THROWS_WITH_AS(ckpt::load_checkpoint(path, "different"),
                       doctest::Contains("config hash mismatch"),
                       std::runtime_error);
  CHECK_NOTHROW(ckpt::load_checkpoint(path, ""));
  CHECK_NOTHROW(ckpt::load_checkpoint(path, "abc"));

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  in.close();

  {
    std::ofstream out("bad_magic.ckpt", std::ios::binary);
    out << "NOTACHECKPT!" << bytes.substr(12);
  }
  CHECK_THROWS_WITH_AS(ckpt::load_checkpoint("bad_magic.ckpt"),
                       doctest::Contains("not a checkpoint"),
                       std::runtime_error);

  {
    std::ofstream out("truncated.ckpt", std::ios::binary);
    out << bytes.substr(0, bytes.size() - 8);
  }
  CHECK_THROWS_WITH_AS(ckpt::load_checkpoint("truncated.ckpt"),
                       doctest::Contains("truncated payload"),
                       std::runtime_error);

  {
    std::ofstream out("trailing.ckpt", std::ios::binary);
    out << bytes << "XXXX";
  }
  CHECK_THROWS_WITH_AS(ckpt::load_checkpoint("trailing.ckpt"),
                       doctest::Contains("trailing bytes"),
                       std::runtime_error);
}

}  // TEST_SUITE checkpoint

TEST_SUITE("inference") {

TEST_CASE("mixture mean is exact for exactly representable inputs") {
  CHECK(infer::marginalize({0.75, 0.25}, {20.0, 40.0}) == 25.0);
  CHECK(infer::marginalize({0.0, 1.0}, {20.0, 40.0}) == 40.0);
  CHECK(infer::marginalize({1.0}, {-3.5}) == -3.5);
}

TEST_CASE("mixture mean rejects malformed distributions") {
  CHECK_THROWS(infer::marginalize({0.5, 0.5}, {1.0}));
  CHECK_THROWS(infer::marginalize({}, {}));
  CHECK_THROWS(infer::marginalize({-0.1, 1.1}, {0.0, 0.0}));
  CHECK_THROWS(infer::marginalize({0.6, 0.6}, {0.0, 0.0}));
}

TEST_CASE("prediction is a pure function of checkpoint, inputs, and seed") {
  auto cfg = testutil::micro_config();
  nn::ParamStore<float> store(5);
  model::init_params(store, cfg);
  auto x = random_window(cfg.input_len, cfg.num_channels, 200);
  auto aux = random_window(cfg.aux_len, cfg.num_channels, 201);
  infer::InferenceConfig icfg;
  icfg.num_latent_samples = 3;

  auto a = infer::predict_load(store, cfg, x, aux, icfg, 9);
  auto b = infer::predict_load(store, cfg, x, aux, icfg, 9);
  auto c = infer::predict_load(store, cfg, x, aux, icfg, 10);
  CHECK(a.load_lbs == b.load_lbs);
  CHECK(a.load_lbs != c.load_lbs);

  REQUIRE(a.style_probs.size() == 2);
  double sum = a.style_probs[0] + a.style_probs[1];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("posterior-mean mode ignores the sample count and the seed") {
  auto cfg = testutil::micro_config();
  nn::ParamStore<float> store(5);
  model::init_params(store, cfg);
  auto x = random_window(cfg.input_len, cfg.num_channels, 210);
  auto aux = random_window(cfg.aux_len, cfg.num_channels, 211);
  infer::InferenceConfig one{1, true}, many{16, true};

  auto a = infer::predict_load(store, cfg, x, aux, one, 1);
  auto b = infer::predict_load(store, cfg, x, aux, many, 2);
  CHECK(a.load_lbs == b.load_lbs);
}

TEST_CASE("wirings without a style head return no style distribution") {
  auto cfg = fixture_config("gait_only");
  nn::ParamStore<float> store(5);
  model::init_params(store, cfg);
  auto x = random_window(cfg.input_len, cfg.num_channels, 220);
  auto aux = random_window(cfg.aux_len, cfg.num_channels, 221);

  auto p = infer::predict_load(store, cfg, x, aux, fast_inference(), 3);
  CHECK(p.style_probs.empty());
  CHECK(std::isfinite(p.load_lbs));
}

TEST_CASE("evaluation scores every trial and never feeds the true style in") {
  auto dataset = fixture_dataset();
  auto cfg = fixture_config();
  nn::ParamStore<float> store(31);
  model::init_params(store, cfg);
  auto stats = data::fit_normalization(dataset);

  auto r1 = infer::evaluate(store, cfg, dataset, stats, fast_inference(), 77);
  auto r2 = infer::evaluate(store, cfg, dataset, stats, fast_inference(), 77);
  CHECK(r1.trials.size() == 12);  // 3 participants x 2 loads x 2 styles
  CHECK(r1.has_style);
  CHECK(std::isfinite(r1.mae_lbs));
  CHECK(r1.mae_lbs >= 0.0);
  CHECK(r1.style_accuracy >= 0.0);
  CHECK(r1.style_accuracy <= 1.0);
  CHECK(r1.mae_lbs == r2.mae_lbs);
  CHECK(r1.style_accuracy == r2.style_accuracy);
  for (const auto& t : r1.trials) {
    CHECK(!t.participant_id.empty());
    CHECK(!t.trial_id.empty());
    CHECK(t.style_pred >= 0);
    CHECK(t.style_pred < cfg.num_styles);
  }

  auto plain_cfg = fixture_config("gait_only");
  nn::ParamStore<float> plain(31);
  model::init_params(plain, plain_cfg);
  auto r3 = infer::evaluate(plain, plain_cfg, dataset, stats, fast_inference(), 77);
  CHECK(!r3.has_style);
  CHECK(std::isnan(r3.style_accuracy));
  CHECK(r3.trials[0].style_pred == -1);
}

}  // TEST_SUITE inference

TEST_SUITE("training") {

TEST_CASE("config validation names the offending field") {
  auto t = fixture_train_config();
  t.lr = 0.0;
  CHECK_THROWS_WITH_AS(t.validate(), doctest::Contains("lr"),
                       std::invalid_argument);
  t = fixture_train_config();
  t.warmup_frac = 1.5;
  CHECK_THROWS_WITH_AS(t.validate(), doctest::Contains("warmup_frac"),
                       std::invalid_argument);
}

TEST_CASE("one fold trains, logs schedules, and audits its data usage") {
  auto dataset = fixture_dataset();
  auto folds = data::lopo_splits(dataset);
  auto outcome =
      train_fold(dataset, folds[0], 0, 0, fixture_config(),
                 fixture_train_config(), fast_inference(), {});
  const auto& r = outcome.report;

  CHECK(!r.aborted);
  CHECK(r.evaluated);
  CHECK(r.setting_name == "full");
  CHECK(r.held_out == folds[0].held_out_participant);
  CHECK(std::isfinite(r.test_mae));
  CHECK(r.has_style);

  REQUIRE(r.epochs.size() == 3);
  for (int e = 0; e < 3; ++e) CHECK(r.epochs[e].epoch == e);
  // lr halves every lr_step_epochs; beta warms up over half the run
  CHECK(r.epochs[0].lr == 1e-3);
  CHECK(r.epochs[1].lr == 1e-3);
  CHECK(r.epochs[2].lr == 5e-4);
  CHECK(r.epochs[0].beta == 0.0);
  CHECK(r.epochs[1].beta == doctest::Approx(1.0 / 1.5).epsilon(1e-12));
  CHECK(r.epochs[2].beta == 1.0);
  for (const auto& es : r.epochs) {
    CHECK(std::isfinite(es.loss.total));
    double recomposed = es.loss.recon_mse + es.loss.style_ce +
                        es.loss.load_mae + es.beta * es.loss.kl;
    CHECK(es.loss.total == doctest::Approx(recomposed).epsilon(1e-4));
  }

  // leakage audit: the held-out participant feeds neither the normalization
  // statistics nor any training batch
  for (const auto& id : r.stats_participants)
    CHECK(id != r.held_out);
  for (const auto& id : r.batch_participants)
    CHECK(id != r.held_out);
  CHECK(r.stats_participants.size() == folds[0].train_ids.size());
  CHECK(r.batch_participants.size() == folds[0].train_ids.size());

  // normalization constants ride along as buffers
  CHECK(outcome.store.has_buffer("norm.mean"));
  CHECK(outcome.store.has_buffer("norm.std"));
  auto mean = outcome.store.buffer("norm.mean");
  for (std::size_t c = 0; c < outcome.stats.mean.size(); ++c)
    CHECK(mean->val[c] == static_cast<float>(outcome.stats.mean[c]));
}

TEST_CASE("identical seeds reproduce a fold bit-identically") {
  auto dataset = fixture_dataset();
  auto folds = data::lopo_splits(dataset);
  auto a = train_fold(dataset, folds[1], 1, 0, fixture_config(),
                      fixture_train_config(), fast_inference(), {});
  auto b = train_fold(dataset, folds[1], 1, 0, fixture_config(),
                      fixture_train_config(), fast_inference(), {});
  CHECK(same_values(a.store, b.store));
  CHECK(a.report.test_mae == b.report.test_mae);
  CHECK(a.report.test_accuracy == b.report.test_accuracy);
  REQUIRE(a.report.epochs.size() == b.report.epochs.size());
  for (std::size_t e = 0; e < a.report.epochs.size(); ++e)
    CHECK(a.report.epochs[e].loss.total == b.report.epochs[e].loss.total);

  auto c = train_fold(dataset, folds[1], 1, 1, fixture_config(),
                      fixture_train_config(), fast_inference(), {});
  CHECK(!same_values(a.store, c.store));  // repeats draw fresh streams
}

TEST_CASE("a resumed run continues the exact trajectory of a longer run") {
  auto dataset = fixture_dataset();
  auto folds = data::lopo_splits(dataset);
  auto tcfg = fixture_train_config();
  tcfg.warmup_frac = 0.0;  // beta independent of run length

  auto straight_cfg = tcfg;
  straight_cfg.max_epochs = 4;
  auto straight = train_fold(dataset, folds[0], 0, 0, fixture_config(),
                             straight_cfg, fast_inference(), {});

  auto half_cfg = tcfg;
  half_cfg.max_epochs = 2;
  train::RunContext save_ctx;
  save_ctx.checkpoint_dir = ".";
  save_ctx.config_hash = "h1";
  auto half = train_fold(dataset, folds[0], 0, 0, fixture_config(), half_cfg,
                         fast_inference(), save_ctx);
  REQUIRE(!half.report.checkpoint_path.empty());

  train::RunContext resume_ctx;
  resume_ctx.resume_from = half.report.checkpoint_path;
  resume_ctx.config_hash = "h1";
  auto resumed = train_fold(dataset, folds[0], 0, 0, fixture_config(),
                            straight_cfg, fast_inference(), resume_ctx);

  REQUIRE(resumed.report.epochs.size() == 2);
  CHECK(resumed.report.epochs[0].epoch == 2);
  CHECK(resumed.report.epochs[1].epoch == 3);
  CHECK(same_values(straight.store, resumed.store));
  CHECK(straight.report.test_mae == resumed.report.test_mae);
}

TEST_CASE("a diverging run aborts the fold and rolls the weights back") {
  auto dataset = fixture_dataset();
  auto folds = data::lopo_splits(dataset);

  // an absurd step size overflows activations within the first epoch
  auto tcfg = fixture_train_config();
  tcfg.lr = 1e20;
  tcfg.batch_size = 2;
  auto outcome = train_fold(dataset, folds[0], 0, 0, fixture_config(), tcfg,
                            fast_inference(), {});
  const auto& r = outcome.report;
  CHECK(r.aborted);
  CHECK(!r.evaluated);
  CHECK(r.epochs.empty());
  CHECK(r.abort_reason.find("epoch 0") != std::string::npos);

  // rollback lands on the freshly initialized parameters
  std::uint64_t init_seed = derive_seed(
      derive_seed(derive_seed(tcfg.seed, "init"), std::uint64_t{0}),
      std::uint64_t{0});
  nn::ParamStore<float> fresh(init_seed);
  model::init_params(fresh, fixture_config());
  for (const auto& [path, t] : fresh.params())
    CHECK(outcome.store.param(path)->val == t->val);
}

TEST_CASE("cross-validation aggregates folds deterministically across threads") {
  auto dataset = fixture_dataset();
  auto tcfg = fixture_train_config();
  tcfg.max_epochs = 2;
  tcfg.repeats = 2;

  tcfg.num_threads = 2;
  auto a = train::run_lopo(dataset, fixture_config(), tcfg, fast_inference(), {});
  tcfg.num_threads = 1;
  auto b = train::run_lopo(dataset, fixture_config(), tcfg, fast_inference(), {});

  REQUIRE(a.reports.size() == 6);  // 3 folds x 2 repeats
  CHECK(a.completed_runs == 6);
  CHECK(a.aborted_runs == 0);
  CHECK(a.reports[0].fold_index == 0);
  CHECK(a.reports[0].repeat == 0);
  CHECK(a.reports[1].fold_index == 0);
  CHECK(a.reports[1].repeat == 1);
  CHECK(a.reports[5].fold_index == 2);

  CHECK(a.mae_mean == b.mae_mean);
  CHECK(a.mae_std == b.mae_std);
  CHECK(a.acc_mean == b.acc_mean);
  for (std::size_t j = 0; j < a.reports.size(); ++j) {
    CHECK(a.reports[j].test_mae == b.reports[j].test_mae);
    CHECK(a.reports[j].held_out == b.reports[j].held_out);
  }
  CHECK(std::isfinite(a.mae_mean));
  CHECK(a.mae_std >= 0.0);
}

}  // TEST_SUITE training
