#include <cmath>
#include <set>

#include "auxvae/grad_check.hpp"
#include "auxvae/model.hpp"
#include "auxvae/objective.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace auxvae;
using namespace auxvae::model;
using nn::Tensor;
using testutil::micro_config;
using testutil::random_input;

TEST_SUITE("generator_net") {

TEST_CASE("encode produces well-formed posteriors for every fusion") {
  for (auto setting : registered_settings()) {
    auto cfg = micro_config(setting);
    nn::ParamStore<double> store(11);
    init_params(store, cfg);
    Rng rng(3);
    auto x = random_input<double>(cfg.input_len, cfg.num_channels, rng);
    auto x_aux = random_input<double>(cfg.aux_len, cfg.num_channels, rng);

    auto enc = encode(store, cfg, x,
                      setting.use_aux_input ? x_aux : nullptr, true);
    CHECK(enc.mu->rows == 1);
    CHECK(enc.mu->cols == cfg.enc.latent_dim);
    CHECK(enc.sigma->cols == cfg.enc.latent_dim);
    for (double s : enc.sigma->val) {
      CHECK(s >= std::exp(-7.0) * 0.999);
      CHECK(s <= std::exp(7.0) * 1.001);
    }
  }
}

TEST_CASE("attention rows are probability distributions") {
  auto cfg = micro_config();
  nn::ParamStore<double> store(21);
  init_params(store, cfg);
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = random_input<double>(cfg.input_len, cfg.num_channels, rng, 2.0);
    auto x_aux = random_input<double>(cfg.aux_len, cfg.num_channels, rng, 2.0);
    auto enc = encode(store, cfg, x, x_aux, true, /*want_trace=*/true);
    REQUIRE(enc.trace.scores.size() == static_cast<std::size_t>(cfg.enc.num_heads));
    REQUIRE(enc.trace.scores_aux.size() ==
            static_cast<std::size_t>(cfg.enc.num_heads));
    for (const auto& a : enc.trace.scores) {
      CHECK(a->rows == cfg.encoded_len(cfg.input_len));
      CHECK(a->cols == cfg.encoded_len(cfg.aux_len));
      for (int i = 0; i < a->rows; ++i) {
        double sum = 0;
        for (int j = 0; j < a->cols; ++j) {
          sum += a->at(i, j);
          CHECK(a->at(i, j) >= 0.0);
        }
        CHECK(std::abs(sum - 1.0) < 1e-6);
      }
    }
  }
}

TEST_CASE("zero queries and keys reduce attention to mean pooling") {
  // With Wq = Wk = 0 all scores are equal, softmax is uniform, and the
  // attended output must equal the time-mean of the value projections.
  auto cfg = micro_config();
  nn::ParamStore<double> store(31);
  init_params(store, cfg);
  for (int p = 0; p < cfg.enc.num_heads; ++p) {
    std::string hp = "enc.attn.h" + std::to_string(p);
    for (const char* m : {".wq", ".wk", ".wq_aux", ".wk_aux"})
      for (auto& v : store.param(hp + m)->val) v = 0.0;
  }
  Rng rng(7);
  auto h = random_input<double>(5, cfg.enc.attn_dim, rng);
  auto ha = random_input<double>(3, cfg.enc.attn_dim, rng);

  AttentionTrace<double> trace;
  auto fused = cross_attention(store, cfg, h, ha, &trace);
  int fused_dim = cfg.enc.num_heads * cfg.enc.head_value_dim;
  REQUIRE(fused->rows == 5 + 3);
  REQUIRE(fused->cols == fused_dim);

  // Oracle: mean over aux time of ha*wv_aux per head, concatenated, times wo.
  for (int p = 0; p < cfg.enc.num_heads; ++p) {
    auto wv = store.param("enc.attn.h" + std::to_string(p) + ".wv_aux");
    std::vector<double> mean(cfg.enc.head_value_dim, 0.0);
    for (int t = 0; t < 3; ++t)
      for (int j = 0; j < cfg.enc.head_value_dim; ++j) {
        double acc = 0;
        for (int k = 0; k < cfg.enc.attn_dim; ++k)
          acc += ha->at(t, k) * wv->at(k, j);
        mean[j] += acc / 3.0;
      }
    // Compare against attended head output reconstructed through wo^-1 is
    // awkward; instead check the attention weights directly: all 1/3.
    const auto& a = trace.scores[p];
    for (int i = 0; i < a->rows; ++i)
      for (int j = 0; j < a->cols; ++j)
        CHECK(a->at(i, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    (void)mean;
  }

  // Every fused row in the loaded-direction block equals every other row
  // (uniform attention destroys time structure).
  for (int i = 1; i < 5; ++i)
    for (int j = 0; j < fused_dim; ++j)
      CHECK(fused->at(i, j) == doctest::Approx(fused->at(0, j)).epsilon(1e-9));
}

TEST_CASE("two dilated layers with kernel 3 see exactly 7 steps") {
  // Impulse response support of conv(K=3,d=1) then conv(K=3,d=2):
  // receptive field 1 + 2 + 4 = 7.
  nn::ParamStore<double> store(1);
  store.add_param("c1.w", 3, 1, nn::Init::Ones);
  store.add_param("c1.b", 1, 1, nn::Init::Zeros);
  store.add_param("c2.w", 3, 1, nn::Init::Ones);
  store.add_param("c2.b", 1, 1, nn::Init::Zeros);
  int tlen = 32, impulse_at = 12;
  auto x = nn::tensor<double>(tlen, 1);
  x->at(impulse_at, 0) = 1.0;
  auto h = nn::conv1d_causal(x, store.param("c1.w"), store.param("c1.b"), 1);
  auto y = nn::conv1d_causal(h, store.param("c2.w"), store.param("c2.b"), 2);
  std::set<int> support;
  for (int t = 0; t < tlen; ++t)
    if (y->at(t, 0) != 0.0) support.insert(t);
  CHECK(support.size() == 7);
  CHECK(*support.begin() == impulse_at);
  CHECK(*support.rbegin() == impulse_at + 6);
}

TEST_CASE("decoder reconstructs the exact input length, including odd sizes") {
  for (int len : {16, 13, 9}) {
    auto cfg = micro_config();
    cfg.input_len = len;
    cfg.aux_len = len;
    nn::ParamStore<double> store(17);
    init_params(store, cfg);
    Rng rng(9);
    auto x_aux = random_input<double>(len, cfg.num_channels, rng);
    auto z = random_input<double>(1, cfg.enc.latent_dim, rng);
    auto x_hat = decode(store, cfg, z, x_aux, true);
    CHECK(x_hat->rows == len);
    CHECK(x_hat->cols == cfg.num_channels);
  }
}

TEST_CASE("initialization is deterministic and path-keyed") {
  auto cfg = micro_config();
  nn::ParamStore<double> a(42), b(42), c(43);
  init_params(a, cfg);
  init_params(b, cfg);
  init_params(c, cfg);
  for (const auto& [path, t] : a.params()) {
    CHECK(b.param(path)->val == t->val);
    if (t->val != std::vector<double>(t->val.size(), 0.0) &&
        t->val != std::vector<double>(t->val.size(), 1.0))
      CHECK(c.param(path)->val != t->val);
  }

  // Shared submodules across wirings initialize identically: the loaded
  // stream exists in every setting and must not depend on what else exists.
  auto cfg_full = micro_config();
  auto cfg_plain = micro_config({"gait_only", false, Fusion::None, false});
  nn::ParamStore<double> full(42), plain(42);
  init_params(full, cfg_full);
  init_params(plain, cfg_plain);
  for (const auto& [path, t] : plain.params())
    if (full.has_param(path) && full.param(path)->rows == t->rows &&
        full.param(path)->cols == t->cols)
      CHECK(full.param(path)->val == t->val);
}

TEST_CASE("wiring audit: parameters exist independently of the style head and aux stream") {
  auto specs_for = [](const AblationSetting& s) {
    std::set<std::string> paths;
    for (const auto& spec : param_specs(micro_config(s)))
      if (!spec.is_buffer) paths.insert(spec.path);
    return paths;
  };
  auto full = specs_for({"full", true, Fusion::CrossAttention, true});
  auto plain = specs_for({"gait_only", false, Fusion::None, false});
  auto concat = specs_for({"aux_concat", true, Fusion::Concat, true});
  auto attn_only = specs_for({"aux_attn", true, Fusion::CrossAttention, false});

  CHECK(full.count("enc.aux.b0.conv.w"));
  CHECK(full.count("enc.attn.h0.wq"));
  CHECK(full.count("cls.l1.w"));
  CHECK(full.count("dec.aux.b0.conv.w"));

  CHECK_FALSE(plain.count("enc.aux.b0.conv.w"));
  CHECK_FALSE(plain.count("enc.attn.h0.wq"));
  CHECK_FALSE(plain.count("cls.l1.w"));
  CHECK_FALSE(plain.count("dec.aux.b0.conv.w"));

  CHECK_FALSE(concat.count("enc.attn.h0.wq"));   // concat has no attention
  CHECK_FALSE(concat.count("enc.aux.b0.conv.w")); // single stacked stream
  CHECK(concat.count("dec.aux.b0.conv.w"));       // decoder still conditioned

  CHECK_FALSE(attn_only.count("cls.l1.w"));       // no style head

  // Regressor input width shrinks when the style pathway is absent.
  auto cfg_styled = micro_config();
  auto cfg_plain2 = micro_config({"aux_attn", true, Fusion::CrossAttention, false});
  nn::ParamStore<double> s1(1), s2(1);
  init_params(s1, cfg_styled);
  init_params(s2, cfg_plain2);
  CHECK(s1.param("reg.l1.w")->rows ==
        cfg_styled.enc.latent_dim + cfg_styled.num_styles);
  CHECK(s2.param("reg.l1.w")->rows == cfg_plain2.enc.latent_dim);
}

TEST_CASE("concat fusion rejects mismatched window lengths") {
  auto cfg = micro_config({"aux_concat", true, Fusion::Concat, true});
  cfg.aux_len = 8;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("encoder and decoder pass gradient check end to end") {
  auto cfg = micro_config();
  nn::ParamStore<double> store(99);
  init_params(store, cfg);
  Rng rng(13);
  auto x = random_input<double>(cfg.input_len, cfg.num_channels, rng);
  auto x_aux = random_input<double>(cfg.aux_len, cfg.num_channels, rng);

  auto f = [&](nn::ParamStore<double>& s) {
    auto enc = encode(s, cfg, x, x_aux, true);
    Rng eps(555);
    auto z = nn::reparameterize(enc.mu, enc.sigma, eps);
    auto x_hat = decode(s, cfg, z, x_aux, true);
    auto recon = nn::mse_loss(x_hat, x);
    auto kl = nn::gaussian_kl(enc.mu, enc.sigma);
    return nn::add(recon, nn::mul_scalar(kl, 0.3));
  };
  auto report = nn::grad_check<double>(f, store, 3, 12345);
  CHECK(report.max_rel_err < 1e-5);
}

}  // TEST_SUITE generator_net
