#pragma once

// Network architecture: configuration, parameter catalog, and forward passes.
//
// The encoder runs one dilated-TCN stack per input stream (dilation doubles
// per layer, each block is conv -> GELU -> batch norm -> max pool), projects
// each stream to a common width, fuses the loaded and auxiliary streams with
// bidirectional multi-head cross-attention, max-pools the fused sequence over
// time, and emits the mean and (clamped, exponentiated) scale of a diagonal
// Gaussian over the latent code.
//
// The decoder conditions on the auxiliary stream through its own TCN stack,
// maps [z, context] to a coarse sequence, and upsamples back to the input
// length with transposed causal convolutions that mirror the encoder widths
// in reverse.
//
// Prediction heads: a style classifier over z (softmax) and a load regressor
// over [z, style one-hot].
//
// Model variants rewire this graph: the auxiliary stream can be dropped
// entirely, fused by channel concatenation instead of attention, and the
// style pathway can be removed (the regressor then consumes z alone). A
// parameter exists if and only if the active wiring uses it, and its
// initialization depends only on (seed, path), so variants sharing a
// submodule start from identical weights.

#include <cmath>
#include <string>
#include <type_traits>
#include <vector>

#include "auxvae/ops.hpp"
#include "auxvae/param_store.hpp"

namespace auxvae::model {

using nn::Tensor;

struct EncoderConfig {
  std::vector<int> tcn_channels{256, 128};
  int kernel_size = 3;
  int pool_window = 2;
  int attn_dim = 64;        // per-stream projection width feeding attention
  int num_heads = 4;
  int head_key_dim = 16;
  int head_value_dim = 16;
  int latent_dim = 128;
};

enum class Fusion { None, Concat, CrossAttention };

struct AblationSetting {
  std::string name = "full";
  bool use_aux_input = true;
  Fusion fusion = Fusion::CrossAttention;
  bool use_aux_output = true;
};

struct ModelConfig {
  EncoderConfig enc;
  int num_channels = 72;
  int num_styles = 4;
  int input_len = 800;  // loaded window length T
  int aux_len = 800;    // auxiliary window length T0
  int head_hidden = 64;
  AblationSetting setting;

  void validate() const;

  // Sequence length after the TCN stack's pooling stages.
  int encoded_len(int len) const {
    for (std::size_t u = 0; u < enc.tcn_channels.size(); ++u)
      len = (len + enc.pool_window - 1) / enc.pool_window;
    return len;
  }

  // Width of the pooled feature vector feeding the latent heads.
  int feature_dim() const {
    return setting.fusion == Fusion::CrossAttention
               ? enc.num_heads * enc.head_value_dim
               : enc.attn_dim;
  }

  int encoder_in_channels() const {
    return setting.fusion == Fusion::Concat ? 2 * num_channels : num_channels;
  }
};

inline void check_cfg(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument("ModelConfig: " + msg);
}

inline std::string fusion_name(Fusion f) {
  switch (f) {
    case Fusion::None: return "none";
    case Fusion::Concat: return "concat";
    case Fusion::CrossAttention: return "cross_attention";
  }
  throw std::invalid_argument("unknown fusion");
}

inline Fusion fusion_from_name(const std::string& name) {
  if (name == "none") return Fusion::None;
  if (name == "concat") return Fusion::Concat;
  if (name == "cross_attention") return Fusion::CrossAttention;
  throw std::invalid_argument("unknown fusion name: " + name);
}

// The five pre-registered variants, ordered from plain supervised baseline to
// the full model.
inline std::vector<AblationSetting> registered_settings() {
  return {
      {"gait_only", false, Fusion::None, false},
      {"gait_style", false, Fusion::None, true},
      {"aux_concat", true, Fusion::Concat, true},
      {"aux_attn", true, Fusion::CrossAttention, false},
      {"full", true, Fusion::CrossAttention, true},
  };
}

inline AblationSetting setting_by_name(const std::string& name) {
  for (const auto& s : registered_settings())
    if (s.name == name) return s;
  throw std::invalid_argument("unknown model setting: " + name);
}

inline void ModelConfig::validate() const {
  check_cfg(num_channels > 0, "num_channels must be positive");
  check_cfg(num_styles >= 2, "num_styles must be at least 2");
  check_cfg(input_len > 0 && aux_len > 0, "window lengths must be positive");
  check_cfg(!enc.tcn_channels.empty(), "tcn_channels must be non-empty");
  for (int c : enc.tcn_channels)
    check_cfg(c > 0, "tcn widths must be positive");
  check_cfg(enc.kernel_size >= 1, "kernel_size must be >= 1");
  check_cfg(enc.pool_window >= 1, "pool_window must be >= 1");
  check_cfg(enc.attn_dim > 0 && enc.latent_dim > 0 && head_hidden > 0,
            "layer widths must be positive");
  check_cfg(enc.num_heads > 0 && enc.head_key_dim > 0 && enc.head_value_dim > 0,
            "attention dims must be positive");
  if (!setting.use_aux_input)
    check_cfg(setting.fusion == Fusion::None,
              "fusion requires the auxiliary input");
  else
    check_cfg(setting.fusion != Fusion::None,
              "auxiliary input requires a fusion mechanism");
  if (setting.fusion == Fusion::Concat)
    check_cfg(input_len == aux_len,
              "concat fusion requires equal loaded/auxiliary lengths");
}

// ---------------------------------------------------------------------------
// Parameter catalog
// ---------------------------------------------------------------------------

// Enumerates every (path, shape, init) the active wiring needs. Used by both
// initialization and the structural audits in tests, so they cannot drift.
struct ParamSpec {
  std::string path;
  int rows, cols;
  nn::Init init;
  int fan_in, fan_out;
  bool is_buffer;  // batch-norm running stats
  double buffer_fill;
};

inline void tcn_stack_specs(std::vector<ParamSpec>& out,
                            const std::string& prefix, int in_ch,
                            const std::vector<int>& channels, int ksize) {
  int cin = in_ch;
  for (std::size_t u = 0; u < channels.size(); ++u) {
    int cout = channels[u];
    std::string b = prefix + ".b" + std::to_string(u);
    out.push_back({b + ".conv.w", ksize * cout, cin, nn::Init::GlorotUniform,
                   ksize * cin, ksize * cout, false, 0.0});
    out.push_back({b + ".conv.b", 1, cout, nn::Init::Zeros, 0, 0, false, 0.0});
    out.push_back({b + ".bn.gamma", 1, cout, nn::Init::Ones, 0, 0, false, 0.0});
    out.push_back({b + ".bn.beta", 1, cout, nn::Init::Zeros, 0, 0, false, 0.0});
    out.push_back({b + ".bn.mean", 1, cout, nn::Init::Zeros, 0, 0, true, 0.0});
    out.push_back({b + ".bn.var", 1, cout, nn::Init::Zeros, 0, 0, true, 1.0});
    cin = cout;
  }
}

inline std::vector<ParamSpec> param_specs(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<ParamSpec> out;
  const auto& e = cfg.enc;
  int dk = e.head_key_dim, dv = e.head_value_dim;
  int c_last = e.tcn_channels.back();
  auto linear = [&](const std::string& p, int in, int dim) {
    out.push_back({p + ".w", in, dim, nn::Init::GlorotUniform, 0, 0, false, 0.0});
    out.push_back({p + ".b", 1, dim, nn::Init::Zeros, 0, 0, false, 0.0});
  };

  // Encoder stream(s).
  tcn_stack_specs(out, "enc.x", cfg.encoder_in_channels(), e.tcn_channels,
                  e.kernel_size);
  linear("enc.x.proj", c_last, e.attn_dim);
  if (cfg.setting.fusion == Fusion::CrossAttention) {
    tcn_stack_specs(out, "enc.aux", cfg.num_channels, e.tcn_channels,
                    e.kernel_size);
    linear("enc.aux.proj", c_last, e.attn_dim);
    for (int p = 0; p < e.num_heads; ++p) {
      std::string h = "enc.attn.h" + std::to_string(p);
      for (const char* m : {".wq", ".wk", ".wk_aux", ".wq_aux"})
        out.push_back({h + m, e.attn_dim, dk, nn::Init::GlorotUniform, 0, 0,
                       false, 0.0});
      for (const char* m : {".wv", ".wv_aux"})
        out.push_back({h + m, e.attn_dim, dv, nn::Init::GlorotUniform, 0, 0,
                       false, 0.0});
    }
    int fused = e.num_heads * dv;
    out.push_back({"enc.attn.wo", fused, fused, nn::Init::GlorotUniform, 0, 0,
                   false, 0.0});
    out.push_back({"enc.attn.wo_aux", fused, fused, nn::Init::GlorotUniform, 0,
                   0, false, 0.0});
  }
  linear("enc.mu", cfg.feature_dim(), e.latent_dim);
  linear("enc.logsigma", cfg.feature_dim(), e.latent_dim);

  // Decoder.
  std::vector<int> rev(e.tcn_channels.rbegin(), e.tcn_channels.rend());
  int ctx = 0;
  if (cfg.setting.use_aux_input) {
    tcn_stack_specs(out, "dec.aux", cfg.num_channels, e.tcn_channels,
                    e.kernel_size);
    ctx = c_last;
  }
  int seed_len = cfg.encoded_len(cfg.input_len);
  linear("dec.seed", e.latent_dim + ctx, seed_len * rev[0]);
  for (std::size_t i = 1; i < rev.size(); ++i) {
    std::string b = "dec.up" + std::to_string(i);
    out.push_back({b + ".conv.w", e.kernel_size * rev[i], rev[i - 1],
                   nn::Init::GlorotUniform, e.kernel_size * rev[i - 1],
                   e.kernel_size * rev[i], false, 0.0});
    out.push_back({b + ".conv.b", 1, rev[i], nn::Init::Zeros, 0, 0, false, 0.0});
    out.push_back({b + ".bn.gamma", 1, rev[i], nn::Init::Ones, 0, 0, false, 0.0});
    out.push_back({b + ".bn.beta", 1, rev[i], nn::Init::Zeros, 0, 0, false, 0.0});
    out.push_back({b + ".bn.mean", 1, rev[i], nn::Init::Zeros, 0, 0, true, 0.0});
    out.push_back({b + ".bn.var", 1, rev[i], nn::Init::Zeros, 0, 0, true, 1.0});
  }
  out.push_back({"dec.out.conv.w", e.kernel_size * cfg.num_channels, rev.back(),
                 nn::Init::GlorotUniform, e.kernel_size * rev.back(),
                 e.kernel_size * cfg.num_channels, false, 0.0});
  out.push_back({"dec.out.conv.b", 1, cfg.num_channels, nn::Init::Zeros, 0, 0,
                 false, 0.0});

  // Prediction heads.
  if (cfg.setting.use_aux_output) {
    linear("cls.l1", e.latent_dim, cfg.head_hidden);
    linear("cls.l2", cfg.head_hidden, cfg.num_styles);
  }
  int reg_in = e.latent_dim + (cfg.setting.use_aux_output ? cfg.num_styles : 0);
  linear("reg.l1", reg_in, cfg.head_hidden);
  linear("reg.l2", cfg.head_hidden, 1);
  return out;
}

template <class T>
void init_params(nn::ParamStore<T>& store, const ModelConfig& cfg) {
  for (const auto& s : param_specs(cfg)) {
    if (s.is_buffer)
      store.add_buffer(s.path, s.rows, s.cols, static_cast<T>(s.buffer_fill));
    else
      store.add_param(s.path, s.rows, s.cols, s.init, s.fan_in, s.fan_out);
  }
}

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

// One TCN stack applied to a set of windows together. Batch normalization
// pools its statistics across every window in the set: a window normalized
// alone would lose its per-channel scale, which is exactly where the load
// attenuation and the style asymmetry live. Convolutions and pooling never
// cross window boundaries.
template <class T>
std::vector<Tensor<T>> tcn_stream(nn::ParamStore<T>& store,
                                  const ModelConfig& cfg,
                                  const std::string& prefix,
                                  std::vector<Tensor<T>> hs, bool train) {
  for (std::size_t u = 0; u < cfg.enc.tcn_channels.size(); ++u) {
    std::string b = prefix + ".b" + std::to_string(u);
    int dilation = 1 << u;
    for (auto& h : hs) {
      h = nn::conv1d_causal(h, store.param(b + ".conv.w"),
                            store.param(b + ".conv.b"), dilation);
      h = nn::gelu(h);
    }
    auto stacked = nn::batch_norm(
        nn::concat_rows(hs), store.param(b + ".bn.gamma"),
        store.param(b + ".bn.beta"), store.buffer(b + ".bn.mean"),
        store.buffer(b + ".bn.var"), train);
    int off = 0;
    for (auto& h : hs) {
      int rows = h->rows;
      h = nn::max_pool1d(nn::slice_rows(stacked, off, off + rows),
                         cfg.enc.pool_window);
      off += rows;
    }
  }
  return hs;
}

template <class T>
Tensor<T> tcn_stream(nn::ParamStore<T>& store, const ModelConfig& cfg,
                     const std::string& prefix, const Tensor<T>& x,
                     bool train) {
  return tcn_stream(store, cfg, prefix, std::vector<Tensor<T>>{x}, train)[0];
}

// Per-head attention matrices, exposed for inspection and tests. scores[p] is
// the loaded-queries direction (T' x T0'); scores_aux[p] the reverse.
template <class T>
struct AttentionTrace {
  std::vector<Tensor<T>> scores;
  std::vector<Tensor<T>> scores_aux;
};

// Bidirectional multi-head cross-attention between the projected loaded
// stream h (T' x d_h) and auxiliary stream h_aux (T0' x d_h). Each direction
// concatenates its heads and applies its own output projection; the fused
// sequence stacks both directions along time: ((T' + T0') x P*d_v).
template <class T>
Tensor<T> cross_attention(nn::ParamStore<T>& store, const ModelConfig& cfg,
                          const Tensor<T>& h, const Tensor<T>& h_aux,
                          AttentionTrace<T>* trace = nullptr) {
  const auto& e = cfg.enc;
  T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(e.head_key_dim)));
  std::vector<Tensor<T>> heads_x, heads_aux;
  for (int p = 0; p < e.num_heads; ++p) {
    std::string hp = "enc.attn.h" + std::to_string(p);
    auto q = nn::matmul(h, store.param(hp + ".wq"));
    auto k = nn::matmul(h_aux, store.param(hp + ".wk"));
    auto a = nn::softmax_rows(nn::mul_scalar(nn::matmul_nt(q, k), scale));
    auto v = nn::matmul(h_aux, store.param(hp + ".wv_aux"));
    heads_x.push_back(nn::matmul(a, v));

    auto qa = nn::matmul(h_aux, store.param(hp + ".wq_aux"));
    auto ka = nn::matmul(h, store.param(hp + ".wk_aux"));
    auto aa = nn::softmax_rows(nn::mul_scalar(nn::matmul_nt(qa, ka), scale));
    auto va = nn::matmul(h, store.param(hp + ".wv"));
    heads_aux.push_back(nn::matmul(aa, va));

    if (trace) {
      trace->scores.push_back(a);
      trace->scores_aux.push_back(aa);
    }
  }
  auto attended_x = nn::matmul(nn::concat_cols(heads_x),
                               store.param("enc.attn.wo"));
  auto attended_aux = nn::matmul(nn::concat_cols(heads_aux),
                                 store.param("enc.attn.wo_aux"));
  return nn::concat_rows(attended_x, attended_aux);
}

template <class T>
struct EncodeResult {
  Tensor<T> mu;     // (1 x k)
  Tensor<T> sigma;  // (1 x k), strictly positive
  AttentionTrace<T> trace;
};

// Posterior parameters for a set of windows encoded together, so
// normalization statistics are shared across the set. x_auxs must be empty
// when the wiring does not use the auxiliary stream, else one per window.
template <class T>
std::vector<EncodeResult<T>> encode_batch(nn::ParamStore<T>& store,
                                          const ModelConfig& cfg,
                                          const std::vector<Tensor<T>>& xs,
                                          const std::vector<Tensor<T>>& x_auxs,
                                          bool train, bool want_trace = false) {
  nn::detail::check(!xs.empty(), "encode: empty batch");
  for (const auto& x : xs)
    nn::detail::check(x->cols == cfg.num_channels,
                      "encode: input channel count mismatch");
  bool needs_aux = cfg.setting.fusion != Fusion::None;
  nn::detail::check(needs_aux ? x_auxs.size() == xs.size() : x_auxs.empty(),
                    needs_aux ? "encode: fusion needs one x_aux per window"
                              : "encode: wiring takes no x_aux");
  std::size_t n = xs.size();
  std::vector<EncodeResult<T>> res(n);
  std::vector<Tensor<T>> feats(n);
  switch (cfg.setting.fusion) {
    case Fusion::None: {
      auto hs = tcn_stream(store, cfg, "enc.x", xs, train);
      for (std::size_t i = 0; i < n; ++i)
        feats[i] = nn::max_over_time(nn::dense(hs[i],
                                               store.param("enc.x.proj.w"),
                                               store.param("enc.x.proj.b")));
      break;
    }
    case Fusion::Concat: {
      std::vector<Tensor<T>> joined(n);
      for (std::size_t i = 0; i < n; ++i) {
        nn::detail::check(x_auxs[i]->rows == xs[i]->rows,
                          "encode: concat fusion needs equal lengths");
        joined[i] = nn::concat_cols(xs[i], x_auxs[i]);
      }
      auto hs = tcn_stream(store, cfg, "enc.x", joined, train);
      for (std::size_t i = 0; i < n; ++i)
        feats[i] = nn::max_over_time(nn::dense(hs[i],
                                               store.param("enc.x.proj.w"),
                                               store.param("enc.x.proj.b")));
      break;
    }
    case Fusion::CrossAttention: {
      auto hs = tcn_stream(store, cfg, "enc.x", xs, train);
      auto has = tcn_stream(store, cfg, "enc.aux", x_auxs, train);
      for (std::size_t i = 0; i < n; ++i) {
        auto h = nn::dense(hs[i], store.param("enc.x.proj.w"),
                           store.param("enc.x.proj.b"));
        auto ha = nn::dense(has[i], store.param("enc.aux.proj.w"),
                            store.param("enc.aux.proj.b"));
        auto fused = cross_attention(store, cfg, h, ha,
                                     want_trace ? &res[i].trace : nullptr);
        feats[i] = nn::max_over_time(fused);
      }
      break;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    res[i].mu = nn::dense(feats[i], store.param("enc.mu.w"),
                          store.param("enc.mu.b"));
    auto log_sigma = nn::clamp(
        nn::dense(feats[i], store.param("enc.logsigma.w"),
                  store.param("enc.logsigma.b")),
        T(-7), T(7));
    res[i].sigma = nn::exp_elem(log_sigma);
  }
  return res;
}

// x_aux may be null when the wiring does not use the auxiliary stream.
template <class T>
EncodeResult<T> encode(nn::ParamStore<T>& store, const ModelConfig& cfg,
                       const Tensor<T>& x,
                       const std::type_identity_t<Tensor<T>>& x_aux,
                       bool train, bool want_trace = false) {
  std::vector<Tensor<T>> auxs;
  if (cfg.setting.fusion != Fusion::None) {
    nn::detail::check(x_aux != nullptr, "encode: wiring needs x_aux");
    auxs.push_back(x_aux);
  } else {
    nn::detail::check(x_aux == nullptr, "encode: wiring takes no x_aux");
  }
  return std::move(
      encode_batch(store, cfg, {x}, auxs, train, want_trace)[0]);
}

// Reconstructs the loaded windows (input_len x num_channels each) for a set
// of latent codes decoded together; normalization statistics are shared
// across the set. x_auxs must be empty when the wiring ignores the auxiliary
// stream, else one per code.
template <class T>
std::vector<Tensor<T>> decode_batch(nn::ParamStore<T>& store,
                                    const ModelConfig& cfg,
                                    const std::vector<Tensor<T>>& zs,
                                    const std::vector<Tensor<T>>& x_auxs,
                                    bool train) {
  nn::detail::check(!zs.empty(), "decode: empty batch");
  std::vector<int> rev(cfg.enc.tcn_channels.rbegin(),
                       cfg.enc.tcn_channels.rend());
  std::size_t n = zs.size();
  std::vector<Tensor<T>> ins(zs);
  if (cfg.setting.use_aux_input) {
    nn::detail::check(x_auxs.size() == n, "decode: wiring needs one x_aux per code");
    auto ctxs = tcn_stream(store, cfg, "dec.aux", x_auxs, train);
    for (std::size_t i = 0; i < n; ++i)
      ins[i] = nn::concat_cols(zs[i], nn::max_over_time(ctxs[i]));
  } else {
    nn::detail::check(x_auxs.empty(), "decode: wiring takes no x_aux");
  }
  int seed_len = cfg.encoded_len(cfg.input_len);
  std::vector<Tensor<T>> hs(n);
  for (std::size_t i = 0; i < n; ++i)
    hs[i] = nn::reshape(
        nn::dense(ins[i], store.param("dec.seed.w"), store.param("dec.seed.b")),
        seed_len, rev[0]);
  for (std::size_t u = 1; u < rev.size(); ++u) {
    std::string b = "dec.up" + std::to_string(u);
    for (auto& h : hs) {
      h = nn::conv1d_transposed(h, store.param(b + ".conv.w"),
                                store.param(b + ".conv.b"),
                                cfg.enc.pool_window);
      h = nn::gelu(h);
    }
    auto stacked = nn::batch_norm(
        nn::concat_rows(hs), store.param(b + ".bn.gamma"),
        store.param(b + ".bn.beta"), store.buffer(b + ".bn.mean"),
        store.buffer(b + ".bn.var"), train);
    int off = 0;
    for (auto& h : hs) {
      int rows = h->rows;
      h = nn::slice_rows(stacked, off, off + rows);
      off += rows;
    }
  }
  for (auto& h : hs)
    h = nn::trim_rows(
        nn::conv1d_transposed(h, store.param("dec.out.conv.w"),
                              store.param("dec.out.conv.b"),
                              cfg.enc.pool_window),
        cfg.input_len);
  return hs;
}

// Reconstructs the loaded window (input_len x num_channels) from the latent
// code, conditioned on the auxiliary stream when the wiring uses it.
template <class T>
Tensor<T> decode(nn::ParamStore<T>& store, const ModelConfig& cfg,
                 const Tensor<T>& z,
                 const std::type_identity_t<Tensor<T>>& x_aux, bool train) {
  std::vector<Tensor<T>> auxs;
  if (cfg.setting.use_aux_input) {
    nn::detail::check(x_aux != nullptr, "decode: wiring needs x_aux");
    auxs.push_back(x_aux);
  } else {
    nn::detail::check(x_aux == nullptr, "decode: wiring takes no x_aux");
  }
  return decode_batch(store, cfg, {z}, auxs, train)[0];
}

// Pre-softmax style scores over z: (1 x num_styles). The training loss
// consumes these directly so saturated probabilities cannot underflow.
template <class T>
Tensor<T> style_logits(nn::ParamStore<T>& store, const ModelConfig& cfg,
                       const Tensor<T>& z) {
  nn::detail::check(cfg.setting.use_aux_output,
                    "style_logits: wiring has no style head");
  auto h = nn::gelu(
      nn::dense(z, store.param("cls.l1.w"), store.param("cls.l1.b")));
  return nn::dense(h, store.param("cls.l2.w"), store.param("cls.l2.b"));
}

// Style posterior over z: (1 x num_styles) probabilities.
template <class T>
Tensor<T> classify_style(nn::ParamStore<T>& store, const ModelConfig& cfg,
                         const Tensor<T>& z) {
  return nn::softmax_rows(style_logits(store, cfg, z));
}

// Load estimate conditioned on a style one-hot (or on z alone when the wiring
// has no style pathway; style must then be null).
template <class T>
Tensor<T> regress_load(nn::ParamStore<T>& store, const ModelConfig& cfg,
                       const Tensor<T>& z,
                       const std::type_identity_t<Tensor<T>>& style_one_hot) {
  Tensor<T> in;
  if (cfg.setting.use_aux_output) {
    nn::detail::check(style_one_hot != nullptr,
                      "regress_load: style one-hot required by the wiring");
    nn::detail::check(style_one_hot->rows == 1 &&
                          style_one_hot->cols == cfg.num_styles,
                      "regress_load: style one-hot shape mismatch");
    in = nn::concat_cols(z, style_one_hot);
  } else {
    nn::detail::check(style_one_hot == nullptr,
                      "regress_load: wiring has no style pathway");
    in = z;
  }
  auto h = nn::gelu(
      nn::dense(in, store.param("reg.l1.w"), store.param("reg.l1.b")));
  return nn::dense(h, store.param("reg.l2.w"), store.param("reg.l2.b"));
}

}  // namespace auxvae::model
