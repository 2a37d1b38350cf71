#pragma once

// Shared helpers for unit tests: miniature model configs and random inputs.

#include <cstdint>
#include <vector>

#include "auxvae/model.hpp"
#include "auxvae/param_store.hpp"
#include "auxvae/rng.hpp"
#include "auxvae/tensor.hpp"

namespace testutil {

// Small enough for fast double-precision gradient checks, big enough to have
// at least two of everything (layers, heads, pools).
inline auxvae::model::ModelConfig micro_config(
    auxvae::model::AblationSetting setting = {"full", true,
                                              auxvae::model::Fusion::CrossAttention,
                                              true}) {
  auxvae::model::ModelConfig cfg;
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
  cfg.setting = setting;
  cfg.validate();
  return cfg;
}

template <class T>
auxvae::nn::Tensor<T> random_input(int rows, int cols, auxvae::Rng& rng,
                                   double scale = 1.0) {
  auto t = auxvae::nn::tensor<T>(rows, cols);
  for (auto& v : t->val)
    v = static_cast<T>(rng.uniform(-scale, scale));
  return t;
}

}  // namespace testutil
