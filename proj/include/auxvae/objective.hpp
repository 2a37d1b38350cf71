#pragma once

// Training objective.
//
// The model maximizes a variational lower bound whose expectation term groups
// the reconstruction, style, and load likelihoods; minimizing the negative
// bound with unit weights on those terms gives the loss assembled here:
//
//   total = sse(x_hat, x) + ce(style_hat, style) + mae(y_hat, y) + beta * kl
//
// where sse is the squared reconstruction error summed over the window (the
// unit-variance Gaussian log-likelihood of the whole T x S window, constants
// dropped) and kl is the closed-form divergence between the diagonal Gaussian
// posterior and the standard normal prior. The window sum matters: kl is a
// per-window quantity in nats, so a per-element mean would shrink the
// reconstruction term by T*S and the bound would stop paying for any latent
// code beyond the load (the posterior collapses and the style head never
// trains). beta anneals linearly from 0 to 1 over the first warmup_frac of
// training and stays at 1 after; this keeps the posterior from collapsing
// onto the prior before the decoder is useful.
//
// Wiring variants without a style head drop the ce term (it is reported as 0)
// and the regressor consumes z alone. Training teacher-forces the regressor
// with the true style one-hot; marginalization over predicted styles happens
// only at inference.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "auxvae/model.hpp"
#include "auxvae/ops.hpp"
#include "auxvae/rng.hpp"

namespace auxvae::objective {

using nn::Tensor;

// Linear warmup: 0 at epoch 0, 1 from warmup_frac * total_epochs onward.
// warmup_frac 0 disables annealing (beta = 1 throughout).
inline double beta_schedule(int epoch, int total_epochs, double warmup_frac) {
  if (epoch < 0 || total_epochs <= 0)
    throw std::invalid_argument("beta_schedule: bad epoch/total");
  if (warmup_frac < 0.0 || warmup_frac > 1.0)
    throw std::invalid_argument("beta_schedule: warmup_frac outside [0, 1]");
  double warmup_epochs = warmup_frac * total_epochs;
  if (warmup_epochs <= 0.0) return 1.0;
  return std::min(1.0, static_cast<double>(epoch) / warmup_epochs);
}

struct LossBreakdown {
  double recon_mse = 0.0;  // squared error summed over the window
  double style_ce = 0.0;
  double load_mae = 0.0;
  double kl = 0.0;
  double beta = 0.0;
  double total = 0.0;  // recon_mse + style_ce + load_mae + beta * kl
};

template <class T>
struct BatchItem {
  Tensor<T> x;       // normalized loaded window (T x S)
  Tensor<T> x_aux;   // normalized auxiliary window; null if wiring ignores it
  double load_lbs = 0.0;
  int style = 0;
};

template <class T>
struct ElboGraph {
  Tensor<T> total;  // scalar node; backward() trains the model
  LossBreakdown parts;
};

namespace detail {
inline void check_finite(double v, const char* term) {
  if (!std::isfinite(v))
    throw std::runtime_error(std::string("elbo_loss: non-finite ") + term);
}
}  // namespace detail

// Builds the batch-mean loss graph. The whole batch is encoded and decoded
// together so batch normalization sees every item at once. Latent noise is
// drawn from `rng` draw-major (one latent_dim draw per item, repeated
// num_z_samples times), so a fixed rng seed makes the graph deterministic.
template <class T>
ElboGraph<T> elbo_loss(const std::vector<BatchItem<T>>& batch,
                       nn::ParamStore<T>& store, const model::ModelConfig& cfg,
                       double beta, Rng& rng, int num_z_samples = 1) {
  if (batch.empty()) throw std::invalid_argument("elbo_loss: empty batch");
  if (num_z_samples < 1)
    throw std::invalid_argument("elbo_loss: num_z_samples must be >= 1");
  if (beta < 0.0) throw std::invalid_argument("elbo_loss: beta must be >= 0");

  bool styled = cfg.setting.use_aux_output;
  std::size_t n = batch.size();
  T item_w = T(1) / T(n);
  T draw_w = item_w / T(num_z_samples);

  Tensor<T> recon_sum, ce_sum, mae_sum, kl_sum;
  auto accumulate = [](Tensor<T>& acc, const Tensor<T>& term) {
    acc = acc ? nn::add(acc, term) : term;
  };

  std::vector<Tensor<T>> xs(n), auxs;
  std::vector<Tensor<T>> style_targets(n), load_targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& item = batch[i];
    xs[i] = item.x;
    if (cfg.setting.use_aux_input) auxs.push_back(item.x_aux);
    if (styled) {
      if (item.style < 0 || item.style >= cfg.num_styles)
        throw std::invalid_argument("elbo_loss: style index out of range");
      style_targets[i] = nn::tensor<T>(1, cfg.num_styles);
      style_targets[i]->val[item.style] = T(1);
    }
    load_targets[i] = nn::scalar_tensor<T>(static_cast<T>(item.load_lbs));
  }

  auto encs = model::encode_batch(store, cfg, xs, auxs, /*train=*/true);
  for (std::size_t i = 0; i < n; ++i)
    accumulate(kl_sum, nn::mul_scalar(
                           nn::gaussian_kl(encs[i].mu, encs[i].sigma), item_w));

  for (int s = 0; s < num_z_samples; ++s) {
    std::vector<Tensor<T>> zs(n);
    for (std::size_t i = 0; i < n; ++i)
      zs[i] = nn::reparameterize(encs[i].mu, encs[i].sigma, rng);
    auto x_hats = model::decode_batch(store, cfg, zs, auxs, /*train=*/true);
    for (std::size_t i = 0; i < n; ++i) {
      // window-summed squared error: mean over elements times element count
      T elems = static_cast<T>(batch[i].x->size());
      accumulate(recon_sum,
                 nn::mul_scalar(nn::mse_loss(x_hats[i], batch[i].x),
                                draw_w * elems));
      Tensor<T> y_hat;
      if (styled) {
        auto logits = model::style_logits(store, cfg, zs[i]);
        accumulate(ce_sum,
                   nn::mul_scalar(
                       nn::cross_entropy_with_logits(logits, style_targets[i]),
                       draw_w));
        y_hat = model::regress_load(store, cfg, zs[i], style_targets[i]);
      } else {
        y_hat = model::regress_load(store, cfg, zs[i], nullptr);
      }
      accumulate(mae_sum,
                 nn::mul_scalar(nn::mae_loss(y_hat, load_targets[i]), draw_w));
    }
  }

  ElboGraph<T> out;
  out.parts.recon_mse = static_cast<double>(recon_sum->val[0]);
  out.parts.style_ce = styled ? static_cast<double>(ce_sum->val[0]) : 0.0;
  out.parts.load_mae = static_cast<double>(mae_sum->val[0]);
  out.parts.kl = static_cast<double>(kl_sum->val[0]);
  out.parts.beta = beta;
  detail::check_finite(out.parts.recon_mse, "reconstruction term");
  detail::check_finite(out.parts.style_ce, "style term");
  detail::check_finite(out.parts.load_mae, "load term");
  detail::check_finite(out.parts.kl, "kl term");

  auto total = nn::add(recon_sum, mae_sum);
  if (styled) total = nn::add(total, ce_sum);
  total = nn::add(total, nn::mul_scalar(kl_sum, static_cast<T>(beta)));
  out.parts.total = static_cast<double>(total->val[0]);
  detail::check_finite(out.parts.total, "total");
  out.total = total;
  return out;
}

}  // namespace auxvae::objective
