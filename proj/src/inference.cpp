#include "auxvae/inference.hpp"

#include <cmath>
#include <stdexcept>

#include "auxvae/ops.hpp"
#include "auxvae/rng.hpp"

namespace auxvae::infer {

nn::Tensor<float> window_to_tensor(const data::GaitWindow& w) {
  auto t = nn::tensor<float>(w.time_steps, w.num_channels);
  for (std::size_t i = 0; i < w.values.size(); ++i)
    t->val[i] = static_cast<float>(w.values[i]);
  return t;
}

namespace {

int argmax_first(const std::vector<double>& v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace

double marginalize(const std::vector<double>& pi,
                   const std::vector<double>& mu) {
  if (pi.size() != mu.size() || pi.empty())
    throw std::invalid_argument("marginalize: length mismatch");
  double sum = 0.0, y = 0.0;
  for (std::size_t l = 0; l < pi.size(); ++l) {
    if (pi[l] < 0.0)
      throw std::invalid_argument("marginalize: negative probability");
    sum += pi[l];
    y += pi[l] * mu[l];
  }
  if (std::abs(sum - 1.0) > 1e-4)
    throw std::invalid_argument("marginalize: probabilities must sum to 1");
  return y;
}

Prediction predict_load(nn::ParamStore<float>& store,
                        const model::ModelConfig& cfg,
                        const data::GaitWindow& x, const data::GaitWindow& x_aux,
                        const InferenceConfig& icfg, std::uint64_t seed) {
  if (icfg.num_latent_samples < 1)
    throw std::invalid_argument("predict_load: need at least 1 latent sample");
  auto xt = window_to_tensor(x);
  nn::Tensor<float> xa;
  if (cfg.setting.use_aux_input) xa = window_to_tensor(x_aux);

  auto enc = model::encode(store, cfg, xt, xa, /*train=*/false);
  bool styled = cfg.setting.use_aux_output;
  int draws = icfg.deterministic_latent ? 1 : icfg.num_latent_samples;

  Rng rng(seed);
  Prediction out;
  if (styled) out.style_probs.assign(cfg.num_styles, 0.0);
  double y_acc = 0.0;

  for (int s = 0; s < draws; ++s) {
    nn::Tensor<float> z;
    if (icfg.deterministic_latent)
      z = enc.mu;
    else
      z = nn::reparameterize(enc.mu, enc.sigma, rng);

    if (styled) {
      auto pi = model::classify_style(store, cfg, z);
      std::vector<double> pi_d(cfg.num_styles), mu_d(cfg.num_styles);
      for (int l = 0; l < cfg.num_styles; ++l) {
        pi_d[l] = static_cast<double>(pi->val[l]);
        auto onehot = nn::tensor<float>(1, cfg.num_styles);
        onehot->val[l] = 1.0f;
        mu_d[l] = static_cast<double>(
            model::regress_load(store, cfg, z, onehot)->val[0]);
        out.style_probs[l] += pi_d[l] / draws;
      }
      y_acc += marginalize(pi_d, mu_d);
    } else {
      y_acc +=
          static_cast<double>(model::regress_load(store, cfg, z, nullptr)->val[0]);
    }
  }
  out.load_lbs = y_acc / draws;
  return out;
}

EvalReport evaluate(nn::ParamStore<float>& store, const model::ModelConfig& cfg,
                    const std::vector<data::ParticipantRecord>& participants,
                    const data::NormalizationStats& stats,
                    const InferenceConfig& icfg, std::uint64_t seed) {
  EvalReport report;
  report.has_style = cfg.setting.use_aux_output;
  double abs_err = 0.0;
  int correct = 0;
  std::uint64_t trial_index = 0;

  for (const auto& rec : participants) {
    auto aux = data::apply_normalization(
        data::resample_to_length(rec.baseline_gait, cfg.aux_len), stats);
    for (const auto& trial : rec.trials) {
      auto x = data::apply_normalization(
          data::resample_to_length(trial.loaded_gait, cfg.input_len), stats);
      auto pred = predict_load(store, cfg, x, aux, icfg,
                               derive_seed(seed, trial_index));
      ++trial_index;

      TrialPrediction tp;
      tp.participant_id = trial.participant_id;
      tp.trial_id = trial.trial_id;
      tp.load_true = trial.load_lbs;
      tp.load_pred = pred.load_lbs;
      tp.style_true = trial.style.index;
      if (report.has_style) {
        tp.style_pred = argmax_first(pred.style_probs);
        if (tp.style_pred == tp.style_true) ++correct;
      }
      abs_err += std::abs(tp.load_pred - tp.load_true);
      report.trials.push_back(std::move(tp));
    }
  }
  if (report.trials.empty())
    throw std::invalid_argument("evaluate: no trials to evaluate");
  report.mae_lbs = abs_err / static_cast<double>(report.trials.size());
  report.style_accuracy =
      report.has_style
          ? static_cast<double>(correct) / static_cast<double>(report.trials.size())
          : std::nan("");
  return report;
}

}  // namespace auxvae::infer
