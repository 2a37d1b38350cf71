#pragma once

// Inference: load prediction with carrying style marginalized out.
//
// The true style is never an input here. For each of S latent draws from the
// posterior, the classifier produces a style distribution pi and the
// regressor is evaluated once per candidate style with that style's one-hot;
// the estimate is the expectation
//
//   y_hat = (1/S) * sum_s sum_l pi[s][l] * mu_y[s][l]
//
// accumulated in double precision. Wirings without a style head reduce to
// y_hat = (1/S) * sum_s regressor(z_s).
//
// Batch norm runs in eval mode (running statistics, nothing mutated), so
// prediction is a pure function of checkpoint, inputs, and seed.

#include <cstdint>
#include <string>
#include <vector>

#include "auxvae/data.hpp"
#include "auxvae/model.hpp"
#include "auxvae/param_store.hpp"

namespace auxvae::infer {

struct InferenceConfig {
  int num_latent_samples = 16;
  // Use the posterior mean instead of sampling (single deterministic pass).
  bool deterministic_latent = false;
};

// Raw copy into the float tensor layout the model consumes.
nn::Tensor<float> window_to_tensor(const data::GaitWindow& w);

struct Prediction {
  double load_lbs = 0.0;
  // Mean classifier distribution over styles; empty without a style head.
  std::vector<double> style_probs;
};

// Mixture mean for one latent draw. Accepts any matching lengths; pi must be
// non-negative and sum to 1 within 1e-4.
double marginalize(const std::vector<double>& pi, const std::vector<double>& mu);

// x / x_aux are normalized windows (the same preprocessing as training).
// x_aux is ignored by wirings that do not use the auxiliary stream.
Prediction predict_load(nn::ParamStore<float>& store,
                        const model::ModelConfig& cfg,
                        const data::GaitWindow& x, const data::GaitWindow& x_aux,
                        const InferenceConfig& icfg, std::uint64_t seed);

struct TrialPrediction {
  std::string participant_id;
  std::string trial_id;
  double load_true = 0.0;
  double load_pred = 0.0;
  int style_true = -1;
  int style_pred = -1;  // -1 when the wiring has no style head
};

struct EvalReport {
  double mae_lbs = 0.0;
  double style_accuracy = 0.0;  // meaningful only when has_style
  bool has_style = false;
  std::vector<TrialPrediction> trials;
};

// Evaluates every trial of the given participants: resamples to the model's
// window lengths, normalizes with `stats` (the training fold's statistics),
// and predicts with a per-trial derived seed. True styles are used only to
// score accuracy, never as model input.
EvalReport evaluate(nn::ParamStore<float>& store, const model::ModelConfig& cfg,
                    const std::vector<data::ParticipantRecord>& participants,
                    const data::NormalizationStats& stats,
                    const InferenceConfig& icfg, std::uint64_t seed);

}  // namespace auxvae::infer
