#pragma once

// Wiring comparison harness.
//
// Runs the same cross-validation protocol once per model wiring, holding the
// data, the training configuration, and the seed fixed. Because parameter
// initialization depends only on (derived seed, parameter path), wirings that
// share a submodule start it from bit-identical weights, so differences in
// the results table are attributable to the wiring alone.

#include <string>
#include <vector>

#include "auxvae/model.hpp"
#include "auxvae/training.hpp"

namespace auxvae::ablate {

// Base config with only the wiring swapped out.
model::ModelConfig build_variant(const model::ModelConfig& base,
                                 const model::AblationSetting& setting);

struct AblationRow {
  std::string setting_name;
  train::LopoSummary summary;
};

// One row per requested setting name, in the given order. Names must be
// registered and unique.
std::vector<AblationRow> run_ablation(
    const std::vector<data::ParticipantRecord>& dataset,
    const model::ModelConfig& base, const train::TrainConfig& tcfg,
    const infer::InferenceConfig& icfg, const train::RunContext& ctx,
    const std::vector<std::string>& setting_names);

}  // namespace auxvae::ablate
