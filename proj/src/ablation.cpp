#include "auxvae/ablation.hpp"

#include <set>
#include <stdexcept>

namespace auxvae::ablate {

model::ModelConfig build_variant(const model::ModelConfig& base,
                                 const model::AblationSetting& setting) {
  model::ModelConfig cfg = base;
  cfg.setting = setting;
  cfg.validate();
  return cfg;
}

std::vector<AblationRow> run_ablation(
    const std::vector<data::ParticipantRecord>& dataset,
    const model::ModelConfig& base, const train::TrainConfig& tcfg,
    const infer::InferenceConfig& icfg, const train::RunContext& ctx,
    const std::vector<std::string>& setting_names) {
  if (setting_names.empty())
    throw std::invalid_argument("run_ablation: no settings requested");
  std::set<std::string> seen;
  std::vector<model::ModelConfig> variants;
  for (const auto& name : setting_names) {
    if (!seen.insert(name).second)
      throw std::invalid_argument("run_ablation: duplicate setting: " + name);
    variants.push_back(build_variant(base, model::setting_by_name(name)));
  }

  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    AblationRow row;
    row.setting_name = setting_names[i];
    row.summary = train::run_lopo(dataset, variants[i], tcfg, icfg, ctx);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace auxvae::ablate
