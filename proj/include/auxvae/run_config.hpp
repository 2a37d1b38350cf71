#pragma once

// Declarative run configuration.
//
// One JSON document drives every subcommand. Parsing is strict: an unknown
// field anywhere fails with its dotted path, and every value is type-checked.
// The resolved document (defaults applied, overrides applied, paths excluded)
// is serialized canonically and hashed; that hash is embedded in every
// artifact and checked when artifacts are consumed, so a checkpoint trained
// under one configuration cannot silently be evaluated under another.
//
// Command-line overrides exist for paths, the seed, the epoch budget, and
// the fold cap only. The AUXVAE_OUT_DIR environment variable overrides the
// output directory (flag beats environment beats file).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "auxvae/data.hpp"
#include "auxvae/inference.hpp"
#include "auxvae/model.hpp"
#include "auxvae/synth.hpp"
#include "auxvae/training.hpp"

namespace auxvae::cli {

inline constexpr const char* kCodeVersion = "auxvae 0.1.0";

struct RunPaths {
  std::string data_dir = "data";
  std::string out_dir = "out";
  std::string checkpoint_dir;  // resolved to <out_dir>/checkpoints if empty
};

struct RunConfig {
  std::uint64_t seed = 0;
  RunPaths paths;
  synth::SynthConfig synth;   // seed mirrors the global seed
  int synth_window_steps = 800;
  data::SensorLayout layout;  // channels and rate of generated data
  model::ModelConfig model;   // channel/style counts are set from the dataset
  train::TrainConfig train;   // seed mirrors the global seed
  infer::InferenceConfig inference;
  std::vector<std::string> ablation;
  std::string config_hash;    // 16 hex digits over the canonical document
};

struct CliOverrides {
  std::optional<std::string> data_dir;
  std::optional<std::string> out_dir;
  std::optional<std::string> checkpoint_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<int> folds;
};

// Parses a JSON document (empty string means "all defaults"), applies
// overrides, and computes the config hash.
RunConfig parse_run_config(const std::string& json_text,
                           const CliOverrides& overrides = {});

// Same, reading the document from a file.
RunConfig load_run_config(const std::string& path,
                          const CliOverrides& overrides = {});

// The canonical resolved document the hash is computed over.
std::string canonical_config_text(const RunConfig& cfg);

std::string hash_hex(std::uint64_t h);

}  // namespace auxvae::cli
