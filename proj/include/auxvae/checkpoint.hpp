#pragma once

// Checkpoint serialization.
//
// Single-file binary format:
//
//   bytes 0-11   magic "AUXVAECKPT1\n"
//   bytes 12-19  manifest length (uint64, little endian)
//   manifest     UTF-8 JSON: code version, config hash, store seed, resume
//                epoch, optimizer hyperparameters and step count, and the
//                ordered list of parameter and buffer shapes
//   payload      raw float32 little-endian arrays in manifest order:
//                parameters, Adam first moments, Adam second moments, buffers
//
// A checkpoint restores training exactly: parameters, optimizer moments and
// step count, batch-norm running statistics, and the normalization constants
// (stored as buffers). Loading verifies the magic, the manifest shapes
// against the payload size, and optionally the config hash.

#include <cstdint>
#include <string>

#include "auxvae/adam.hpp"
#include "auxvae/param_store.hpp"

namespace auxvae::ckpt {

struct CheckpointMeta {
  std::string code_version;
  std::string config_hash;
  std::string setting_name;  // model wiring this checkpoint was trained with
  std::string held_out;      // participant excluded from this fold's training
  std::uint64_t store_seed = 0;
  int next_epoch = 0;  // first epoch a resumed run should execute
};

struct Checkpoint {
  nn::ParamStore<float> store;
  nn::AdamState<float> adam;
  CheckpointMeta meta;
};

void save_checkpoint(const std::string& path,
                     const nn::ParamStore<float>& store,
                     const nn::AdamState<float>& adam,
                     const CheckpointMeta& meta);

// expected_config_hash empty skips the hash check.
Checkpoint load_checkpoint(const std::string& path,
                           const std::string& expected_config_hash = "");

}  // namespace auxvae::ckpt
