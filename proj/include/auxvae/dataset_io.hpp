#pragma once

// On-disk dataset format.
//
// A dataset directory contains metadata.json plus one raw window file per
// gait window:
//
//   <dir>/metadata.json
//   <dir>/windows/<participant>_baseline.f32
//   <dir>/windows/<participant>_<trial>.f32
//
// Window files are little-endian float32, row-major (time x channels), with
// no header; metadata.json records shapes, labels, provenance (seed, config
// hash, code version) and the canonical style-name table. Loading validates
// file sizes against the declared shapes.

#include <cstdint>
#include <string>
#include <vector>

#include "auxvae/data.hpp"

namespace auxvae::data {

struct DatasetMeta {
  int schema_version = 1;
  std::string code_version;
  std::string config_hash;
  std::uint64_t seed = 0;
  SensorLayout layout;
  int num_styles = 4;
  std::vector<std::string> styles;  // filled from style_names(num_styles)
};

struct LoadedDataset {
  DatasetMeta meta;
  std::vector<ParticipantRecord> records;
};

void write_dataset(const std::string& dir,
                   const std::vector<ParticipantRecord>& records,
                   const DatasetMeta& meta);

LoadedDataset load_dataset(const std::string& dir);

}  // namespace auxvae::data
