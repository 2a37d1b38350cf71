#pragma once

// Core data types for gait windows and study structure, plus the
// preprocessing that every training fold applies: temporal resampling,
// per-channel z-normalization, and leave-one-participant-out splits.
//
// Windows hold doubles in memory; the on-disk format (dataset_io) is float32.

#include <cstdint>
#include <string>
#include <vector>

namespace auxvae::data {

// Canonical carrying-style order. Index into this array is the class label
// used everywhere (one-hot encodings, classifier outputs, metadata).
std::vector<std::string> style_names(int num_styles);

struct SensorLayout {
  int num_channels = 72;
  double sample_rate_hz = 80.0;
  std::vector<std::string> channel_names;  // optional; sized or empty

  void validate() const;
};

// One fixed-length multichannel time series, row-major (time x channels).
struct GaitWindow {
  int time_steps = 0;
  int num_channels = 0;
  std::vector<double> values;

  double at(int t, int c) const {
    return values[static_cast<std::size_t>(t) * num_channels + c];
  }
  double& at(int t, int c) {
    return values[static_cast<std::size_t>(t) * num_channels + c];
  }

  void validate() const;  // shape consistency and finiteness
};

GaitWindow make_window(int time_steps, int num_channels);

struct CarryStyle {
  int index = 0;       // in [0, num_styles)
  int num_styles = 4;

  std::vector<double> one_hot() const;
  std::string name() const;
};

CarryStyle style_from_one_hot(const std::vector<double>& v);

// One loaded-walking trial with its ground truth.
struct TrialSample {
  std::string participant_id;
  std::string trial_id;
  GaitWindow loaded_gait;
  double load_lbs = 0.0;
  CarryStyle style;
};

// A participant: one unloaded baseline window plus all loaded trials.
struct ParticipantRecord {
  std::string participant_id;
  GaitWindow baseline_gait;
  std::vector<TrialSample> trials;
};

// Per-channel mean and standard deviation (population, floored at 1e-6).
struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct FoldSplit {
  std::string held_out_participant;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;  // exactly the held-out participant
};

// Linear interpolation onto target_len evenly spaced points covering the
// full original span (endpoints map to endpoints). target_len == time_steps
// returns the window unchanged.
GaitWindow resample_to_length(const GaitWindow& w, int target_len);

// Pools every window of the given records: all loaded trials and all
// baselines. Call with the training participants of a fold only; mixing in
// held-out participants leaks test statistics into preprocessing.
NormalizationStats fit_normalization(const std::vector<ParticipantRecord>& records);

GaitWindow apply_normalization(const GaitWindow& w, const NormalizationStats& s);
GaitWindow invert_normalization(const GaitWindow& w, const NormalizationStats& s);

// One fold per participant, in dataset order.
std::vector<FoldSplit> lopo_splits(const std::vector<ParticipantRecord>& records);

}  // namespace auxvae::data
