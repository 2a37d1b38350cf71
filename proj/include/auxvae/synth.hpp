#pragma once

// Synthetic gait generator.
//
// Produces sinusoid-plus-noise walking data with a known causal structure so
// that load estimation has a recoverable signal: carrying weight slows the
// stride and attenuates movement amplitude, and each carrying style boosts a
// different contiguous block of channels (asymmetry). Person-specific traits
// (stride frequency, per-channel amplitude and phase, noise level) are drawn
// once per participant, which is exactly the confound the auxiliary unloaded
// baseline is meant to remove.
//
// Channel c of a participant walking with load y in style q at step t:
//
//   amp[c] / (1 + amp_atten_per_lb * y) * g(c, q)
//       * sin(2*pi * f / (1 + cadence_slow_per_lb * y) * t / rate + phase[c])
//       + noise_std_person * N(0, 1)
//
// where g(c, q) = 1 + style_asym_gain on the q-th block of channels and 1
// elsewhere. Load 0 with gain 0 reduces to the unloaded baseline recipe, and
// with identical seeds produces bit-identical windows.

#include <cstdint>
#include <vector>

#include "auxvae/data.hpp"
#include "auxvae/rng.hpp"

namespace auxvae::synth {

struct PersonTraits {
  double stride_freq_hz = 1.0;        // [0.7, 1.2]
  std::vector<double> amp_scale;      // per channel, [0.5, 1.5]
  std::vector<double> phase_offset;   // per channel, [0, 2*pi)
  double noise_std = 0.05;
};

struct SynthConfig {
  int num_participants = 22;
  int trials_per_condition = 1;
  std::vector<double> load_levels_lbs{10.0, 20.0, 30.0, 50.0};
  int num_styles = 4;
  double cadence_slow_per_lb = 0.002;
  double amp_atten_per_lb = 0.004;
  double style_asym_gain = 0.3;
  double noise_std = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

PersonTraits sample_traits(const data::SensorLayout& layout, double noise_std,
                           Rng& rng);

data::GaitWindow generate_baseline(const PersonTraits& traits,
                                   const data::SensorLayout& layout,
                                   int time_steps, std::uint64_t noise_seed);

data::GaitWindow generate_loaded(const PersonTraits& traits,
                                 const data::SensorLayout& layout,
                                 int time_steps, double load_lbs,
                                 const data::CarryStyle& style,
                                 const SynthConfig& cfg,
                                 std::uint64_t noise_seed);

// Full factorial dataset: every participant walks every (load x style)
// condition trials_per_condition times, plus one unloaded baseline.
// Participant i derives its own seed from (cfg.seed, i); windows derive
// further seeds per trial, so any subset regenerates identically.
std::vector<data::ParticipantRecord> generate_dataset(
    const SynthConfig& cfg, const data::SensorLayout& layout, int time_steps);

}  // namespace auxvae::synth
