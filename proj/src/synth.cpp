#include "auxvae/synth.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace auxvae::synth {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

// Contiguous channel block boosted by style q: [q*C/L, (q+1)*C/L).
struct ChannelBlock {
  int begin, end;
};

ChannelBlock style_block(int style, int num_styles, int num_channels) {
  return {style * num_channels / num_styles,
          (style + 1) * num_channels / num_styles};
}

data::GaitWindow generate(const PersonTraits& traits,
                          const data::SensorLayout& layout, int time_steps,
                          double load_lbs, int style, int num_styles,
                          double cadence_slow_per_lb, double amp_atten_per_lb,
                          double style_asym_gain, std::uint64_t noise_seed) {
  layout.validate();
  if (time_steps <= 0)
    throw std::invalid_argument("synth: time_steps must be positive");
  if (static_cast<int>(traits.amp_scale.size()) != layout.num_channels ||
      static_cast<int>(traits.phase_offset.size()) != layout.num_channels)
    throw std::invalid_argument("synth: traits sized for different layout");
  if (load_lbs < 0.0)
    throw std::invalid_argument("synth: load must be non-negative");

  double freq = traits.stride_freq_hz / (1.0 + cadence_slow_per_lb * load_lbs);
  double atten = 1.0 / (1.0 + amp_atten_per_lb * load_lbs);
  ChannelBlock block = style_block(style, num_styles, layout.num_channels);

  Rng noise(noise_seed);
  data::GaitWindow w = data::make_window(time_steps, layout.num_channels);
  for (int t = 0; t < time_steps; ++t) {
    double phase_t = kTwoPi * freq * t / layout.sample_rate_hz;
    for (int c = 0; c < layout.num_channels; ++c) {
      double amp = traits.amp_scale[c] * atten;
      if (c >= block.begin && c < block.end) amp *= 1.0 + style_asym_gain;
      w.at(t, c) = amp * std::sin(phase_t + traits.phase_offset[c]) +
                   traits.noise_std * noise.normal();
    }
  }
  return w;
}

}  // namespace

void SynthConfig::validate() const {
  if (num_participants <= 0)
    throw std::invalid_argument("SynthConfig: num_participants must be positive");
  if (trials_per_condition <= 0)
    throw std::invalid_argument(
        "SynthConfig: trials_per_condition must be positive");
  if (load_levels_lbs.empty())
    throw std::invalid_argument("SynthConfig: load_levels_lbs must be non-empty");
  for (double l : load_levels_lbs)
    if (!(l > 0.0))
      throw std::invalid_argument("SynthConfig: load levels must be positive");
  if (num_styles <= 0)
    throw std::invalid_argument("SynthConfig: num_styles must be positive");
  if (cadence_slow_per_lb < 0.0 || amp_atten_per_lb < 0.0)
    throw std::invalid_argument("SynthConfig: per-lb effects must be >= 0");
  if (style_asym_gain < 0.0)
    throw std::invalid_argument("SynthConfig: style_asym_gain must be >= 0");
  if (noise_std < 0.0)
    throw std::invalid_argument("SynthConfig: noise_std must be >= 0");
}

PersonTraits sample_traits(const data::SensorLayout& layout, double noise_std,
                           Rng& rng) {
  layout.validate();
  PersonTraits t;
  t.stride_freq_hz = rng.uniform(0.7, 1.2);
  t.amp_scale.resize(layout.num_channels);
  t.phase_offset.resize(layout.num_channels);
  for (int c = 0; c < layout.num_channels; ++c)
    t.amp_scale[c] = rng.uniform(0.5, 1.5);
  for (int c = 0; c < layout.num_channels; ++c)
    t.phase_offset[c] = rng.uniform(0.0, kTwoPi);
  t.noise_std = noise_std;
  return t;
}

data::GaitWindow generate_baseline(const PersonTraits& traits,
                                   const data::SensorLayout& layout,
                                   int time_steps, std::uint64_t noise_seed) {
  // Load 0 and style gain 0: the loaded recipe degenerates to the baseline.
  return generate(traits, layout, time_steps, 0.0, 0, 1, 0.0, 0.0, 0.0,
                  noise_seed);
}

data::GaitWindow generate_loaded(const PersonTraits& traits,
                                 const data::SensorLayout& layout,
                                 int time_steps, double load_lbs,
                                 const data::CarryStyle& style,
                                 const SynthConfig& cfg,
                                 std::uint64_t noise_seed) {
  cfg.validate();
  if (style.index < 0 || style.index >= cfg.num_styles)
    throw std::invalid_argument("generate_loaded: style index out of range");
  return generate(traits, layout, time_steps, load_lbs, style.index,
                  cfg.num_styles, cfg.cadence_slow_per_lb,
                  cfg.amp_atten_per_lb, cfg.style_asym_gain, noise_seed);
}

std::vector<data::ParticipantRecord> generate_dataset(
    const SynthConfig& cfg, const data::SensorLayout& layout, int time_steps) {
  cfg.validate();
  layout.validate();
  std::vector<data::ParticipantRecord> records;
  records.reserve(cfg.num_participants);
  char idbuf[16];

  for (int i = 0; i < cfg.num_participants; ++i) {
    std::uint64_t pseed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
    Rng traits_rng(derive_seed(pseed, "traits"));
    PersonTraits traits = sample_traits(layout, cfg.noise_std, traits_rng);

    data::ParticipantRecord rec;
    std::snprintf(idbuf, sizeof(idbuf), "p%02d", i);
    rec.participant_id = idbuf;
    rec.baseline_gait = generate_baseline(traits, layout, time_steps,
                                          derive_seed(pseed, "baseline"));

    int trial_index = 0;
    for (double load : cfg.load_levels_lbs)
      for (int s = 0; s < cfg.num_styles; ++s)
        for (int k = 0; k < cfg.trials_per_condition; ++k) {
          data::TrialSample trial;
          trial.participant_id = rec.participant_id;
          std::snprintf(idbuf, sizeof(idbuf), "t%03d", trial_index);
          trial.trial_id = idbuf;
          trial.style = data::CarryStyle{s, cfg.num_styles};
          trial.load_lbs = load;
          trial.loaded_gait = generate_loaded(
              traits, layout, time_steps, load, trial.style, cfg,
              derive_seed(pseed, static_cast<std::uint64_t>(trial_index)));
          rec.trials.push_back(std::move(trial));
          ++trial_index;
        }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace auxvae::synth
