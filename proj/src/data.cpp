#include "auxvae/data.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace auxvae::data {

namespace {
constexpr double kStdFloor = 1e-6;

const char* kCanonicalStyles[4] = {
    "one_handed_right",
    "one_handed_left",
    "two_handed_side",
    "two_handed_anterior",
};
}  // namespace

std::vector<std::string> style_names(int num_styles) {
  if (num_styles <= 0)
    throw std::invalid_argument("style_names: num_styles must be positive");
  std::vector<std::string> names;
  names.reserve(num_styles);
  for (int i = 0; i < num_styles; ++i) {
    if (num_styles == 4)
      names.emplace_back(kCanonicalStyles[i]);
    else
      names.emplace_back("style_" + std::to_string(i));
  }
  return names;
}

void SensorLayout::validate() const {
  if (num_channels <= 0)
    throw std::invalid_argument("SensorLayout: num_channels must be positive");
  if (!(sample_rate_hz > 0.0))
    throw std::invalid_argument("SensorLayout: sample_rate_hz must be positive");
  if (!channel_names.empty() &&
      static_cast<int>(channel_names.size()) != num_channels)
    throw std::invalid_argument(
        "SensorLayout: channel_names size must match num_channels");
}

void GaitWindow::validate() const {
  if (time_steps <= 0 || num_channels <= 0)
    throw std::invalid_argument("GaitWindow: dimensions must be positive");
  if (values.size() !=
      static_cast<std::size_t>(time_steps) * num_channels)
    throw std::invalid_argument("GaitWindow: value count does not match shape");
  for (double v : values)
    if (!std::isfinite(v))
      throw std::invalid_argument("GaitWindow: values must be finite");
}

GaitWindow make_window(int time_steps, int num_channels) {
  if (time_steps <= 0 || num_channels <= 0)
    throw std::invalid_argument("make_window: dimensions must be positive");
  GaitWindow w;
  w.time_steps = time_steps;
  w.num_channels = num_channels;
  w.values.assign(static_cast<std::size_t>(time_steps) * num_channels, 0.0);
  return w;
}

std::vector<double> CarryStyle::one_hot() const {
  if (index < 0 || index >= num_styles)
    throw std::invalid_argument("CarryStyle: index out of range");
  std::vector<double> v(num_styles, 0.0);
  v[index] = 1.0;
  return v;
}

std::string CarryStyle::name() const { return style_names(num_styles)[index]; }

CarryStyle style_from_one_hot(const std::vector<double>& v) {
  int hot = -1;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 1.0) {
      if (hot >= 0)
        throw std::invalid_argument("style_from_one_hot: multiple hot entries");
      hot = static_cast<int>(i);
    } else if (v[i] != 0.0) {
      throw std::invalid_argument("style_from_one_hot: entries must be 0 or 1");
    }
  }
  if (hot < 0)
    throw std::invalid_argument("style_from_one_hot: no hot entry");
  return CarryStyle{hot, static_cast<int>(v.size())};
}

GaitWindow resample_to_length(const GaitWindow& w, int target_len) {
  w.validate();
  if (target_len <= 0)
    throw std::invalid_argument("resample_to_length: target must be positive");
  if (target_len == w.time_steps) return w;
  if (w.time_steps == 1) {
    // Degenerate source: constant extension.
    GaitWindow out = make_window(target_len, w.num_channels);
    for (int t = 0; t < target_len; ++t)
      for (int c = 0; c < w.num_channels; ++c) out.at(t, c) = w.at(0, c);
    return out;
  }
  GaitWindow out = make_window(target_len, w.num_channels);
  double scale = static_cast<double>(w.time_steps - 1) /
                 (target_len > 1 ? target_len - 1 : 1);
  for (int t = 0; t < target_len; ++t) {
    double pos = t * scale;
    int lo = static_cast<int>(pos);
    if (lo >= w.time_steps - 1) lo = w.time_steps - 2;
    double frac = pos - lo;
    for (int c = 0; c < w.num_channels; ++c)
      out.at(t, c) = (1.0 - frac) * w.at(lo, c) + frac * w.at(lo + 1, c);
  }
  return out;
}

NormalizationStats fit_normalization(
    const std::vector<ParticipantRecord>& records) {
  if (records.empty())
    throw std::invalid_argument("fit_normalization: no records");
  int channels = records[0].baseline_gait.num_channels;
  std::vector<double> sum(channels, 0.0), sum_sq(channels, 0.0);
  std::size_t count = 0;

  auto accumulate = [&](const GaitWindow& w) {
    if (w.num_channels != channels)
      throw std::invalid_argument("fit_normalization: channel count mismatch");
    for (int t = 0; t < w.time_steps; ++t)
      for (int c = 0; c < channels; ++c) {
        double v = w.at(t, c);
        sum[c] += v;
        sum_sq[c] += v * v;
      }
    count += w.time_steps;
  };

  for (const auto& r : records) {
    accumulate(r.baseline_gait);
    for (const auto& t : r.trials) accumulate(t.loaded_gait);
  }
  if (count == 0) throw std::invalid_argument("fit_normalization: no samples");

  NormalizationStats s;
  s.mean.resize(channels);
  s.stddev.resize(channels);
  for (int c = 0; c < channels; ++c) {
    double mu = sum[c] / static_cast<double>(count);
    double var = sum_sq[c] / static_cast<double>(count) - mu * mu;
    if (var < 0.0) var = 0.0;  // guard round-off
    s.mean[c] = mu;
    s.stddev[c] = std::max(std::sqrt(var), kStdFloor);
  }
  return s;
}

GaitWindow apply_normalization(const GaitWindow& w,
                               const NormalizationStats& s) {
  if (static_cast<int>(s.mean.size()) != w.num_channels ||
      static_cast<int>(s.stddev.size()) != w.num_channels)
    throw std::invalid_argument("apply_normalization: stats channel mismatch");
  GaitWindow out = w;
  for (int t = 0; t < w.time_steps; ++t)
    for (int c = 0; c < w.num_channels; ++c)
      out.at(t, c) = (w.at(t, c) - s.mean[c]) / s.stddev[c];
  return out;
}

GaitWindow invert_normalization(const GaitWindow& w,
                                const NormalizationStats& s) {
  if (static_cast<int>(s.mean.size()) != w.num_channels ||
      static_cast<int>(s.stddev.size()) != w.num_channels)
    throw std::invalid_argument("invert_normalization: stats channel mismatch");
  GaitWindow out = w;
  for (int t = 0; t < w.time_steps; ++t)
    for (int c = 0; c < w.num_channels; ++c)
      out.at(t, c) = w.at(t, c) * s.stddev[c] + s.mean[c];
  return out;
}

std::vector<FoldSplit> lopo_splits(
    const std::vector<ParticipantRecord>& records) {
  if (records.size() < 2)
    throw std::invalid_argument("lopo_splits: need at least 2 participants");
  std::vector<FoldSplit> folds;
  folds.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    FoldSplit f;
    f.held_out_participant = records[i].participant_id;
    f.test_ids.push_back(records[i].participant_id);
    for (std::size_t j = 0; j < records.size(); ++j)
      if (j != i) f.train_ids.push_back(records[j].participant_id);
    folds.push_back(std::move(f));
  }
  return folds;
}

}  // namespace auxvae::data
