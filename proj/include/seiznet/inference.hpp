#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seiznet/containers.hpp"
#include "seiznet/metrics.hpp"
#include "seiznet/model.hpp"
#include "seiznet/signal.hpp"

namespace seiznet {

inline constexpr double kInferenceStepSeconds = 0.25;
inline constexpr std::size_t kInferenceStepSamples = 16;
inline constexpr double kTraceRate = 4.0;
inline constexpr std::size_t kSmoothingTaps = 128;  // 32 s at 4 Hz
inline constexpr double kDefaultThreshold = 0.5;

/// floor((T - 16) / 0.25) + 1 for T >= 16, else 0.
std::size_t inference_window_count(double duration);
/// Center time of window w: 8 + 0.25 w seconds.
double window_center(std::size_t w);
/// ceil(4 T): one 4 Hz point per started quarter second of the recording.
std::size_t grid_length(double duration);

/// Raw window outputs of one recording, one series per channel.
struct PredictionTrace {
  std::string recording;
  double duration = 0.0;
  std::vector<std::string> channels;
  std::vector<std::vector<double>> probability;  // [channel][window]
  std::vector<Mask> valid;                        // [channel][window]

  std::size_t window_count() const { return probability.empty() ? 0 : probability.front().size(); }
  /// Channel c on the full 4 Hz grid. Points within 8 s of an edge hold the
  /// nearest window's value. Empty when there are no windows.
  std::vector<double> grid(std::size_t channel) const;
};

/// Grid point j takes window clamp(j - 32, 0, windows - 1).
std::vector<double> hold_extend(std::span<const double> windows, std::size_t grid_points);

/// Runs the model on every 16 s window of every channel of a 64 Hz
/// recording, stepping 16 samples. Windows failing the artifact check get
/// probability 0 and valid = 0.
PredictionTrace sliding_predict(const ModelParams& params, const Recording& rec);

/// Centered moving average. Output i averages inputs i - taps/2 .. i + taps/2 - 1
/// that exist, divided by how many exist.
std::vector<double> smooth(std::span<const double> trace, std::size_t taps = kSmoothingTaps);

/// Instantwise maximum over equally long series.
std::vector<double> channel_max(const std::vector<std::vector<double>>& series);

/// 1 s mask of a 4 Hz series: second i is positive iff any of its points is
/// >= threshold. Length is mask_length(duration).
Mask threshold_mask(std::span<const double> grid, double duration, double threshold = kDefaultThreshold);
/// Mean of each second's 4 Hz points.
std::vector<double> per_second_mean(std::span<const double> grid, double duration);

/// Smoothed 4 Hz series per channel.
std::vector<std::vector<double>> smoothed_channels(const PredictionTrace& trace);

/// Per-channel events after smoothing and thresholding.
std::vector<std::vector<Event>> binarize(const PredictionTrace& trace, double threshold = kDefaultThreshold);
/// Events of the channel-max of the smoothed channels.
std::vector<Event> globalize(const PredictionTrace& trace, double threshold = kDefaultThreshold);

/// Global 1 s series used by the metrics: per-second mean probability and mask.
struct GlobalDecision {
  std::vector<double> probability;
  Mask mask;
};
GlobalDecision global_decision(const PredictionTrace& trace, double threshold = kDefaultThreshold);

// ---- files ---------------------------------------------------------------
//
// Prediction CSV: header channel,t_s,probability,valid with one row per
// channel and window (t_s = window center). A "recording" column is added
// when several recordings share a file. Durations travel in leading
// metadata lines: "# recording=<id> duration_s=<T>" for a single recording,
// "# duration_s.<id>=<T>" per recording otherwise.

std::string format_prediction_csv(const std::vector<PredictionTrace>& traces);
std::vector<PredictionTrace> parse_prediction_csv(std::string_view text, std::string_view source = "<memory>");
std::vector<PredictionTrace> read_prediction_csv(const std::filesystem::path& path);
void write_prediction_csv(const std::filesystem::path& path, const std::vector<PredictionTrace>& traces);

/// channel,onset_s,offset_s rows (channel "*" for global events) with the
/// same metadata convention.
EventTable decision_events(const std::vector<PredictionTrace>& traces, double threshold = kDefaultThreshold);

/// Duration declared for recording `id` in an event table's metadata.
std::optional<double> declared_duration(const EventTable& table, std::string_view id);
void declare_duration(EventTable& table, std::string_view id, double duration, bool multiple);

}  // namespace seiznet
