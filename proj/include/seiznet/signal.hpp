#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace seiznet {

inline constexpr double kModelRate = 64.0;
inline constexpr double kSegmentSeconds = 16.0;
inline constexpr double kSegmentStepSeconds = 4.0;
inline constexpr double kSeizureOverlapSeconds = 8.0;
inline constexpr std::size_t kSegmentSamples = 1024;

/// Half-open time interval [onset, offset) in seconds.
struct Event {
  double onset = 0.0;
  double offset = 0.0;

  double duration() const { return offset - onset; }
  friend bool operator==(const Event&, const Event&) = default;
};

struct Recording {
  std::string id;
  double rate = 0.0;
  std::vector<std::string> channel_names;
  std::vector<std::vector<double>> channels;  // microvolts

  std::size_t channel_count() const { return channels.size(); }
  std::size_t sample_count() const { return channels.empty() ? 0 : channels.front().size(); }
  double duration() const { return rate > 0 ? static_cast<double>(sample_count()) / rate : 0.0; }
};

/// Throws unless all channels share one length, names match channels and
/// the rate is positive.
void check_recording(const Recording& rec);

/// Sorts events and merges any that overlap or touch.
std::vector<Event> merge_events(std::vector<Event> events);
/// Total length of the intersection of `events` with [lo, hi).
double overlap_seconds(std::span<const Event> events, double lo, double hi);

/// Zero-phase 0.3-30 Hz band-pass (4th-order Butterworth sections run
/// forward then backward). Rejects rate <= 60 Hz.
std::vector<double> bandpass(std::span<const double> x, double rate);

/// Rational polyphase resampling to 64 Hz for rates 200, 256 and 500.
/// Output length is round(n * 64 / rate).
std::vector<double> resample_to_64(std::span<const double> x, double rate);

/// Band-pass then resample every channel; 64 Hz input is only filtered.
Recording preprocess(const Recording& raw);

struct ArtifactCheck {
  bool valid = true;
  std::string reason;  // "zero_run", "high_amplitude" or empty
};

/// Invalid if a run of exact zeros lasts at least one second or the
/// population standard deviation exceeds 1000 uV.
ArtifactCheck reject_artifacts(std::span<const double> segment, double rate = kModelRate);

struct LabeledSegment {
  std::size_t channel = 0;
  double start = 0.0;  // seconds
  std::vector<double> samples;
  bool seizure = false;
  bool valid = true;
  std::string reason;
};

/// Number of full windows in `duration` seconds, 0 when shorter than one window.
std::size_t window_count(double duration, double window, double step);

/// seizure iff overlap of [start, start + window) with `events` is >= 8 s.
bool segment_label(std::span<const Event> events, double start,
                   double window = kSegmentSeconds);

/// Cuts each channel of a 64 Hz recording into 16 s windows every 4 s.
/// `channel_events[c]` holds the merged events that apply to channel c.
std::vector<LabeledSegment> segment(const Recording& rec,
                                    const std::vector<std::vector<Event>>& channel_events,
                                    double window = kSegmentSeconds,
                                    double step = kSegmentStepSeconds);

/// Number of 1 s bins covering `duration` (a trailing partial second counts).
std::size_t mask_length(double duration);
/// mask[i] = 1 iff [i, i + 1) intersects an event. Rejects events outside
/// [0, duration].
std::vector<std::uint8_t> events_to_mask(std::span<const Event> events, double duration);
/// Runs of positive seconds as events.
std::vector<Event> mask_to_events(std::span<const std::uint8_t> mask);

}  // namespace seiznet
