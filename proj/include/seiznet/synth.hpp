#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "seiznet/containers.hpp"
#include "seiznet/rng.hpp"
#include "seiznet/signal.hpp"

namespace seiznet {

struct SyntheticCohort {
  std::size_t neonates = 4;
  std::size_t channels = 8;
  double duration_s = 3600.0;
  double prevalence = 1.0 / 51.0;  // fraction of seconds inside a seizure
  double rate = 64.0;              // 64, 200, 256 or 500
  double freq_lo = 1.0;            // seizure rhythm band, Hz
  double freq_hi = 4.0;
  double amplitude_uv = 80.0;      // envelope at the end of an event
  double amplitude_growth = 3.0;   // end / start envelope ratio
  double participation = 0.6;      // chance a non-lead channel joins an event
  double stagger_s = 6.0;          // max onset delay / early stop per channel
  double min_event_s = 10.0;
  double max_event_s = 120.0;
  double min_gap_s = 30.0;
  double background_uv = 20.0;
  std::uint64_t seed = 0;

  /// Rejects settings whose seizure time cannot be laid out in the duration.
  void validate() const;
};

struct SyntheticNeonate {
  Recording recording;
  EventTable annotations;    // per-channel rows, annotator "synth"
  std::vector<Event> global; // union over channels
};

/// Rhythmic bursts with growing amplitude on 1/f background. Events are
/// whole seconds; each global event has one lead channel spanning all of it.
std::vector<SyntheticNeonate> synth_generate(const SyntheticCohort& config);

/// JSON object with any subset of the SyntheticCohort fields.
SyntheticCohort parse_cohort_config(std::string_view json_text);

/// Writes <out>/<id>/ containers with annotations.csv.
void write_cohort(const std::filesystem::path& out, const std::vector<SyntheticNeonate>& cohort);

/// Unit-variance 1/f noise.
std::vector<double> pink_noise(std::size_t n, Rng& rng);

/// Segments that carry a 10 Hz burst of 8-16 s (seizure) or only background.
/// Segment i belongs to pseudo-neonate i mod neonates.
struct SeparableTask {
  std::size_t seizure = 500;
  std::size_t non_seizure = 25000;
  double burst_hz = 10.0;
  double burst_uv = 40.0;
  double noise_uv = 20.0;
  std::size_t neonates = 10;
  std::uint64_t seed = 0;
};
SegmentDataset separable_segments(const SeparableTask& task);

}  // namespace seiznet
