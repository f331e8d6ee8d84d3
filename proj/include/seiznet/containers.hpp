#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seiznet/signal.hpp"

namespace seiznet {

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);
/// Strict decimal parse; throws with `context` in the message on failure.
double parse_number(std::string_view text, std::string_view context);

// ---- recording container -------------------------------------------------
//
// <dir>/meta          JSON: id, rate, channels (names), duration_s, optional subject
// <dir>/chNN.f32      one file per channel, little-endian float32 microvolts
// <dir>/annotations.csv  optional

Recording read_recording(const std::filesystem::path& dir);
void write_recording(const std::filesystem::path& dir, const Recording& rec);
bool is_recording_dir(const std::filesystem::path& dir);
/// `root` itself if it is a container, otherwise its container
/// subdirectories in name order.
std::vector<std::filesystem::path> list_recordings(const std::filesystem::path& root);

// ---- event tables --------------------------------------------------------
//
// CSV with header containing channel,onset_s,offset_s and optionally
// recording and annotator columns. channel "*" marks a global event.
// Leading "# key=value ..." lines carry metadata such as duration_s.

inline constexpr std::string_view kGlobalChannel = "*";

struct AnnotationRow {
  std::string recording;
  std::string annotator;
  std::string channel;
  Event event;

  friend bool operator==(const AnnotationRow&, const AnnotationRow&) = default;
};

struct EventTable {
  std::map<std::string, std::string> meta;
  std::vector<AnnotationRow> rows;
  bool has_recording_column = false;
  bool has_annotator_column = false;

  std::vector<std::string> annotators() const;
  std::vector<std::string> recordings() const;
  /// Rows of one recording; an empty id matches rows without a recording.
  EventTable for_recording(std::string_view id) const;
  EventTable for_annotator(std::string_view name) const;
};

EventTable parse_event_csv(std::string_view text, std::string_view source = "<memory>");
EventTable read_event_csv(const std::filesystem::path& path);
std::string format_event_csv(const EventTable& table);
void write_event_csv(const std::filesystem::path& path, const EventTable& table);

/// Merged events per recording channel: the channel's own rows plus global rows.
std::vector<std::vector<Event>> channel_events(const EventTable& table,
                                               std::span<const std::string> channel_names);
/// Union over all channels and global rows.
std::vector<Event> global_events(const EventTable& table);

/// Parses "# key=value key=value" lines.
std::map<std::string, std::string> parse_meta_line(std::string_view line);
std::string format_meta_line(const std::map<std::string, std::string>& meta);

// ---- labeled segment sets ------------------------------------------------
//
// <dir>/segments.csv  index,recording,channel,start_s,label,valid,reason
// <dir>/segments.f32  segment samples back to back, little-endian float32

struct SegmentInfo {
  std::string recording;
  std::size_t channel = 0;
  double start = 0.0;
  bool seizure = false;
  bool valid = true;
  std::string reason;
};

struct SegmentDataset {
  std::size_t length = kSegmentSamples;
  std::vector<float> samples;
  std::vector<SegmentInfo> info;

  std::size_t size() const { return info.size(); }
  std::span<const float> segment(std::size_t i) const {
    return {samples.data() + i * length, length};
  }
  bool label(std::size_t i) const { return info[i].seizure; }
  void add(std::span<const double> x, SegmentInfo meta);
  std::size_t count(bool seizure) const;
};

void write_segment_dataset(const std::filesystem::path& dir, const SegmentDataset& data);
/// Loads a segment set; invalid segments are skipped unless `keep_invalid`.
SegmentDataset read_segment_dataset(const std::filesystem::path& dir, bool keep_invalid = false);

/// Little-endian float32 file helpers.
void write_f32(const std::filesystem::path& path, std::span<const float> values);
std::vector<float> read_f32(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Comma-separated fields of one line (no quoting support).
std::vector<std::string> split_csv(std::string_view line);

}  // namespace seiznet
