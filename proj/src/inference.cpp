#include "seiznet/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

namespace seiznet {

namespace {

constexpr double kTol = 1e-9;
constexpr std::size_t kHoldPoints = 32;  // 8 s at 4 Hz

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return out;
}

std::vector<Event> clamp_events(std::vector<Event> events, double duration) {
  for (Event& e : events) e.offset = std::min(e.offset, duration);
  return events;
}

}  // namespace

std::size_t inference_window_count(double duration) {
  return window_count(duration, kSegmentSeconds, kInferenceStepSeconds);
}

double window_center(std::size_t w) {
  return kSegmentSeconds / 2 + kInferenceStepSeconds * static_cast<double>(w);
}

std::size_t grid_length(double duration) {
  if (!(duration > 0)) return 0;
  return static_cast<std::size_t>(std::ceil(duration * kTraceRate - kTol));
}

std::vector<double> hold_extend(std::span<const double> windows, std::size_t grid_points) {
  if (windows.empty()) return {};
  std::vector<double> out(grid_points);
  for (std::size_t j = 0; j < grid_points; ++j) {
    const std::size_t w = j < kHoldPoints ? 0 : std::min(j - kHoldPoints, windows.size() - 1);
    out[j] = windows[w];
  }
  return out;
}

std::vector<double> PredictionTrace::grid(std::size_t channel) const {
  return hold_extend(probability.at(channel), grid_length(duration));
}

PredictionTrace sliding_predict(const ModelParams& params, const Recording& rec) {
  check_recording(rec);
  if (std::abs(rec.rate - kModelRate) > kTol) {
    throw std::invalid_argument("sliding_predict: recording '" + rec.id + "' is at " +
                                format_number(rec.rate) + " Hz, expected 64 Hz");
  }
  const std::size_t len = params.config.input_length;
  if (len != kSegmentSamples) throw std::invalid_argument("sliding_predict: model input must be 1024 samples");
  PredictionTrace t;
  t.recording = rec.id;
  t.duration = rec.duration();
  t.channels = rec.channel_names;
  const std::size_t n = rec.sample_count();
  const std::size_t windows = n < len ? 0 : (n - len) / kInferenceStepSamples + 1;
  t.probability.assign(rec.channel_count(), std::vector<double>(windows, 0.0));
  t.valid.assign(rec.channel_count(), Mask(windows, 0));

  auto run_channel = [&](std::size_t c) {
    const auto& x = rec.channels[c];
    for (std::size_t w = 0; w < windows; ++w) {
      const std::span<const double> seg(x.data() + w * kInferenceStepSamples, len);
      if (!reject_artifacts(seg).valid) continue;
      t.valid[c][w] = 1;
      t.probability[c][w] = forward(params, seg);
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(rec.channel_count(), std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t c = 0; c < rec.channel_count(); ++c) run_channel(c);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < workers; ++k) {
      pool.emplace_back([&, k] {
        for (std::size_t c = k; c < rec.channel_count(); c += workers) run_channel(c);
      });
    }
  }
  return t;
}

std::vector<double> smooth(std::span<const double> trace, std::size_t taps) {
  if (taps == 0) throw std::invalid_argument("smooth: taps must be positive");
  const std::size_t n = trace.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + trace[i];
  const std::size_t before = taps / 2, after = taps - before - 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i < before ? 0 : i - before;
    const std::size_t hi = std::min(n, i + after + 1);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

std::vector<double> channel_max(const std::vector<std::vector<double>>& series) {
  if (series.empty()) return {};
  std::vector<double> out = series.front();
  for (const auto& s : series) {
    if (s.size() != out.size()) throw std::invalid_argument("channel_max: series lengths differ");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], s[i]);
  }
  return out;
}

Mask threshold_mask(std::span<const double> grid, double duration, double threshold) {
  Mask m(mask_length(duration), 0);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const std::size_t s = j / 4;
    if (s < m.size() && grid[j] >= threshold) m[s] = 1;
  }
  return m;
}

std::vector<double> per_second_mean(std::span<const double> grid, double duration) {
  const std::size_t n = mask_length(duration);
  std::vector<double> sum(n, 0.0), count(n, 0.0);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const std::size_t s = j / 4;
    if (s >= n) break;
    sum[s] += grid[j];
    count[s] += 1;
  }
  for (std::size_t s = 0; s < n; ++s) sum[s] = count[s] > 0 ? sum[s] / count[s] : 0.0;
  return sum;
}

std::vector<std::vector<double>> smoothed_channels(const PredictionTrace& trace) {
  std::vector<std::vector<double>> out;
  for (std::size_t c = 0; c < trace.probability.size(); ++c) out.push_back(smooth(trace.grid(c)));
  return out;
}

std::vector<std::vector<Event>> binarize(const PredictionTrace& trace, double threshold) {
  std::vector<std::vector<Event>> out;
  for (const auto& s : smoothed_channels(trace)) {
    out.push_back(clamp_events(mask_to_events(threshold_mask(s, trace.duration, threshold)), trace.duration));
  }
  return out;
}

std::vector<Event> globalize(const PredictionTrace& trace, double threshold) {
  return clamp_events(mask_to_events(global_decision(trace, threshold).mask), trace.duration);
}

GlobalDecision global_decision(const PredictionTrace& trace, double threshold) {
  const auto g = channel_max(smoothed_channels(trace));
  return {per_second_mean(g, trace.duration), threshold_mask(g, trace.duration, threshold)};
}

// ---- files ---------------------------------------------------------------

std::optional<double> declared_duration(const EventTable& table, std::string_view id) {
  const auto& m = table.meta;
  if (auto it = m.find("duration_s." + std::string(id)); it != m.end()) {
    return parse_number(it->second, "duration_s." + std::string(id));
  }
  const auto d = m.find("duration_s");
  if (d == m.end()) return std::nullopt;
  const auto r = m.find("recording");
  if (r != m.end() && !id.empty() && r->second != id) return std::nullopt;
  return parse_number(d->second, "duration_s");
}

void declare_duration(EventTable& table, std::string_view id, double duration, bool multiple) {
  if (multiple) {
    table.meta["duration_s." + std::string(id)] = format_number(duration);
  } else {
    table.meta["recording"] = std::string(id);
    table.meta["duration_s"] = format_number(duration);
  }
}

std::string format_prediction_csv(const std::vector<PredictionTrace>& traces) {
  const bool multiple = traces.size() > 1;
  EventTable meta;
  for (const auto& t : traces) declare_duration(meta, t.recording, t.duration, multiple);
  std::string s;
  if (!meta.meta.empty()) s += format_meta_line(meta.meta) + "\n";
  s += multiple ? "recording,channel,t_s,probability,valid\n" : "channel,t_s,probability,valid\n";
  for (const auto& t : traces) {
    for (std::size_t c = 0; c < t.channels.size(); ++c) {
      for (std::size_t w = 0; w < t.probability[c].size(); ++w) {
        if (multiple) s += t.recording + ",";
        s += t.channels[c] + "," + format_number(window_center(w)) + "," +
             format_number(t.probability[c][w]) + "," + (t.valid[c][w] ? "1" : "0") + "\n";
      }
    }
  }
  return s;
}

std::vector<PredictionTrace> parse_prediction_csv(std::string_view text, std::string_view source) {
  EventTable meta;
  std::vector<std::string> header;
  int col_rec = -1, col_ch = -1, col_t = -1, col_p = -1, col_v = -1;
  std::vector<PredictionTrace> traces;
  std::map<std::string, std::size_t> trace_index;
  std::vector<std::map<std::string, std::size_t>> channel_index;
  std::size_t line_no = 0;
  for (std::string_view line : lines_of(text)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      for (auto& [k, v] : parse_meta_line(line)) meta.meta[k] = v;
      continue;
    }
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    const auto f = split_csv(line);
    if (header.empty()) {
      header = f;
      for (std::size_t i = 0; i < header.size(); ++i) {
        const int ii = static_cast<int>(i);
        if (header[i] == "recording") col_rec = ii;
        else if (header[i] == "channel") col_ch = ii;
        else if (header[i] == "t_s") col_t = ii;
        else if (header[i] == "probability") col_p = ii;
        else if (header[i] == "valid") col_v = ii;
      }
      if (col_ch < 0 || col_t < 0 || col_p < 0 || col_v < 0) {
        throw std::invalid_argument(where + ": header must name channel, t_s, probability and valid");
      }
      continue;
    }
    if (f.size() != header.size()) {
      throw std::invalid_argument(where + ": expected " + std::to_string(header.size()) + " fields");
    }
    std::string rec_id;
    if (col_rec >= 0) {
      rec_id = f[static_cast<std::size_t>(col_rec)];
    } else if (auto r = meta.meta.find("recording"); r != meta.meta.end()) {
      rec_id = r->second;
    }
    auto [tit, fresh] = trace_index.try_emplace(rec_id, traces.size());
    if (fresh) {
      const auto d = declared_duration(meta, rec_id);
      if (!d) throw std::invalid_argument(where + ": no duration_s declared for recording '" + rec_id + "'");
      PredictionTrace t;
      t.recording = rec_id;
      t.duration = *d;
      traces.push_back(std::move(t));
      channel_index.emplace_back();
    }
    PredictionTrace& t = traces[tit->second];
    const std::string& ch = f[static_cast<std::size_t>(col_ch)];
    auto [cit, new_ch] = channel_index[tit->second].try_emplace(ch, t.channels.size());
    if (new_ch) {
      t.channels.push_back(ch);
      t.probability.emplace_back();
      t.valid.emplace_back();
    }
    auto& probs = t.probability[cit->second];
    const double ts = parse_number(f[static_cast<std::size_t>(col_t)], where + " t_s");
    if (std::abs(ts - window_center(probs.size())) > 1e-6) {
      throw std::invalid_argument(where + ": expected t_s " + format_number(window_center(probs.size())) +
                                  " for channel " + ch + ", found " + format_number(ts));
    }
    const double p = parse_number(f[static_cast<std::size_t>(col_p)], where + " probability");
    if (!(p >= 0 && p <= 1)) throw std::invalid_argument(where + ": probability outside [0, 1]");
    const std::string& v = f[static_cast<std::size_t>(col_v)];
    if (v != "0" && v != "1") throw std::invalid_argument(where + ": valid must be 0 or 1");
    probs.push_back(p);
    t.valid[cit->second].push_back(v == "1" ? 1 : 0);
  }
  if (header.empty()) throw std::invalid_argument(std::string(source) + ": missing CSV header");
  for (const auto& t : traces) {
    const std::size_t expect = inference_window_count(t.duration);
    for (std::size_t c = 0; c < t.channels.size(); ++c) {
      if (t.probability[c].size() != expect) {
        throw std::invalid_argument(std::string(source) + ": recording '" + t.recording + "' channel " +
                                    t.channels[c] + " has " + std::to_string(t.probability[c].size()) +
                                    " windows, duration implies " + std::to_string(expect));
      }
    }
  }
  return traces;
}

std::vector<PredictionTrace> read_prediction_csv(const std::filesystem::path& path) {
  return parse_prediction_csv(read_text(path), path.string());
}

void write_prediction_csv(const std::filesystem::path& path, const std::vector<PredictionTrace>& traces) {
  write_text(path, format_prediction_csv(traces));
}

EventTable decision_events(const std::vector<PredictionTrace>& traces, double threshold) {
  EventTable table;
  const bool multiple = traces.size() > 1;
  table.has_recording_column = multiple;
  for (const auto& t : traces) {
    declare_duration(table, t.recording, t.duration, multiple);
    const auto per_channel = binarize(t, threshold);
    for (std::size_t c = 0; c < per_channel.size(); ++c) {
      for (const Event& e : per_channel[c]) table.rows.push_back({multiple ? t.recording : "", "", t.channels[c], e});
    }
    for (const Event& e : globalize(t, threshold)) {
      table.rows.push_back({multiple ? t.recording : "", "", std::string(kGlobalChannel), e});
    }
  }
  return table;
}

}  // namespace seiznet
