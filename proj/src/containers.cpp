#include "seiznet/containers.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace seiznet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string channel_file(std::size_t c) {
  std::ostringstream os;
  os << "ch" << std::setw(2) << std::setfill('0') << c << ".f32";
  return os.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    out.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

}  // namespace

std::string format_number(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("format_number: non-finite value");
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
  return {buf, end};
}

double parse_number(std::string_view text, std::string_view context) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(context) + ": '" + std::string(text) +
                                "' is not a number");
  }
  return v;
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t c = line.find(',', pos);
    if (c == std::string_view::npos) {
      out.emplace_back(trim(line.substr(pos)));
      break;
    }
    out.emplace_back(trim(line.substr(pos, c - pos)));
    pos = c + 1;
  }
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_f32(const fs::path& path, std::span<const float> values) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (float v : values) {
      auto u = std::bit_cast<std::uint32_t>(v);
      const char b[4] = {static_cast<char>(u), static_cast<char>(u >> 8),
                         static_cast<char>(u >> 16), static_cast<char>(u >> 24)};
      out.write(b, 4);
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<float> read_f32(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % 4 != 0) {
    throw std::runtime_error(path.string() + ": size " + std::to_string(bytes) +
                             " is not a multiple of 4 bytes");
  }
  in.seekg(0);
  std::vector<float> v(bytes / 4);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw std::runtime_error("read failed: " + path.string());
  if constexpr (std::endian::native != std::endian::little) {
    for (float& f : v) {
      auto u = std::bit_cast<std::uint32_t>(f);
      u = (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
      f = std::bit_cast<float>(u);
    }
  }
  return v;
}

bool is_recording_dir(const fs::path& dir) { return fs::is_regular_file(dir / "meta"); }

std::vector<fs::path> list_recordings(const fs::path& root) {
  if (is_recording_dir(root)) return {root};
  if (!fs::is_directory(root)) throw std::runtime_error(root.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && is_recording_dir(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Recording read_recording(const fs::path& dir) {
  const fs::path meta_path = dir / "meta";
  json meta;
  try {
    meta = json::parse(read_text(meta_path));
  } catch (const json::exception& e) {
    throw std::runtime_error(meta_path.string() + ": " + e.what());
  }
  Recording rec;
  try {
    rec.id = meta.at("id").get<std::string>();
    rec.rate = meta.at("rate").get<double>();
    rec.channel_names = meta.at("channels").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw std::runtime_error(meta_path.string() + ": " + e.what());
  }
  for (std::size_t c = 0; c < rec.channel_names.size(); ++c) {
    std::vector<float> raw = read_f32(dir / channel_file(c));
    rec.channels.emplace_back(raw.begin(), raw.end());
  }
  check_recording(rec);
  if (meta.contains("duration_s")) {
    const double d = meta["duration_s"].get<double>();
    if (std::abs(d - rec.duration()) > 0.5 / rec.rate) {
      throw std::runtime_error(meta_path.string() + ": duration_s " + format_number(d) +
                               " does not match " + std::to_string(rec.sample_count()) +
                               " samples at " + format_number(rec.rate) + " Hz");
    }
  }
  return rec;
}

void write_recording(const fs::path& dir, const Recording& rec) {
  check_recording(rec);
  fs::create_directories(dir);
  json meta;
  meta["id"] = rec.id;
  meta["rate"] = rec.rate;
  meta["channels"] = rec.channel_names;
  meta["duration_s"] = rec.duration();
  write_text(dir / "meta", meta.dump(2) + "\n");
  for (std::size_t c = 0; c < rec.channel_count(); ++c) {
    std::vector<float> f(rec.channels[c].begin(), rec.channels[c].end());
    write_f32(dir / channel_file(c), f);
  }
}

std::map<std::string, std::string> parse_meta_line(std::string_view line) {
  std::map<std::string, std::string> out;
  line = trim(line);
  if (!line.empty() && line.front() == '#') line.remove_prefix(1);
  std::istringstream is{std::string(line)};
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) continue;
    out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

std::string format_meta_line(const std::map<std::string, std::string>& meta) {
  std::string s = "#";
  for (const auto& [k, v] : meta) s += " " + k + "=" + v;
  return s;
}

std::vector<std::string> EventTable::annotators() const {
  std::set<std::string> s;
  for (const auto& r : rows) s.insert(r.annotator);
  return {s.begin(), s.end()};
}

std::vector<std::string> EventTable::recordings() const {
  std::set<std::string> s;
  for (const auto& r : rows) s.insert(r.recording);
  return {s.begin(), s.end()};
}

EventTable EventTable::for_recording(std::string_view id) const {
  EventTable t = *this;
  t.rows.clear();
  for (const auto& r : rows) {
    if (r.recording == id) t.rows.push_back(r);
  }
  return t;
}

EventTable EventTable::for_annotator(std::string_view name) const {
  EventTable t = *this;
  t.rows.clear();
  for (const auto& r : rows) {
    if (r.annotator == name) t.rows.push_back(r);
  }
  return t;
}

EventTable parse_event_csv(std::string_view text, std::string_view source) {
  EventTable t;
  std::vector<std::string> header;
  int col_rec = -1, col_ann = -1, col_ch = -1, col_on = -1, col_off = -1;
  std::size_t line_no = 0;
  for (std::string_view raw : lines_of(text)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      for (auto& [k, v] : parse_meta_line(line)) t.meta[k] = v;
      continue;
    }
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (header.empty()) {
      header = split_csv(line);
      for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string& h = header[i];
        const int ii = static_cast<int>(i);
        if (h == "recording") col_rec = ii;
        else if (h == "annotator") col_ann = ii;
        else if (h == "channel") col_ch = ii;
        else if (h == "onset_s") col_on = ii;
        else if (h == "offset_s") col_off = ii;
      }
      if (col_ch < 0 || col_on < 0 || col_off < 0) {
        throw std::invalid_argument(where + ": header must name channel, onset_s and offset_s");
      }
      t.has_recording_column = col_rec >= 0;
      t.has_annotator_column = col_ann >= 0;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != header.size()) {
      throw std::invalid_argument(where + ": expected " + std::to_string(header.size()) +
                                  " fields, found " + std::to_string(f.size()));
    }
    AnnotationRow r;
    if (col_rec >= 0) r.recording = f[static_cast<std::size_t>(col_rec)];
    if (col_ann >= 0) r.annotator = f[static_cast<std::size_t>(col_ann)];
    r.channel = f[static_cast<std::size_t>(col_ch)];
    r.event.onset = parse_number(f[static_cast<std::size_t>(col_on)], where + " onset_s");
    r.event.offset = parse_number(f[static_cast<std::size_t>(col_off)], where + " offset_s");
    if (!(r.event.onset >= 0) || !(r.event.offset > r.event.onset)) {
      throw std::invalid_argument(where + ": event must satisfy 0 <= onset < offset");
    }
    t.rows.push_back(std::move(r));
  }
  if (header.empty()) throw std::invalid_argument(std::string(source) + ": missing CSV header");
  return t;
}

EventTable read_event_csv(const fs::path& path) {
  return parse_event_csv(read_text(path), path.string());
}

std::string format_event_csv(const EventTable& table) {
  std::string s;
  if (!table.meta.empty()) s += format_meta_line(table.meta) + "\n";
  if (table.has_recording_column) s += "recording,";
  if (table.has_annotator_column) s += "annotator,";
  s += "channel,onset_s,offset_s\n";
  for (const auto& r : table.rows) {
    if (table.has_recording_column) s += r.recording + ",";
    if (table.has_annotator_column) s += r.annotator + ",";
    s += r.channel + "," + format_number(r.event.onset) + "," + format_number(r.event.offset) + "\n";
  }
  return s;
}

void write_event_csv(const fs::path& path, const EventTable& table) {
  write_text(path, format_event_csv(table));
}

std::vector<std::vector<Event>> channel_events(const EventTable& table,
                                               std::span<const std::string> channel_names) {
  std::vector<std::vector<Event>> out(channel_names.size());
  for (const auto& r : table.rows) {
    if (r.channel == kGlobalChannel) {
      for (auto& v : out) v.push_back(r.event);
      continue;
    }
    auto it = std::find(channel_names.begin(), channel_names.end(), r.channel);
    if (it == channel_names.end()) {
      throw std::invalid_argument("annotation names unknown channel '" + r.channel + "'");
    }
    out[static_cast<std::size_t>(it - channel_names.begin())].push_back(r.event);
  }
  for (auto& v : out) v = merge_events(std::move(v));
  return out;
}

std::vector<Event> global_events(const EventTable& table) {
  std::vector<Event> all;
  for (const auto& r : table.rows) all.push_back(r.event);
  return merge_events(std::move(all));
}

void SegmentDataset::add(std::span<const double> x, SegmentInfo meta) {
  if (x.size() != length) {
    throw std::invalid_argument("segment has " + std::to_string(x.size()) + " samples, dataset expects " +
                                std::to_string(length));
  }
  for (double v : x) samples.push_back(static_cast<float>(v));
  info.push_back(std::move(meta));
}

std::size_t SegmentDataset::count(bool seizure) const {
  return static_cast<std::size_t>(
      std::count_if(info.begin(), info.end(), [&](const SegmentInfo& s) { return s.seizure == seizure; }));
}

void write_segment_dataset(const fs::path& dir, const SegmentDataset& data) {
  fs::create_directories(dir);
  std::string csv = "# length=" + std::to_string(data.length) + "\n";
  csv += "index,recording,channel,start_s,label,valid,reason\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    const SegmentInfo& s = data.info[i];
    csv += std::to_string(i) + "," + s.recording + "," + std::to_string(s.channel) + "," +
           format_number(s.start) + "," + (s.seizure ? "1" : "0") + "," + (s.valid ? "1" : "0") +
           "," + s.reason + "\n";
  }
  write_text(dir / "segments.csv", csv);
  write_f32(dir / "segments.f32", data.samples);
}

SegmentDataset read_segment_dataset(const fs::path& dir, bool keep_invalid) {
  const fs::path csv_path = dir / "segments.csv";
  const std::string text = read_text(csv_path);
  SegmentDataset out;
  std::vector<SegmentInfo> all;
  bool header = false;
  std::size_t line_no = 0;
  for (std::string_view raw : lines_of(text)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto m = parse_meta_line(line);
      if (m.count("length")) {
        out.length = static_cast<std::size_t>(parse_number(m["length"], csv_path.string() + " length"));
      }
      continue;
    }
    if (!header) {
      header = true;
      continue;
    }
    const std::string where = csv_path.string() + ":" + std::to_string(line_no);
    const auto f = split_csv(line);
    if (f.size() != 7) throw std::invalid_argument(where + ": expected 7 fields");
    SegmentInfo s;
    s.recording = f[1];
    s.channel = static_cast<std::size_t>(parse_number(f[2], where + " channel"));
    s.start = parse_number(f[3], where + " start_s");
    s.seizure = f[4] == "1";
    s.valid = f[5] == "1";
    s.reason = f[6];
    all.push_back(std::move(s));
  }
  const std::vector<float> raw = read_f32(dir / "segments.f32");
  if (raw.size() != all.size() * out.length) {
    throw std::runtime_error(dir.string() + ": segments.f32 holds " + std::to_string(raw.size()) +
                             " samples, index lists " + std::to_string(all.size()) + " segments of " +
                             std::to_string(out.length));
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!all[i].valid && !keep_invalid) continue;
    out.samples.insert(out.samples.end(), raw.begin() + static_cast<std::ptrdiff_t>(i * out.length),
                       raw.begin() + static_cast<std::ptrdiff_t>((i + 1) * out.length));
    out.info.push_back(std::move(all[i]));
  }
  return out;
}

}  // namespace seiznet
