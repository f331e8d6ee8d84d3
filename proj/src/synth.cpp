#include "seiznet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace seiznet {

namespace {

constexpr std::uint64_t kEventStream = 11;
constexpr std::uint64_t kSignalStream = 12;
constexpr std::uint64_t kSegmentStream = 13;

// Raised-cosine taper of `ramp` seconds at both ends of [0, len).
double taper(double t, double len, double ramp) {
  if (ramp <= 0) return 1.0;
  const double r = std::min(ramp, len / 2);
  if (t < r) return 0.5 - 0.5 * std::cos(std::numbers::pi * t / r);
  if (t > len - r) return 0.5 - 0.5 * std::cos(std::numbers::pi * (len - t) / r);
  return 1.0;
}

// Integer lengths in [lo, hi] summing to total.
std::vector<long> split_lengths(long total, long lo, long hi, Rng& rng) {
  const double mean = 0.5 * static_cast<double>(lo + hi);
  long k = std::max(1L, std::lround(static_cast<double>(total) / mean));
  while (k * hi < total) ++k;
  while (k > 1 && k * lo > total) --k;
  std::vector<long> len(static_cast<std::size_t>(k), total / k);
  for (long i = 0; i < total % k; ++i) ++len[static_cast<std::size_t>(i)];
  // Random transfers keep the sum and the bounds.
  for (int it = 0; it < 4 * k; ++it) {
    const std::size_t a = rng.below(len.size()), b = rng.below(len.size());
    if (a == b) continue;
    const long room = std::min(len[a] - lo, hi - len[b]);
    if (room <= 0) continue;
    const long d = 1 + static_cast<long>(rng.below(static_cast<std::size_t>(room)));
    len[a] -= d;
    len[b] += d;
  }
  return len;
}

}  // namespace

void SyntheticCohort::validate() const {
  auto bad = [](const std::string& w) { throw std::invalid_argument("synthetic cohort: " + w); };
  if (neonates == 0 || channels == 0) bad("need at least one neonate and one channel");
  if (!(duration_s >= 16)) bad("duration must be at least 16 s");
  if (!(prevalence >= 0 && prevalence < 1)) bad("prevalence must lie in [0, 1)");
  const long r = std::lround(rate);
  if (std::abs(rate - static_cast<double>(r)) > 1e-9 || (r != 64 && r != 200 && r != 256 && r != 500)) {
    bad("rate must be 64, 200, 256 or 500 Hz");
  }
  if (!(freq_lo > 0) || !(freq_hi >= freq_lo) || freq_hi >= rate / 2) bad("bad seizure frequency band");
  if (!(min_event_s >= 1) || !(max_event_s >= min_event_s)) bad("need 1 <= min_event_s <= max_event_s");
  if (!(participation >= 0 && participation <= 1)) bad("participation must lie in [0, 1]");
  if (!(amplitude_growth >= 1)) bad("amplitude_growth must be >= 1");
  if (!(stagger_s >= 0) || !(min_gap_s >= 0) || !(background_uv >= 0) || !(amplitude_uv >= 0)) {
    bad("negative amplitude, gap or stagger");
  }
  const long seizure = std::lround(prevalence * duration_s);
  if (seizure == 0) return;
  if (static_cast<double>(seizure) < min_event_s) {
    bad("prevalence gives " + std::to_string(seizure) + " s of seizure, below min_event_s");
  }
  const long lo = std::lround(min_event_s), hi = std::lround(max_event_s);
  long k = std::max(1L, std::lround(static_cast<double>(seizure) / (0.5 * static_cast<double>(lo + hi))));
  while (k * hi < seizure) ++k;
  if (static_cast<double>(seizure) + static_cast<double>(k + 1) * min_gap_s > std::floor(duration_s)) {
    bad("prevalence " + std::to_string(prevalence) + " is incompatible with duration " +
        std::to_string(duration_s) + " s and min_gap_s");
  }
}

std::vector<double> pink_noise(std::size_t n, Rng& rng) {
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  auto step = [&]() {
    const double w = rng.normal();
    b0 = 0.99886 * b0 + w * 0.0555179;
    b1 = 0.99332 * b1 + w * 0.0750759;
    b2 = 0.96900 * b2 + w * 0.1538520;
    b3 = 0.86650 * b3 + w * 0.3104856;
    b4 = 0.55000 * b4 + w * 0.5329522;
    b5 = -0.7616 * b5 - w * 0.0168980;
    const double out = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
    b6 = w * 0.115926;
    return out;
  };
  for (int i = 0; i < 4096; ++i) step();
  std::vector<double> x(n);
  for (double& v : x) v = step();
  if (n < 2) return x;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  for (double& v : x) v = (v - mean) / sd;
  return x;
}

std::vector<SyntheticNeonate> synth_generate(const SyntheticCohort& cfg) {
  cfg.validate();
  std::vector<SyntheticNeonate> out;
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.rate));
  const double duration = static_cast<double>(n) / cfg.rate;
  for (std::size_t b = 0; b < cfg.neonates; ++b) {
    SyntheticNeonate neo;
    Recording& rec = neo.recording;
    rec.id = "neonate" + std::string(b < 10 ? "0" : "") + std::to_string(b);
    rec.rate = cfg.rate;
    for (std::size_t c = 0; c < cfg.channels; ++c) rec.channel_names.push_back("ch" + std::to_string(c));

    // Event layout in whole seconds.
    Rng ev_rng(derive_seed(cfg.seed, {kEventStream, b}));
    const long seizure = std::lround(cfg.prevalence * cfg.duration_s);
    std::vector<Event> global;
    if (seizure > 0) {
      const auto lengths = split_lengths(seizure, std::lround(cfg.min_event_s), std::lround(cfg.max_event_s), ev_rng);
      const long k = static_cast<long>(lengths.size());
      const long gap = std::lround(std::ceil(cfg.min_gap_s));
      const long free_s = static_cast<long>(std::floor(duration)) - seizure - (k + 1) * gap;
      // k + 1 extra gap amounts summing to free_s (sorted cut points).
      std::vector<long> cuts(static_cast<std::size_t>(k));
      for (auto& c : cuts) c = static_cast<long>(ev_rng.below(static_cast<std::size_t>(free_s) + 1));
      std::sort(cuts.begin(), cuts.end());
      long t = 0, prev_cut = 0;
      for (long i = 0; i < k; ++i) {
        t += gap + (cuts[static_cast<std::size_t>(i)] - prev_cut);
        prev_cut = cuts[static_cast<std::size_t>(i)];
        global.push_back({static_cast<double>(t), static_cast<double>(t + lengths[static_cast<std::size_t>(i)])});
        t += lengths[static_cast<std::size_t>(i)];
      }
    }
    neo.global = global;

    struct ChannelEvent {
      std::size_t channel;
      Event event;
      double freq;
      double phase;
    };
    std::vector<ChannelEvent> parts;
    for (const Event& g : global) {
      const std::size_t lead = ev_rng.below(cfg.channels);
      const double freq = ev_rng.uniform(cfg.freq_lo, cfg.freq_hi);
      for (std::size_t c = 0; c < cfg.channels; ++c) {
        const bool joins = c == lead || ev_rng.bernoulli(cfg.participation);
        if (!joins) continue;
        Event e = g;
        if (c != lead) {
          const auto max_shift = static_cast<std::size_t>(std::floor(cfg.stagger_s));
          const double late = static_cast<double>(ev_rng.below(max_shift + 1));
          const double early = static_cast<double>(ev_rng.below(max_shift + 1));
          e.onset = std::min(g.onset + late, g.offset - 1);
          e.offset = std::max(g.offset - early, e.onset + 1);
        }
        parts.push_back({c, e, freq, ev_rng.uniform(0, 2 * std::numbers::pi)});
        neo.annotations.rows.push_back({"", "synth", rec.channel_names[c], e});
      }
    }
    neo.annotations.has_annotator_column = true;
    neo.annotations.meta["duration_s"] = format_number(duration);
    neo.annotations.meta["recording"] = rec.id;

    for (std::size_t c = 0; c < cfg.channels; ++c) {
      Rng sig_rng(derive_seed(cfg.seed, {kSignalStream, b, c}));
      std::vector<double> x = pink_noise(n, sig_rng);
      for (double& v : x) v *= cfg.background_uv;
      for (const auto& p : parts) {
        if (p.channel != c) continue;
        const auto i0 = static_cast<std::size_t>(std::llround(p.event.onset * cfg.rate));
        const auto i1 = std::min(n, static_cast<std::size_t>(std::llround(p.event.offset * cfg.rate)));
        const double len = p.event.duration();
        const double a0 = cfg.amplitude_uv / cfg.amplitude_growth;
        for (std::size_t i = i0; i < i1; ++i) {
          const double t = static_cast<double>(i - i0) / cfg.rate;
          const double env = (a0 + (cfg.amplitude_uv - a0) * t / len) * taper(t, len, 0.5);
          const double w = 2 * std::numbers::pi * p.freq * t + p.phase;
          x[i] += env * (std::sin(w) + 0.35 * std::sin(2 * w + 0.5));
        }
      }
      rec.channels.push_back(std::move(x));
    }
    out.push_back(std::move(neo));
  }
  return out;
}

#define SEIZNET_COHORT_FIELDS(X)                                                           \
  X(neonates) X(channels) X(duration_s) X(prevalence) X(rate) X(freq_lo) X(freq_hi)        \
  X(amplitude_uv) X(amplitude_growth) X(participation) X(stagger_s) X(min_event_s)         \
  X(max_event_s) X(min_gap_s) X(background_uv) X(seed)

SyntheticCohort parse_cohort_config(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("cohort config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("cohort config: expected a JSON object");
  SyntheticCohort c;
  std::set<std::string> known;
#define READ_FIELD(name)                                                         \
  known.insert(#name);                                                           \
  if (j.contains(#name)) {                                                       \
    try {                                                                        \
      j.at(#name).get_to(c.name);                                                \
    } catch (const nlohmann::json::exception& e) {                              \
      throw std::invalid_argument("cohort config field " #name ": " + std::string(e.what())); \
    }                                                                            \
  }
  SEIZNET_COHORT_FIELDS(READ_FIELD)
#undef READ_FIELD
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("cohort config: unknown field '" + key + "'");
  }
  c.validate();
  return c;
}

void write_cohort(const std::filesystem::path& out, const std::vector<SyntheticNeonate>& cohort) {
  for (const auto& neo : cohort) {
    const auto dir = out / neo.recording.id;
    write_recording(dir, neo.recording);
    write_event_csv(dir / "annotations.csv", neo.annotations);
  }
}

SegmentDataset separable_segments(const SeparableTask& task) {
  SegmentDataset ds;
  const std::size_t total = task.seizure + task.non_seizure;
  ds.samples.reserve(total * kSegmentSamples);
  std::vector<double> x;
  for (std::size_t i = 0; i < total; ++i) {
    // Seizure segments interleaved evenly through the set.
    const bool seizure = task.seizure > 0 && (i * task.seizure) / total != ((i + 1) * task.seizure) / total;
    Rng rng(derive_seed(task.seed, {kSegmentStream, i}));
    x = pink_noise(kSegmentSamples, rng);
    for (double& v : x) v *= task.noise_uv;
    if (seizure) {
      const double len = rng.uniform(8.0, 16.0);
      const double start = rng.uniform(0.0, 16.0 - len);
      const double amp = task.burst_uv * rng.uniform(0.75, 1.25);
      const double phase = rng.uniform(0, 2 * std::numbers::pi);
      for (std::size_t k = 0; k < kSegmentSamples; ++k) {
        const double t = static_cast<double>(k) / kModelRate - start;
        if (t < 0 || t >= len) continue;
        x[k] += amp * taper(t, len, 0.5) * std::sin(2 * std::numbers::pi * task.burst_hz * t + phase);
      }
    }
    const std::size_t neo = task.neonates ? i % task.neonates : 0;
    ds.add(x, {"neonate" + std::string(neo < 10 ? "0" : "") + std::to_string(neo), 0,
               static_cast<double>(i / std::max<std::size_t>(1, task.neonates)) * kSegmentSeconds, seizure, true, ""});
  }
  return ds;
}

}  // namespace seiznet
