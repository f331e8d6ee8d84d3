#include "seiznet/signal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace seiznet {

namespace {

constexpr double kLowCut = 0.3;
constexpr double kHighCut = 30.0;
constexpr int kButterworthOrder = 4;
constexpr double kTimeTolerance = 1e-9;

// Transposed direct form II section, a0 normalized to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

enum class Pass { kLow, kHigh };

std::vector<Biquad> butterworth(Pass pass, double cutoff, double rate) {
  std::vector<Biquad> out;
  const double w0 = 2.0 * std::numbers::pi * cutoff / rate;
  const double cw = std::cos(w0);
  for (int k = 0; k < kButterworthOrder / 2; ++k) {
    const double q =
        1.0 / (2.0 * std::sin((2 * k + 1) * std::numbers::pi / (2.0 * kButterworthOrder)));
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad s{};
    if (pass == Pass::kLow) {
      s.b0 = (1.0 - cw) / 2.0;
      s.b1 = 1.0 - cw;
      s.b2 = (1.0 - cw) / 2.0;
    } else {
      s.b0 = (1.0 + cw) / 2.0;
      s.b1 = -(1.0 + cw);
      s.b2 = (1.0 + cw) / 2.0;
    }
    s.b0 /= a0;
    s.b1 /= a0;
    s.b2 /= a0;
    s.a1 = -2.0 * cw / a0;
    s.a2 = (1.0 - alpha) / a0;
    out.push_back(s);
  }
  return out;
}

// Runs the cascade in place, starting each section in the steady state it
// would reach for a constant input equal to x[0].
void run_cascade(const std::vector<Biquad>& sections, std::vector<double>& x) {
  if (x.empty()) return;
  double u = x.front();
  for (const Biquad& s : sections) {
    const double y0 = s.dc_gain() * u;
    double z2 = s.b2 * u - s.a2 * y0;
    double z1 = s.b1 * u - s.a1 * y0 + z2;
    for (double& v : x) {
      const double in = v;
      const double y = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * y + z2;
      z2 = s.b2 * in - s.a2 * y;
      v = y;
    }
    u = y0;
  }
}

int integer_rate(double rate) {
  const double r = std::round(rate);
  if (std::abs(rate - r) > 1e-9) return -1;
  return static_cast<int>(r);
}

}  // namespace

void check_recording(const Recording& rec) {
  if (!(rec.rate > 0)) throw std::invalid_argument("recording '" + rec.id + "' has no sample rate");
  if (rec.channel_names.size() != rec.channels.size()) {
    throw std::invalid_argument("recording '" + rec.id + "' has " +
                                std::to_string(rec.channels.size()) + " channels but " +
                                std::to_string(rec.channel_names.size()) + " channel names");
  }
  for (std::size_t c = 1; c < rec.channels.size(); ++c) {
    if (rec.channels[c].size() != rec.channels[0].size()) {
      throw std::invalid_argument("recording '" + rec.id + "' channel " + rec.channel_names[c] +
                                  " length differs from channel " + rec.channel_names[0]);
    }
  }
}

std::vector<Event> merge_events(std::vector<Event> events) {
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.onset < b.onset; });
  std::vector<Event> out;
  for (const Event& e : events) {
    if (!out.empty() && e.onset <= out.back().offset) {
      out.back().offset = std::max(out.back().offset, e.offset);
    } else {
      out.push_back(e);
    }
  }
  return out;
}

double overlap_seconds(std::span<const Event> events, double lo, double hi) {
  double total = 0.0;
  for (const Event& e : events) total += std::max(0.0, std::min(hi, e.offset) - std::max(lo, e.onset));
  return total;
}

std::vector<double> bandpass(std::span<const double> x, double rate) {
  if (!(rate > 2.0 * kHighCut)) {
    throw std::invalid_argument("bandpass: sample rate " + std::to_string(rate) +
                                " Hz is not above twice the 30 Hz upper edge");
  }
  std::vector<Biquad> sections = butterworth(Pass::kHigh, kLowCut, rate);
  for (const Biquad& s : butterworth(Pass::kLow, kHighCut, rate)) sections.push_back(s);

  const std::size_t n = x.size();
  if (n < 2) return {x.begin(), x.end()};
  const std::size_t pad = std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::ceil(3.0 * rate / kLowCut)));
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  run_cascade(sections, ext);
  std::reverse(ext.begin(), ext.end());
  run_cascade(sections, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::vector<double> resample_to_64(std::span<const double> x, double rate) {
  const int r = integer_rate(rate);
  if (r != 200 && r != 256 && r != 500) {
    throw std::invalid_argument("resample_to_64: unsupported sample rate " + std::to_string(rate) +
                                " Hz (expected 200, 256 or 500)");
  }
  const int g = std::gcd(64, r);
  const long up = 64 / g;
  const long down = r / g;
  const long wide = std::max(up, down);
  const long half = 10 * wide;
  const double beta = 5.0;

  // Kaiser-windowed sinc at the upsampled rate, cutoff at the narrower Nyquist.
  std::vector<double> h(static_cast<std::size_t>(2 * half + 1));
  const double norm = std::cyl_bessel_i(0.0, beta);
  for (long i = -half; i <= half; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(wide);
    const double sinc = i == 0 ? 1.0 : std::sin(std::numbers::pi * t) / (std::numbers::pi * t);
    const double frac = static_cast<double>(i) / static_cast<double>(half);
    const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - frac * frac))) / norm;
    h[static_cast<std::size_t>(i + half)] = sinc * win;
  }

  const long n = static_cast<long>(x.size());
  const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(n) * 64.0 / r));
  std::vector<double> y(out_len, 0.0);
  if (n == 0) return y;
  for (std::size_t m = 0; m < out_len; ++m) {
    const long u = static_cast<long>(m) * down;
    // Inputs k with |u - k * up| <= half.
    const long k_lo = static_cast<long>(std::ceil(static_cast<double>(u - half) / up));
    const long k_hi = static_cast<long>(std::floor(static_cast<double>(u + half) / up));
    double acc = 0.0;
    double wsum = 0.0;
    for (long k = k_lo; k <= k_hi; ++k) {
      const double w = h[static_cast<std::size_t>(u - k * up + half)];
      const long idx = std::clamp(k, 0L, n - 1);
      acc += w * x[static_cast<std::size_t>(idx)];
      wsum += w;
    }
    y[m] = acc / wsum;
  }
  return y;
}

Recording preprocess(const Recording& raw) {
  check_recording(raw);
  Recording out;
  out.id = raw.id;
  out.channel_names = raw.channel_names;
  out.rate = kModelRate;
  const bool already = integer_rate(raw.rate) == 64;
  for (const auto& ch : raw.channels) {
    std::vector<double> f = bandpass(ch, raw.rate);
    out.channels.push_back(already ? std::move(f) : resample_to_64(f, raw.rate));
  }
  return out;
}

ArtifactCheck reject_artifacts(std::span<const double> segment, double rate) {
  const auto min_run = static_cast<std::size_t>(std::llround(rate));
  std::size_t run = 0;
  for (double v : segment) {
    run = v == 0.0 ? run + 1 : 0;
    if (run >= min_run) return {false, "zero_run"};
  }
  if (segment.empty()) return {false, "zero_run"};
  const double n = static_cast<double>(segment.size());
  const double mean = std::accumulate(segment.begin(), segment.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : segment) ss += (v - mean) * (v - mean);
  if (std::sqrt(ss / n) > 1000.0) return {false, "high_amplitude"};
  return {};
}

std::size_t window_count(double duration, double window, double step) {
  if (!(step > 0) || duration + kTimeTolerance < window) return 0;
  return static_cast<std::size_t>(std::floor((duration - window) / step + kTimeTolerance)) + 1;
}

bool segment_label(std::span<const Event> events, double start, double window) {
  return overlap_seconds(events, start, start + window) >= kSeizureOverlapSeconds - kTimeTolerance;
}

std::vector<LabeledSegment> segment(const Recording& rec,
                                    const std::vector<std::vector<Event>>& channel_events,
                                    double window, double step) {
  check_recording(rec);
  if (std::abs(rec.rate - kModelRate) > 1e-9) {
    throw std::invalid_argument("segment: recording '" + rec.id + "' is at " +
                                std::to_string(rec.rate) + " Hz, expected 64 Hz");
  }
  if (channel_events.size() != rec.channel_count()) {
    throw std::invalid_argument("segment: annotation channel count does not match recording");
  }
  const auto win = static_cast<std::size_t>(std::llround(window * rec.rate));
  const auto hop = static_cast<std::size_t>(std::llround(step * rec.rate));
  const std::size_t n = rec.sample_count();
  std::vector<LabeledSegment> out;
  if (n < win || hop == 0) return out;
  const std::size_t count = (n - win) / hop + 1;
  out.reserve(count * rec.channel_count());
  for (std::size_t c = 0; c < rec.channel_count(); ++c) {
    const auto& ch = rec.channels[c];
    for (std::size_t i = 0; i < count; ++i) {
      LabeledSegment s;
      s.channel = c;
      s.start = static_cast<double>(i * hop) / rec.rate;
      s.samples.assign(ch.begin() + static_cast<std::ptrdiff_t>(i * hop),
                       ch.begin() + static_cast<std::ptrdiff_t>(i * hop + win));
      s.seizure = segment_label(channel_events[c], s.start, window);
      const ArtifactCheck a = reject_artifacts(s.samples, rec.rate);
      s.valid = a.valid;
      s.reason = a.reason;
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::size_t mask_length(double duration) {
  if (duration <= 0) return 0;
  return static_cast<std::size_t>(std::ceil(duration - kTimeTolerance));
}

std::vector<std::uint8_t> events_to_mask(std::span<const Event> events, double duration) {
  const std::size_t len = mask_length(duration);
  std::vector<std::uint8_t> mask(len, 0);
  for (const Event& e : events) {
    if (!(e.onset >= 0.0) || !(e.offset > e.onset) || e.offset > duration + kTimeTolerance) {
      throw std::invalid_argument("event [" + std::to_string(e.onset) + ", " +
                                  std::to_string(e.offset) + ") lies outside [0, " +
                                  std::to_string(duration) + "] or is empty");
    }
    const auto first = static_cast<std::size_t>(std::floor(e.onset));
    const auto last = static_cast<std::size_t>(std::ceil(e.offset - kTimeTolerance));
    for (std::size_t i = first; i < std::min(last, len); ++i) mask[i] = 1;
  }
  return mask;
}

std::vector<Event> mask_to_events(std::span<const std::uint8_t> mask) {
  std::vector<Event> out;
  std::size_t i = 0;
  while (i < mask.size()) {
    if (!mask[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < mask.size() && mask[j]) ++j;
    out.push_back({static_cast<double>(i), static_cast<double>(j)});
    i = j;
  }
  return out;
}

}  // namespace seiznet
