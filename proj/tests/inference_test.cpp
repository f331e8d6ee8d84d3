#include <gtest/gtest.h>

#include <cmath>

#include "seiznet/inference.hpp"
#include "seiznet/rng.hpp"

namespace seiznet {
namespace {

Recording noise_recording(double seconds, std::size_t channels, std::uint64_t seed) {
  Rng rng(seed);
  Recording r;
  r.id = "rec" + std::to_string(seed);
  r.rate = 64;
  for (std::size_t c = 0; c < channels; ++c) {
    r.channel_names.push_back("c" + std::to_string(c));
    std::vector<double> x(static_cast<std::size_t>(std::llround(seconds * 64)));
    for (double& v : x) v = 20 * rng.normal();
    r.channels.push_back(std::move(x));
  }
  return r;
}

ModelParams constant_model(double bias) {
  ModelParams p = build(variant("nano"), 1);
  p.find("head.weight")->value.fill(0.0);
  p.find("head.bias")->value.fill(bias);
  return p;
}

PredictionTrace trace_from(const std::vector<std::vector<double>>& windows, double duration) {
  PredictionTrace t;
  t.recording = "t";
  t.duration = duration;
  for (std::size_t c = 0; c < windows.size(); ++c) {
    t.channels.push_back("c" + std::to_string(c));
    t.probability.push_back(windows[c]);
    t.valid.push_back(Mask(windows[c].size(), 1));
  }
  return t;
}

TEST(WindowCount, Examples) {
  EXPECT_EQ(inference_window_count(60), 177u);
  EXPECT_EQ(inference_window_count(16), 1u);
  EXPECT_EQ(inference_window_count(15.99), 0u);
  EXPECT_EQ(inference_window_count(16.24), 1u);
  EXPECT_EQ(inference_window_count(16.25), 2u);
  EXPECT_DOUBLE_EQ(window_center(0), 8.0);
  EXPECT_DOUBLE_EQ(window_center(4), 9.0);
  EXPECT_EQ(grid_length(60), 240u);
  EXPECT_EQ(grid_length(60.1), 241u);
}

TEST(WindowCount, MatchesFormulaForSampleAlignedDurations) {
  Rng rng(3);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1024 + rng.below(64 * 3600);
    const double T = static_cast<double>(n) / 64.0;
    const auto expect = static_cast<std::size_t>(std::floor((T - 16) / 0.25)) + 1;
    EXPECT_EQ(inference_window_count(T), expect);
    EXPECT_EQ(inference_window_count(T), (n - 1024) / 16 + 1);
  }
}

TEST(SlidingPredict, ConstantModel) {
  const Recording rec = noise_recording(60, 2, 1);
  const PredictionTrace t = sliding_predict(constant_model(0.4), rec);
  ASSERT_EQ(t.window_count(), 177u);
  ASSERT_EQ(t.channels, rec.channel_names);
  const double p = 1 / (1 + std::exp(-0.4));
  for (const auto& ch : t.probability) {
    for (double v : ch) EXPECT_NEAR(v, p, 1e-12);
  }
  const auto g = global_decision(t);
  ASSERT_EQ(g.probability.size(), 60u);
  for (double v : g.probability) EXPECT_NEAR(v, p, 1e-12);
  for (auto m : g.mask) EXPECT_EQ(m, 1);
}

TEST(SlidingPredict, MatchesForwardPerWindow) {
  const Recording rec = noise_recording(20, 1, 2);
  const ModelParams params = build(variant("nano"), 5);
  const PredictionTrace t = sliding_predict(params, rec);
  ASSERT_EQ(t.window_count(), 17u);
  for (std::size_t w : {0u, 7u, 16u}) {
    std::span<const double> seg(rec.channels[0].data() + 16 * w, 1024);
    EXPECT_DOUBLE_EQ(t.probability[0][w], forward(params, seg));
  }
}

TEST(SlidingPredict, InvalidWindowsAreZeroAndFlagged) {
  Recording rec = noise_recording(40, 2, 3);
  // 2 s of flat zeros on channel 1 at [20, 22) s.
  std::fill(rec.channels[1].begin() + 20 * 64, rec.channels[1].begin() + 22 * 64, 0.0);
  const PredictionTrace t = sliding_predict(constant_model(2.0), rec);
  for (std::size_t w = 0; w < t.window_count(); ++w) {
    EXPECT_EQ(t.valid[0][w], 1);
    const double start = 0.25 * static_cast<double>(w);
    // A window holds >= 1 s of the zero run iff it overlaps [20, 22) by >= 1 s.
    const double ov = std::max(0.0, std::min(start + 16, 22.0) - std::max(start, 20.0));
    const bool bad = ov >= 1.0;
    EXPECT_EQ(t.valid[1][w], bad ? 0 : 1) << w;
    if (bad) {
      EXPECT_EQ(t.probability[1][w], 0.0);
    }
  }
}

TEST(SlidingPredict, ShortRecordingGivesEmptyTrace) {
  const PredictionTrace t = sliding_predict(constant_model(0), noise_recording(15, 2, 4));
  EXPECT_EQ(t.window_count(), 0u);
  EXPECT_TRUE(t.grid(0).empty());
  const auto g = global_decision(t);
  EXPECT_EQ(g.mask, Mask(15, 0));
  EXPECT_TRUE(globalize(t).empty());
}

TEST(SlidingPredict, RejectsWrongRate) {
  Recording rec = noise_recording(20, 1, 5);
  rec.rate = 256;
  EXPECT_THROW(sliding_predict(constant_model(0), rec), std::invalid_argument);
}

TEST(HoldExtend, EdgesTakeNearestWindow) {
  std::vector<double> w(9);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<double>(i);
  const double T = 18.0;  // 9 windows, 72 grid points
  ASSERT_EQ(inference_window_count(T), 9u);
  const auto g = hold_extend(w, grid_length(T));
  ASSERT_EQ(g.size(), 72u);
  for (std::size_t j = 0; j <= 32; ++j) EXPECT_EQ(g[j], 0.0);
  for (std::size_t j = 32; j < 41; ++j) EXPECT_EQ(g[j], static_cast<double>(j - 32));
  for (std::size_t j = 40; j < 72; ++j) EXPECT_EQ(g[j], 8.0);
}

TEST(Smooth, Examples) {
  const std::vector<double> c(500, 0.7);
  for (double v : smooth(c)) EXPECT_NEAR(v, 0.7, 1e-12);
  const auto twice = smooth(smooth(c));
  for (double v : twice) EXPECT_NEAR(v, 0.7, 1e-12);

  std::vector<double> imp(1000, 0.0);
  imp[500] = 1.0;
  const auto s = smooth(imp);
  std::size_t plateau = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] > 0) {
      EXPECT_NEAR(s[i], 1.0 / 128, 1e-15);
      ++plateau;
    }
  }
  EXPECT_EQ(plateau, 128u);
  EXPECT_GT(s[500 - 63], 0.0);
  EXPECT_GT(s[500 + 64], 0.0);
  EXPECT_EQ(s[500 - 64], 0.0);
}

TEST(Smooth, EdgesRenormalize) {
  std::vector<double> x(300);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i % 7);
  const auto s = smooth(x);
  double first = 0;
  for (std::size_t i = 0; i < 64; ++i) first += x[i];
  EXPECT_NEAR(s[0], first / 64, 1e-12);
  double last = 0;
  for (std::size_t i = 299 - 64; i < 300; ++i) last += x[i];
  EXPECT_NEAR(s[299], last / 65, 1e-12);
  EXPECT_EQ(smooth(std::vector<double>{}).size(), 0u);
}

TEST(Threshold, Examples) {
  const std::vector<double> g{0.4999, 0.4999, 0.4999, 0.4999, 0.5, 0.1, 0.1, 0.1};
  EXPECT_EQ(threshold_mask(g, 2, 0.5), (Mask{0, 1}));
  const std::vector<std::vector<double>> ch{{0.2}, {0.9}, {0.1}};
  EXPECT_DOUBLE_EQ(channel_max(ch)[0], 0.9);
  EXPECT_EQ(threshold_mask(channel_max(ch), 0.25, 0.5), (Mask{1}));
}

TEST(Threshold, PartialLastSecond) {
  std::vector<double> g(41, 0.0);
  g[40] = 0.8;
  const auto m = threshold_mask(g, 10.1, 0.5);
  ASSERT_EQ(m.size(), 11u);
  EXPECT_EQ(m[10], 1);
  const auto mean = per_second_mean(g, 10.1);
  EXPECT_DOUBLE_EQ(mean[10], 0.8);
  EXPECT_DOUBLE_EQ(mean[9], 0.0);
}

std::vector<std::vector<double>> random_windows(Rng& rng, std::size_t channels, std::size_t n) {
  std::vector<std::vector<double>> w(channels, std::vector<double>(n));
  for (auto& ch : w) {
    double level = rng.uniform();
    for (double& v : ch) {
      if (rng.bernoulli(0.01)) level = rng.uniform();
      v = std::clamp(level + 0.1 * rng.normal(), 0.0, 1.0);
    }
  }
  return w;
}

TEST(Decisions, AllBelowThresholdGivesNoEvents) {
  PredictionTrace t = trace_from({std::vector<double>(200, 0.3), std::vector<double>(200, 0.49)}, 65.75);
  EXPECT_TRUE(globalize(t).empty());
  for (const auto& ev : binarize(t)) EXPECT_TRUE(ev.empty());
}

TEST(Decisions, GlobalizeEqualsUnionOfChannels) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const double T = 16 + 0.25 * static_cast<double>(rng.below(2000)) + 0.25 * rng.uniform();
    const auto w = random_windows(rng, 1 + rng.below(5), inference_window_count(T));
    const PredictionTrace t = trace_from(w, T);
    const Mask global = global_decision(t).mask;
    Mask uni(global.size(), 0);
    for (const auto& ev : binarize(t)) {
      const Mask m = events_to_mask(ev, T);
      for (std::size_t i = 0; i < uni.size(); ++i) uni[i] |= m[i];
    }
    EXPECT_EQ(uni, global);
    EXPECT_EQ(events_to_mask(globalize(t), T), global);
  }
}

TEST(Decisions, RaisingAValueNeverRemovesDetections) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const double T = 200;
    auto w = random_windows(rng, 3, inference_window_count(T));
    const Mask before = global_decision(trace_from(w, T)).mask;
    auto& v = w[rng.below(3)][rng.below(w[0].size())];
    v = std::min(1.0, v + rng.uniform());
    const Mask after = global_decision(trace_from(w, T)).mask;
    for (std::size_t i = 0; i < before.size(); ++i) ASSERT_GE(after[i], before[i]);
  }
}

TEST(PredictionCsv, RoundTripSingle) {
  Rng rng(9);
  PredictionTrace t = trace_from(random_windows(rng, 2, inference_window_count(30.5)), 30.5);
  t.recording = "baby1";
  t.valid[1][3] = 0;
  t.probability[1][3] = 0;
  const std::string csv = format_prediction_csv({t});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "# duration_s=30.5 recording=baby1");
  EXPECT_NE(csv.find("\nchannel,t_s,probability,valid\n"), std::string::npos);
  const auto back = parse_prediction_csv(csv);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].recording, "baby1");
  EXPECT_EQ(back[0].duration, 30.5);
  EXPECT_EQ(back[0].channels, t.channels);
  EXPECT_EQ(back[0].probability, t.probability);
  EXPECT_EQ(back[0].valid, t.valid);
  EXPECT_EQ(format_prediction_csv(back), csv);
}

TEST(PredictionCsv, RoundTripMultiple) {
  Rng rng(10);
  PredictionTrace a = trace_from(random_windows(rng, 2, inference_window_count(20)), 20);
  PredictionTrace b = trace_from(random_windows(rng, 2, inference_window_count(17.5)), 17.5);
  a.recording = "a";
  b.recording = "b";
  const std::string csv = format_prediction_csv({a, b});
  const auto back = parse_prediction_csv(csv);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].recording, "b");
  EXPECT_EQ(back[1].duration, 17.5);
  EXPECT_EQ(back[1].probability, b.probability);
}

TEST(PredictionCsv, Rejects) {
  EXPECT_THROW(parse_prediction_csv("channel,t_s,probability,valid\nc0,8,0.5,1\n"), std::invalid_argument);
  const std::string meta = "# duration_s=16.25\nchannel,t_s,probability,valid\n";
  EXPECT_NO_THROW(parse_prediction_csv(meta + "c0,8,0.5,1\nc0,8.25,0.5,1\n"));
  EXPECT_THROW(parse_prediction_csv(meta + "c0,8,0.5,1\n"), std::invalid_argument);
  EXPECT_THROW(parse_prediction_csv(meta + "c0,8,0.5,1\nc0,8.5,0.5,1\n"), std::invalid_argument);
  EXPECT_THROW(parse_prediction_csv(meta + "c0,8,1.5,1\nc0,8.25,0.5,1\n"), std::invalid_argument);
  EXPECT_THROW(parse_prediction_csv(meta + "c0,8,0.5,2\nc0,8.25,0.5,1\n"), std::invalid_argument);
  EXPECT_THROW(parse_prediction_csv("# duration_s=16\nchannel,t_s,prob\n"), std::invalid_argument);
}

TEST(DecisionEvents, GlobalRowsAndDuration) {
  std::vector<double> w(inference_window_count(120), 0.1);
  for (std::size_t i = 200; i < 300; ++i) w[i] = 0.95;
  PredictionTrace t = trace_from({w, std::vector<double>(w.size(), 0.1)}, 120);
  const EventTable tab = decision_events({t});
  EXPECT_EQ(declared_duration(tab, "t"), 120.0);
  std::size_t globals = 0;
  for (const auto& r : tab.rows) globals += r.channel == kGlobalChannel;
  EXPECT_EQ(globals, 1u);
  const auto parsed = parse_event_csv(format_event_csv(tab));
  EXPECT_EQ(parsed.rows, tab.rows);
  EXPECT_EQ(declared_duration(parsed, "t"), 120.0);
  EXPECT_FALSE(declared_duration(parsed, "other").has_value());
}

}  // namespace
}  // namespace seiznet
