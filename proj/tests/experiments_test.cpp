#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "seiznet/experiments.hpp"
#include "seiznet/rng.hpp"
#include "seiznet/synth.hpp"

namespace seiznet {
namespace {

// ---- power law -------------------------------------------------------------

TEST(PowerLaw, RecoversExactLaw) {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const double a = rng.uniform(0.01, 100), b = rng.uniform(-2, 2);
    std::vector<double> x, y;
    for (int i = 0; i < 6; ++i) {
      x.push_back(rng.uniform(1, 1e5));
      y.push_back(a * std::pow(x.back(), b));
    }
    const auto f = fit_power_law(x, y);
    ASSERT_TRUE(f.defined);
    EXPECT_NEAR(f.exponent, b, 1e-6);
    EXPECT_NEAR(f.coefficient / a, 1.0, 1e-6);
    EXPECT_EQ(f.points, 6u);
  }
}

TEST(PowerLaw, DropsNonPositiveAndNeedsTwoPoints) {
  const std::vector<double> x = {1, 2, 4, 8}, y = {3, -1, 0, 24};
  const auto f = fit_power_law(x, y);
  ASSERT_TRUE(f.defined);
  EXPECT_EQ(f.points, 2u);
  EXPECT_NEAR(f.exponent, 1.0, 1e-12);
  EXPECT_NEAR(f.coefficient, 3.0, 1e-12);
  const std::vector<double> one = {5}, two = {5, 5};
  EXPECT_FALSE(fit_power_law(one, one).defined);
  EXPECT_FALSE(fit_power_law(two, std::vector<double>{1, 2}).defined);
  EXPECT_THROW(fit_power_law(one, two), std::invalid_argument);
}

TEST(Axis, Names) {
  for (auto a : {ScalingAxis::kSegments, ScalingAxis::kNeonates, ScalingAxis::kModel}) {
    EXPECT_EQ(parse_axis(axis_name(a)), a);
  }
  EXPECT_THROW(parse_axis("depth"), std::invalid_argument);
}

// ---- subsets -------------------------------------------------------------

SegmentDataset task(std::size_t s, std::size_t ns, std::uint64_t seed, std::size_t neonates = 10) {
  SeparableTask t;
  t.seizure = s;
  t.non_seizure = ns;
  t.seed = seed;
  t.neonates = neonates;
  return separable_segments(t);
}

bool contains(const std::vector<std::size_t>& big, const std::vector<std::size_t>& small) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

TEST(NestedSubsets, SegmentsAxis) {
  const auto data = task(20, 200, 1);
  const std::vector<std::size_t> grid = {22, 55, 110, 220};
  const auto subs = nested_subsets(data, ScalingAxis::kSegments, grid, 5, 0);
  ASSERT_EQ(subs.size(), grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    EXPECT_EQ(subs[p].size(), grid[p]);
    EXPECT_TRUE(std::is_sorted(subs[p].begin(), subs[p].end()));
    std::size_t s = 0;
    for (std::size_t i : subs[p]) s += data.label(i);
    EXPECT_EQ(s, grid[p] / 11);  // the set's 1:10 ratio
    if (p) {
      EXPECT_TRUE(contains(subs[p], subs[p - 1]));
    }
  }
  EXPECT_EQ(subs, nested_subsets(data, ScalingAxis::kSegments, grid, 5, 0));
  EXPECT_NE(subs[0], nested_subsets(data, ScalingAxis::kSegments, grid, 5, 1)[0]);
  EXPECT_THROW(nested_subsets(data, ScalingAxis::kSegments, {10, 300}, 5, 0), std::invalid_argument);
  EXPECT_THROW(nested_subsets(data, ScalingAxis::kSegments, {50, 50}, 5, 0), std::invalid_argument);
  EXPECT_THROW(nested_subsets(data, ScalingAxis::kSegments, {}, 5, 0), std::invalid_argument);
}

TEST(NestedSubsets, NeonatesAxis) {
  const auto data = task(20, 200, 2, 6);
  const std::vector<std::size_t> grid = {1, 2, 4, 6};
  const auto subs = nested_subsets(data, ScalingAxis::kNeonates, grid, 9, 0);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    std::set<std::string> ids;
    for (std::size_t i : subs[p]) ids.insert(data.info[i].recording);
    EXPECT_EQ(ids.size(), grid[p]);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < data.size(); ++i) expected += ids.count(data.info[i].recording);
    EXPECT_EQ(subs[p].size(), expected);  // whole neonates only
    if (p) {
      EXPECT_TRUE(contains(subs[p], subs[p - 1]));
    }
  }
  EXPECT_EQ(subs.back().size(), data.size());
  EXPECT_THROW(nested_subsets(data, ScalingAxis::kNeonates, {7}, 9, 0), std::invalid_argument);
}

TEST(NestedSubsets, ModelAxisUsesEverything) {
  const auto data = task(5, 50, 3);
  const auto subs = nested_subsets(data, ScalingAxis::kModel, {}, 0, 0);
  ASSERT_EQ(subs.size(), 1u);
  EXPECT_EQ(subs[0].size(), data.size());
}

TEST(Subset, CopiesRows) {
  const auto data = task(5, 50, 4);
  const std::vector<std::size_t> idx = {3, 10, 54};
  const auto s = subset(data, idx);
  ASSERT_EQ(s.size(), 3u);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto a = s.segment(k), b = data.segment(idx[k]);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    EXPECT_EQ(s.info[k].recording, data.info[idx[k]].recording);
  }
}

// ---- scaling run ---------------------------------------------------------

TrainConfig quick(std::size_t epochs) {
  TrainConfig c;
  c.epochs = epochs;
  return c;
}

TEST(ScalingRun, SinglePointMatchesPlainTraining) {
  const auto data = task(12, 120, 5);
  const auto held = task(6, 60, 6);
  ScalingConfig cfg;
  cfg.grid = {132};
  cfg.trials = 1;
  cfg.train = quick(1);
  cfg.seed = 17;
  const auto r = scaling_run(data, held, cfg);
  ASSERT_EQ(r.points.size(), 1u);
  ASSERT_EQ(r.points[0].trials.size(), 1u);
  const auto& tr = r.points[0].trials[0];

  TrainConfig plain = cfg.train;
  plain.seed = scaling_seed(17, 0, 0);
  EXPECT_EQ(tr.seed, plain.seed);
  const auto direct = train(subset(data, nested_subsets(data, ScalingAxis::kSegments, {132}, 17, 0)[0]),
                            variant("nano"), plain);
  const auto m = evaluate_segments(direct.params, held);
  for (const auto& name : scaling_metrics()) {
    const Metric a = metric_by_name(tr.metrics, name), b = metric_by_name(m, name);
    EXPECT_EQ(a.defined, b.defined) << name;
    EXPECT_EQ(a.value, b.value) << name;
  }
  EXPECT_EQ(tr.train_size, 132u);
  EXPECT_EQ(r.metrics, scaling_metrics());
  for (const auto& f : r.fits) EXPECT_FALSE(f.defined);  // one point
}

TEST(ScalingRun, ModelAxisAndProgress) {
  const auto data = task(6, 60, 7);
  const auto held = task(4, 40, 8);
  ScalingConfig cfg;
  cfg.axis = ScalingAxis::kModel;
  cfg.models = {custom_config(1, 4), custom_config(1, 8)};
  cfg.trials = 2;
  cfg.train = quick(1);
  std::size_t calls = 0;
  const auto r = scaling_run(data, held, cfg, [&](const ScalingPoint&, const ScalingTrial&) { ++calls; });
  EXPECT_EQ(calls, 4u);
  ASSERT_EQ(r.points.size(), 2u);
  EXPECT_EQ(r.points[0].x, static_cast<double>(count_params(cfg.models[0])));
  EXPECT_LT(r.points[0].x, r.points[1].x);
  EXPECT_NE(r.points[0].trials[0].seed, r.points[0].trials[1].seed);
  cfg.models = {custom_config(1, 8), custom_config(1, 4)};
  EXPECT_THROW(scaling_run(data, held, cfg), std::invalid_argument);
}

TEST(ScalingRun, DivergedTrialIsFlaggedAndSweepContinues) {
  auto data = task(6, 60, 9);
  std::fill(data.samples.begin(), data.samples.end(), std::numeric_limits<float>::quiet_NaN());
  const auto held = task(4, 40, 10);
  ScalingConfig cfg;
  cfg.grid = {33, 66};
  cfg.trials = 1;
  cfg.train = quick(1);
  const auto r = scaling_run(data, held, cfg);
  ASSERT_EQ(r.points.size(), 2u);
  for (const auto& p : r.points) {
    ASSERT_EQ(p.trials.size(), 1u);
    EXPECT_TRUE(p.trials[0].diverged);
  }
  const std::string csv = format_scaling_csv(r);
  EXPECT_NE(csv.find("segments,33,33,0,"), std::string::npos);
}

// ---- montage stress ------------------------------------------------------

PredictionTrace make_trace(const std::vector<std::vector<double>>& windows, double duration) {
  PredictionTrace t;
  t.recording = "r";
  t.duration = duration;
  for (std::size_t c = 0; c < windows.size(); ++c) {
    t.channels.push_back("c" + std::to_string(c));
    t.probability.push_back(windows[c]);
    t.valid.push_back(Mask(windows[c].size(), 1));
  }
  return t;
}

// Each channel carries its own block of seizure seconds, so losing a channel
// loses detections.
void block_cohort(std::size_t channels, double duration, std::uint64_t seed, std::vector<PredictionTrace>& traces,
                  std::vector<Mask>& refs) {
  Rng rng(seed);
  const std::size_t w = inference_window_count(duration);
  const std::size_t secs = mask_length(duration);
  std::vector<std::vector<double>> win(channels, std::vector<double>(w));
  Mask ref(secs, 0);
  const std::size_t block = secs / channels;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t k = 0; k < w; ++k) {
      const double t = window_center(k);
      const auto s = static_cast<std::size_t>(t);
      const bool in = s >= c * block + block / 4 && s < c * block + 3 * block / 4;
      win[c][k] = in ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.3);
    }
    for (std::size_t s = c * block + block / 4; s < c * block + 3 * block / 4; ++s) ref[s] = 1;
  }
  traces.push_back(make_trace(win, duration));
  refs.push_back(ref);
}

TEST(Montage, ZeroFractionOrNoChannelsIsExactlyZero) {
  std::vector<PredictionTrace> tr;
  std::vector<Mask> refs;
  block_cohort(4, 400, 1, tr, refs);
  MontageConfig cfg;
  cfg.trials = 5;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto c = montage_cell(tr, refs, 0.0, k, cfg);
    ASSERT_TRUE(c.auc_degradation.defined);
    EXPECT_EQ(c.auc_degradation.value, 0.0);
    EXPECT_EQ(c.mcc_degradation.value, 0.0);
  }
  const auto c = montage_cell(tr, refs, 1.0, 0, cfg);
  EXPECT_EQ(c.auc_degradation.value, 0.0);
  EXPECT_EQ(c.mcc_degradation.value, 0.0);
  EXPECT_THROW(montage_cell(tr, refs, 0.5, 4, cfg), std::invalid_argument);
  EXPECT_THROW(montage_cell(tr, refs, 1.5, 1, cfg), std::invalid_argument);
}

TEST(Montage, ChannelsNeverAtMaxDoNotMatter) {
  const double duration = 300;
  const std::size_t w = inference_window_count(duration);
  Rng rng(2);
  std::vector<double> top(w), low1(w), low2(w);
  for (std::size_t k = 0; k < w; ++k) {
    top[k] = rng.uniform(0.5, 1.0);
    low1[k] = rng.uniform(0.0, 0.4);
    low2[k] = rng.uniform(0.0, 0.4);
  }
  std::vector<PredictionTrace> tr = {make_trace({top, low1, low2}, duration)};
  Mask ref(mask_length(duration));
  for (auto& v : ref) v = rng.bernoulli(0.3);
  const std::vector<Mask> refs = {ref};
  const auto base = stressed_metrics(tr, refs, {});
  const std::size_t g = grid_length(duration);
  const std::vector<ZeroRun> runs = {{0, 1, 0, g}, {0, 2, 100, 300}};
  const auto s = stressed_metrics(tr, refs, runs);
  EXPECT_EQ(s.auc.value, base.auc.value);
  EXPECT_EQ(s.mcc.value, base.mcc.value);
}

TEST(Montage, TwoChannelDirectRecomputation) {
  const double duration = 200.5;
  const std::size_t w = inference_window_count(duration);
  Rng rng(3);
  std::vector<double> a(w), b(w);
  for (std::size_t k = 0; k < w; ++k) {
    a[k] = rng.uniform();
    b[k] = rng.uniform();
  }
  std::vector<PredictionTrace> tr = {make_trace({a, b}, duration)};
  Mask ref(mask_length(duration));
  for (auto& v : ref) v = rng.bernoulli(0.4);
  const std::vector<Mask> refs = {ref};
  const std::vector<ZeroRun> runs = {{0, 1, 37, 250}};
  const auto s = stressed_metrics(tr, refs, runs, 0.55);

  // Direct: hold-extend, zero, smooth, max, per-second summaries.
  const std::size_t g = grid_length(duration);
  std::vector<double> ga = hold_extend(a, g), gb = hold_extend(b, g);
  for (std::size_t j = 37; j < 287; ++j) gb[j] = 0;
  const auto sa = smooth(ga), sb = smooth(gb);
  std::vector<double> mx(g);
  for (std::size_t j = 0; j < g; ++j) mx[j] = std::max(sa[j], sb[j]);
  const auto prob = per_second_mean(mx, duration);
  const auto pred = threshold_mask(mx, duration, 0.55);
  EXPECT_EQ(s.auc.value, auc(prob, ref).value);
  EXPECT_EQ(s.mcc.value, mcc(confusion(pred, ref)));
}

TEST(Montage, DrawsDistinctChannelsAndRunLength) {
  std::vector<PredictionTrace> tr;
  std::vector<Mask> refs;
  block_cohort(5, 250, 4, tr, refs);
  block_cohort(5, 300, 5, tr, refs);
  Rng rng(6);
  const auto runs = draw_zero_runs(tr, 0.25, 3, rng);
  ASSERT_EQ(runs.size(), 6u);
  for (std::size_t r = 0; r < 2; ++r) {
    std::set<std::size_t> ch;
    const std::size_t g = grid_length(tr[r].duration);
    for (const auto& z : runs) {
      if (z.recording != r) continue;
      ch.insert(z.channel);
      EXPECT_EQ(z.length, static_cast<std::size_t>(std::llround(0.25 * static_cast<double>(g))));
      EXPECT_LE(z.start + z.length, g);
    }
    EXPECT_EQ(ch.size(), 3u);
  }
}

TEST(Montage, MeanDegradationGrowsWithFraction) {
  std::vector<PredictionTrace> tr;
  std::vector<Mask> refs;
  block_cohort(4, 600, 7, tr, refs);
  block_cohort(4, 480, 8, tr, refs);
  MontageConfig cfg;
  cfg.trials = 60;
  cfg.seed = 11;
  const auto r = montage_stress(tr, refs, cfg);
  EXPECT_EQ(r.channels, 4u);
  ASSERT_EQ(r.cells.size(), 4u * 3u);
  for (std::size_t k = 1; k < 4; ++k) {
    double prev_auc = -1e9, prev_mcc = -1e9;
    for (const auto& c : r.cells) {
      if (c.affected != k) continue;
      ASSERT_TRUE(c.auc_degradation.defined);
      EXPECT_GE(c.auc_degradation.value, prev_auc - 1e-9) << "k=" << k << " f=" << c.fraction;
      EXPECT_GE(c.mcc_degradation.value, prev_mcc - 1e-9) << "k=" << k << " f=" << c.fraction;
      prev_auc = c.auc_degradation.value;
      prev_mcc = c.mcc_degradation.value;
    }
    EXPECT_GT(prev_mcc, 0.0);
  }
  // More affected channels at the full fraction lose more.
  double prev = -1;
  for (const auto& c : r.cells) {
    if (c.fraction != 1.0) continue;
    EXPECT_GT(c.mcc_degradation.value, prev);
    prev = c.mcc_degradation.value;
  }
}

TEST(Montage, DeterministicAndRejectsSingleChannel) {
  std::vector<PredictionTrace> tr;
  std::vector<Mask> refs;
  block_cohort(3, 300, 9, tr, refs);
  MontageConfig cfg;
  cfg.trials = 4;
  EXPECT_EQ(format_montage_csv(montage_stress(tr, refs, cfg)), format_montage_csv(montage_stress(tr, refs, cfg)));
  std::vector<PredictionTrace> one = {make_trace({tr[0].probability[0]}, 300)};
  EXPECT_THROW(montage_stress(one, refs, cfg), std::invalid_argument);
  std::vector<Mask> bad = {Mask(10)};
  EXPECT_THROW(stressed_metrics(tr, bad, {}), std::invalid_argument);
}

TEST(Degradation, Definition) {
  EXPECT_DOUBLE_EQ(degradation_pct(Metric::of(0.8), Metric::of(0.6)).value, 25.0);
  EXPECT_DOUBLE_EQ(degradation_pct(Metric::of(0.5), Metric::of(0.6)).value, -20.0);
  EXPECT_FALSE(degradation_pct(Metric::of(0.0), Metric::of(0.6)).defined);
  EXPECT_FALSE(degradation_pct(Metric::absent("x"), Metric::of(0.6)).defined);
}

// ---- reports -------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

TEST(Report, EmptyResultsGiveHeaderOnly) {
  EXPECT_EQ(lines(format_scaling_csv({})), 1u);
  EXPECT_EQ(lines(format_fit_csv({})), 1u);
  EXPECT_EQ(lines(format_montage_csv({})), 1u);
  const std::string svg = scaling_svg({}, "auc");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("no data"), std::string::npos);
  EXPECT_NE(montage_svg({}, "mcc").find("</svg>"), std::string::npos);
}

ScalingRunResult fake_result(std::size_t points) {
  ScalingRunResult r;
  for (std::size_t p = 0; p < points; ++p) {
    ScalingPoint pt;
    pt.x = 100.0 * static_cast<double>(p + 1);
    pt.label = std::to_string(p);
    ScalingTrial t;
    t.train_size = 100 * (p + 1);
    t.metrics.auc = Metric::of(0.8 + 0.01 * static_cast<double>(p));
    t.metrics.mcc = Metric::of(0.5);
    pt.trials.push_back(t);
    r.points.push_back(pt);
  }
  r.metrics = {"auc", "mcc"};
  r.fits = {PowerLawFit{true, 0.1, 0.5, points, ""}, PowerLawFit{}};
  return r;
}

TEST(Report, OnePointOneRow) {
  const auto r = fake_result(1);
  const std::string csv = format_scaling_csv(r);
  EXPECT_EQ(lines(csv), 2u);
  EXPECT_NE(csv.find("segments,100,0,0,0,100,0,0.8,"), std::string::npos);
  EXPECT_EQ(lines(format_fit_csv(r)), 3u);
}

TEST(Report, RegenerationIsByteIdentical) {
  const auto dir = std::filesystem::temp_directory_path() / "seiznet_report_test";
  std::filesystem::remove_all(dir);
  const auto r = fake_result(3);
  emit_report(r, dir / "a");
  emit_report(r, dir / "b");
  for (const char* f : {"scaling.csv", "scaling_fit.csv", "scaling_auc.svg", "scaling_mcc.svg"}) {
    ASSERT_TRUE(std::filesystem::exists(dir / "a" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  MontageStressResult m;
  m.channels = 3;
  m.cells.push_back({0.1, 1, 20, Metric::of(1.5), Metric::of(2.5)});
  m.cells.push_back({0.5, 1, 20, Metric::of(4.0), Metric::absent("x")});
  emit_report(m, dir / "a");
  emit_report(m, dir / "b");
  for (const char* f : {"montage.csv", "montage_auc.svg", "montage_mcc.svg"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  EXPECT_EQ(lines(slurp(dir / "a" / "montage.csv")), 3u);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace seiznet
