#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "seiznet/containers.hpp"
#include "seiznet/synth.hpp"

namespace seiznet {
namespace {

double total_seconds(const std::vector<Event>& ev) {
  double s = 0;
  for (const auto& e : ev) s += e.offset - e.onset;
  return s;
}

TEST(Synth, PrevalenceOverLongRecording) {
  SyntheticCohort c;
  c.neonates = 1;
  c.channels = 1;
  c.duration_s = 51 * 3600.0;
  c.seed = 4;
  const auto cohort = synth_generate(c);
  ASSERT_EQ(cohort.size(), 1u);
  EXPECT_NEAR(total_seconds(cohort[0].global), 3600.0, 360.0);
  EXPECT_NEAR(cohort[0].recording.duration(), c.duration_s, 1e-9);
}

TEST(Synth, DeterministicPerSeed) {
  SyntheticCohort c;
  c.neonates = 2;
  c.channels = 3;
  c.duration_s = 1200;
  c.prevalence = 0.05;
  c.seed = 9;
  const auto a = synth_generate(c), b = synth_generate(c);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].recording.channels, b[i].recording.channels);
    EXPECT_EQ(a[i].annotations.rows, b[i].annotations.rows);
  }
  EXPECT_NE(a[0].recording.channels, a[1].recording.channels);
  c.seed = 10;
  EXPECT_NE(synth_generate(c)[0].recording.channels, a[0].recording.channels);
}

TEST(Synth, LabelsAreConsistent) {
  SyntheticCohort c;
  c.neonates = 3;
  c.channels = 6;
  c.duration_s = 1800;
  c.prevalence = 0.06;
  c.seed = 2;
  for (const auto& neo : synth_generate(c)) {
    const double d = neo.recording.duration();
    const auto global = events_to_mask(neo.global, d);
    EXPECT_EQ(global, events_to_mask(global_events(neo.annotations), d));
    EXPECT_EQ(static_cast<std::size_t>(total_seconds(neo.global)),
              static_cast<std::size_t>(std::llround(c.prevalence * c.duration_s)));
    const auto per_channel = channel_events(neo.annotations, neo.recording.channel_names);
    for (const auto& g : neo.global) {
      EXPECT_EQ(g.onset, std::floor(g.onset));
      EXPECT_GE(g.offset - g.onset, c.min_event_s);
      EXPECT_LE(g.offset - g.onset, c.max_event_s);
      bool lead = false;
      for (const auto& ch : per_channel) {
        for (const auto& e : ch) lead |= e.onset == g.onset && e.offset == g.offset;
      }
      EXPECT_TRUE(lead);
    }
    for (std::size_t k = 1; k < neo.global.size(); ++k) {
      EXPECT_GE(neo.global[k].onset - neo.global[k - 1].offset, c.min_gap_s);
    }
    for (const auto& row : neo.annotations.rows) EXPECT_EQ(row.annotator, "synth");
  }
}

TEST(Synth, SeizureSecondsCarryMorePower) {
  SyntheticCohort c;
  c.neonates = 1;
  c.channels = 2;
  c.duration_s = 1800;
  c.prevalence = 0.1;
  c.seed = 5;
  const auto neo = synth_generate(c)[0];
  const auto per_channel = channel_events(neo.annotations, neo.recording.channel_names);
  for (std::size_t ch = 0; ch < 2; ++ch) {
    const auto mask = events_to_mask(per_channel[ch], neo.recording.duration());
    double in = 0, out = 0;
    std::size_t nin = 0, nout = 0;
    const auto& x = neo.recording.channels[ch];
    for (std::size_t k = 0; k < x.size(); ++k) {
      const auto s = static_cast<std::size_t>(static_cast<double>(k) / neo.recording.rate);
      (mask[s] ? in : out) += x[k] * x[k];
      (mask[s] ? nin : nout) += 1;
    }
    if (nin == 0) continue;
    EXPECT_GT(in / static_cast<double>(nin), 2 * out / static_cast<double>(nout));
  }
}

TEST(Synth, RejectsImpossibleSettings) {
  SyntheticCohort c;
  c.duration_s = 600;
  c.prevalence = 0.9;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  SyntheticCohort r;
  r.rate = 100;
  EXPECT_THROW(r.validate(), std::invalid_argument);
  SyntheticCohort tiny;
  tiny.duration_s = 600;
  tiny.prevalence = 0.005;  // 3 s, below the shortest event
  EXPECT_THROW(synth_generate(tiny), std::invalid_argument);
}

TEST(Synth, ConfigParsing) {
  const auto c = parse_cohort_config(R"({"neonates": 2, "rate": 256, "prevalence": 0.05, "seed": 12})");
  EXPECT_EQ(c.neonates, 2u);
  EXPECT_EQ(c.rate, 256.0);
  EXPECT_EQ(c.prevalence, 0.05);
  EXPECT_EQ(c.seed, 12u);
  EXPECT_EQ(c.channels, SyntheticCohort{}.channels);
  EXPECT_THROW(parse_cohort_config(R"({"neonate": 2})"), std::invalid_argument);
  EXPECT_THROW(parse_cohort_config("[]"), std::invalid_argument);
}

TEST(Synth, WriteCohortRoundTrip) {
  SyntheticCohort c;
  c.neonates = 2;
  c.channels = 2;
  c.duration_s = 600;
  c.prevalence = 0.05;
  c.rate = 200;
  const auto cohort = synth_generate(c);
  const auto dir = std::filesystem::temp_directory_path() / "seiznet_synth_test";
  std::filesystem::remove_all(dir);
  write_cohort(dir, cohort);
  for (const auto& neo : cohort) {
    const auto rec = read_recording(dir / neo.recording.id);
    EXPECT_EQ(rec.rate, 200.0);
    EXPECT_EQ(rec.channel_names, neo.recording.channel_names);
    const auto table = read_event_csv(dir / neo.recording.id / "annotations.csv");
    EXPECT_EQ(events_to_mask(global_events(table), 600), events_to_mask(neo.global, 600));
  }
  std::filesystem::remove_all(dir);
}

TEST(SeparableTask, LabelsAndPseudoNeonates) {
  SeparableTask t;
  t.seizure = 10;
  t.non_seizure = 90;
  t.neonates = 4;
  const auto d = separable_segments(t);
  ASSERT_EQ(d.size(), 100u);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    pos += d.label(i);
    EXPECT_TRUE(d.info[i].valid);
    EXPECT_EQ(d.info[i].recording, "neonate0" + std::to_string(i % 4));
  }
  EXPECT_EQ(pos, 10u);
  EXPECT_EQ(d.samples, separable_segments(t).samples);
}

}  // namespace
}  // namespace seiznet
