#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seiznet/containers.hpp"
#include "seiznet/inference.hpp"
#include "seiznet/metrics.hpp"
#include "seiznet/model.hpp"
#include "seiznet/training.hpp"

namespace seiznet {

// ---- scaling sweeps ------------------------------------------------------

enum class ScalingAxis { kSegments, kNeonates, kModel };
ScalingAxis parse_axis(std::string_view name);
std::string axis_name(ScalingAxis axis);

struct PowerLawFit {
  bool defined = false;
  double exponent = 0.0;
  double coefficient = 0.0;
  std::size_t points = 0;
  std::string reason;
};
/// OLS of log y on log x over the pairs where both are positive.
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y);

struct ScalingConfig {
  ScalingAxis axis = ScalingAxis::kSegments;
  /// Segment or neonate counts, strictly increasing. Ignored for the model axis.
  std::vector<std::size_t> grid;
  /// Model grid for the model axis; otherwise models.front() (or Nano) is trained.
  std::vector<ModelConfig> models;
  std::size_t trials = 3;
  TrainConfig train;
  std::uint64_t seed = 0;
};

struct ScalingTrial {
  std::uint64_t seed = 0;     // training seed of this (point, trial)
  std::size_t train_size = 0; // valid segments used
  bool diverged = false;
  std::string diagnostic;
  MetricsReport metrics;      // on the held-out set
};

struct ScalingPoint {
  double x = 0.0;  // segments, neonates or parameter count
  std::string label;
  std::vector<ScalingTrial> trials;
};

struct ScalingRunResult {
  ScalingAxis axis = ScalingAxis::kSegments;
  std::vector<ScalingPoint> points;
  std::vector<std::string> metrics;  // names that were fitted
  std::vector<PowerLawFit> fits;     // parallel to metrics
};

/// Numeric metrics a sweep reports, by report column name.
const std::vector<std::string>& scaling_metrics();
Metric metric_by_name(const MetricsReport& report, std::string_view name);

/// Indices of `data` used at each grid point of one trial. Seizure and
/// non-seizure items are drawn as prefixes of fixed permutations (segments
/// axis) or whole neonates are added in a fixed random order (neonates
/// axis), so every subset contains the previous one.
std::vector<std::vector<std::size_t>> nested_subsets(const SegmentDataset& data, ScalingAxis axis,
                                                     const std::vector<std::size_t>& grid, std::uint64_t seed,
                                                     std::size_t trial);

SegmentDataset subset(const SegmentDataset& data, std::span<const std::size_t> indices);

/// Segment-level metrics of `params` on a labeled set (threshold 0.5).
MetricsReport evaluate_segments(const ModelParams& params, const SegmentDataset& heldout);

/// Seed of the training run at (point, trial).
std::uint64_t scaling_seed(std::uint64_t seed, std::size_t point, std::size_t trial);

using ScalingProgress = std::function<void(const ScalingPoint&, const ScalingTrial&)>;
ScalingRunResult scaling_run(const SegmentDataset& train, const SegmentDataset& heldout, const ScalingConfig& config,
                             const ScalingProgress& progress = {});

// ---- montage stress ------------------------------------------------------

inline const std::vector<double> kDropFractions = {0.10, 0.25, 0.50, 1.00};

/// Zeroes grid points [start, start + length) of one channel's 4 Hz output.
struct ZeroRun {
  std::size_t recording = 0;
  std::size_t channel = 0;
  std::size_t start = 0;
  std::size_t length = 0;
};

struct StressMetrics {
  Metric auc;
  Metric mcc;
};

/// AUC and MCC of the global decision over all recordings after applying `runs`.
StressMetrics stressed_metrics(const std::vector<PredictionTrace>& traces, const std::vector<Mask>& refs,
                               std::span<const ZeroRun> runs, double threshold = kDefaultThreshold);

/// One trial's runs: `affected` distinct random channels per recording, each
/// with its own run of round(fraction * grid length) points at a random start.
std::vector<ZeroRun> draw_zero_runs(const std::vector<PredictionTrace>& traces, double fraction,
                                    std::size_t affected, Rng& rng);

/// 100 * (baseline - stressed) / baseline; absent if either is undefined or
/// the baseline is 0.
Metric degradation_pct(const Metric& baseline, const Metric& stressed);

struct MontageCell {
  double fraction = 0.0;
  std::size_t affected = 0;
  std::size_t trials = 0;
  Metric auc_degradation;  // mean over trials
  Metric mcc_degradation;
};

struct MontageStressResult {
  std::size_t channels = 0;
  StressMetrics baseline;
  std::vector<MontageCell> cells;
};

struct MontageConfig {
  std::vector<double> fractions = kDropFractions;
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  double threshold = kDefaultThreshold;
};

/// One cell; rejects affected >= channel count.
MontageCell montage_cell(const std::vector<PredictionTrace>& traces, const std::vector<Mask>& refs,
                         double fraction, std::size_t affected, const MontageConfig& config,
                         std::size_t fraction_index = 0);
/// Every fraction with 1 .. channels-1 affected channels.
MontageStressResult montage_stress(const std::vector<PredictionTrace>& traces, const std::vector<Mask>& refs,
                                   const MontageConfig& config = {});

// ---- reports -------------------------------------------------------------

std::string format_scaling_csv(const ScalingRunResult& result);
std::string format_fit_csv(const ScalingRunResult& result);
std::string format_montage_csv(const MontageStressResult& result);
/// Mean of `metric` per grid point with min/max error bars, log-log axes.
std::string scaling_svg(const ScalingRunResult& result, std::string_view metric);
/// Degradation against drop fraction, one line per affected-channel count.
std::string montage_svg(const MontageStressResult& result, std::string_view metric);

/// Global 1 Hz probability against a reference mask.
std::string trace_svg(const std::string& title, std::span<const double> probability, std::span<const std::uint8_t> ref,
                      double threshold = kDefaultThreshold);

/// scaling.csv, scaling_fit.csv and one scaling_<metric>.svg per fitted metric.
void emit_report(const ScalingRunResult& result, const std::filesystem::path& dir);
/// montage.csv, montage_auc.svg and montage_mcc.svg.
void emit_report(const MontageStressResult& result, const std::filesystem::path& dir);

}  // namespace seiznet
