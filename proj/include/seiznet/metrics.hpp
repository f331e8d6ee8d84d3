#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seiznet/signal.hpp"

namespace seiznet {

using Mask = std::vector<std::uint8_t>;

/// A metric value, or the reason it is undefined for the given input.
struct Metric {
  bool defined = false;
  double value = 0.0;
  std::string reason;

  static Metric of(double v) { return {true, v, {}}; }
  static Metric absent(std::string why) { return {false, 0.0, std::move(why)}; }
};

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::uint64_t n() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> ref);

/// Zero when any marginal is empty.
double mcc(const ConfusionCounts& c);

/// Chance-corrected agreement of two raters with per-rater marginals. When
/// chance agreement is 1 the value is 1 if observed agreement is 1, else 0.
double cohen_kappa(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
double cohen_kappa(const ConfusionCounts& c);
/// Two-rater agreement with pooled marginals (Scott's pi).
double scotts_pi(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// Item histogram for Fleiss' kappa: hist[k] = number of items that exactly
/// k of `raters` raters marked positive.
struct FleissTally {
  unsigned raters = 0;
  std::vector<std::uint64_t> hist;

  explicit FleissTally(unsigned m = 0) : raters(m), hist(m + 1, 0) {}
  std::uint64_t items() const;
  FleissTally& operator+=(const FleissTally& other);
};

FleissTally fleiss_tally(const std::vector<std::span<const std::uint8_t>>& masks);
/// Same degenerate rule as cohen_kappa. Needs at least 2 raters.
double fleiss_kappa(const FleissTally& tally);
double fleiss_kappa(const std::vector<std::span<const std::uint8_t>>& masks);
double fleiss_kappa(const std::vector<Mask>& masks);

/// Rank-statistic AUC with midranks for ties.
Metric auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct PrecisionRecall {
  Metric ap;
  Metric ap50;  // 2 x area over recall in (0.5, 1]
};
/// Step-wise precision-recall area, one step per distinct score threshold.
PrecisionRecall average_precision(std::span<const double> scores,
                                  std::span<const std::uint8_t> labels);

Metric pearson(std::span<const double> a, std::span<const double> b);
Metric pearson(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// Mean unweighted negative log-likelihood, p clamped to [1e-7, 1 - 1e-7].
Metric cross_entropy(std::span<const double> p, std::span<const std::uint8_t> labels);

/// Predicted events with no temporal intersection with any reference event.
std::size_t false_detections(std::span<const Event> pred, std::span<const Event> ref);
double fd_per_hour(std::span<const Event> pred, std::span<const Event> ref, double hours);

/// Seizure minutes per hour in consecutive 3600 s bins of a 1 s mask. A
/// trailing partial bin is scaled by its own length.
std::vector<double> hourly_burden(std::span<const std::uint8_t> mask);
/// Pearson r of hourly burden, bins of all recordings concatenated. Needs
/// at least 2 bins.
Metric seizure_burden_r(const std::vector<Mask>& pred, const std::vector<Mask>& ref);

/// Unanimous AND of annotator masks.
Mask consensus(const std::vector<Mask>& masks);

struct GlobalEventStats {
  Event span;
  std::size_t channels_involved = 0;
  double kappa = 0.0;  // Fleiss over channels-as-raters within the span
};

struct AnnotationStats {
  std::vector<GlobalEventStats> events;
  std::vector<double> channel_minutes;
};

/// Groups per-channel events into global events by transitive overlap and
/// summarizes each group over 1 s masks.
AnnotationStats annotation_stats(const std::vector<std::vector<Event>>& channel_events,
                                 double duration);

struct DurationBin {
  double lo = 0.0;
  double hi = 0.0;  // infinity for the last bin
  std::size_t events = 0;
  std::size_t detected = 0;
  Metric rate;
};

/// A reference event counts as detected if any predicted event intersects it.
std::vector<DurationBin> detection_by_duration(std::span<const Event> pred,
                                               std::span<const Event> ref,
                                               std::vector<double> edges = {30, 60, 120, 300});

/// One recording's aligned 1 s series.
struct EvalInput {
  std::string id;
  std::vector<double> probability;
  Mask pred;
  Mask ref;
};

struct MetricsReport {
  std::string id;  // recording id, or "cc" for the concatenation
  std::size_t seconds = 0;
  ConfusionCounts counts;
  Metric ap, ap50, pearson_r, cross_entropy, auc;
  Metric ppv, npv, sensitivity, specificity, error_rate, mcc, kappa, fd_per_hour, burden_r;
};

MetricsReport evaluate(const EvalInput& input);
/// Pools all recordings (ordered by id); events and hourly bins never span a
/// recording boundary.
MetricsReport evaluate_concatenated(std::vector<EvalInput> inputs);

/// Column names in report order.
const std::vector<std::string>& report_columns();
std::string format_report_csv(const std::vector<MetricsReport>& reports);

}  // namespace seiznet
