#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "seiznet/containers.hpp"
#include "seiznet/metrics.hpp"

namespace seiznet {

inline constexpr std::size_t kExperts = 3;

/// One neonate's global 1 s masks: three experts and the AI.
struct NeonateAnnotations {
  std::string id;
  std::vector<Mask> experts;
  Mask ai;
};

struct DeltaKappa {
  double kappa_experts = 0.0;
  std::array<double, kExperts> kappa_ai{};  // AI in place of expert a
  std::array<double, kExperts> delta{};     // kappa_ai[a] - kappa_experts
  double mean = 0.0;
};

/// Fleiss histograms of one neonate: the expert triple and the three
/// triples with one expert replaced by the AI.
struct NeonateTallies {
  FleissTally experts{kExperts};
  std::array<FleissTally, kExperts> replaced{FleissTally(kExperts), FleissTally(kExperts),
                                             FleissTally(kExperts)};
};

/// Rejects anything but three experts and masks of one length.
NeonateTallies neonate_tallies(const NeonateAnnotations& n);
DeltaKappa delta_kappa_from(const NeonateTallies& pooled);
/// Over the concatenation of all neonates.
DeltaKappa delta_kappa(const std::vector<NeonateAnnotations>& cohort);
DeltaKappa delta_kappa(const std::vector<Mask>& experts, const Mask& ai);

/// Neonate indices drawn with replacement for one bootstrap iteration.
std::vector<std::size_t> bootstrap_indices(std::size_t neonates, std::uint64_t seed, std::size_t iteration);

/// Linear interpolation between order statistics, q in [0, 1].
double percentile(std::vector<double> values, double q);

struct KappaTestResult {
  DeltaKappa point;
  std::size_t neonates = 0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  bool equivalent = false;  // the 95 % interval contains 0
  std::vector<double> bootstrap;  // mean delta per iteration, in iteration order
};

KappaTestResult bootstrap_test(const std::vector<NeonateAnnotations>& cohort, std::size_t iterations = 1000,
                               std::uint64_t seed = 0);

std::string format_kappa_json(const KappaTestResult& result);

/// Builds per-neonate global masks from annotation tables. `durations` lists
/// every neonate; rows for other recordings are rejected. A table without a
/// recording column is allowed only for a single neonate.
std::vector<NeonateAnnotations> align_annotations(const std::vector<EventTable>& experts, const EventTable& ai,
                                                  const std::map<std::string, double>& durations);

/// recording,duration_s CSV.
std::map<std::string, double> parse_durations_csv(std::string_view text, std::string_view source = "<memory>");

}  // namespace seiznet
