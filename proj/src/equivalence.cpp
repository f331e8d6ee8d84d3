#include "seiznet/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "seiznet/rng.hpp"

namespace seiznet {

namespace {

constexpr std::uint64_t kBootstrapStream = 21;

void check_neonate(const NeonateAnnotations& n) {
  if (n.experts.size() != kExperts) {
    throw std::invalid_argument("equivalence test needs exactly 3 experts, neonate '" + n.id + "' has " +
                                std::to_string(n.experts.size()));
  }
  for (const auto& e : n.experts) {
    if (e.size() != n.ai.size()) {
      throw std::invalid_argument("neonate '" + n.id + "': expert and AI masks differ in length");
    }
  }
}

}  // namespace

NeonateTallies neonate_tallies(const NeonateAnnotations& n) {
  check_neonate(n);
  NeonateTallies t;
  const auto& e = n.experts;
  t.experts = fleiss_tally({e[0], e[1], e[2]});
  for (std::size_t a = 0; a < kExperts; ++a) {
    std::vector<std::span<const std::uint8_t>> triple{e[0], e[1], e[2]};
    triple[a] = n.ai;
    t.replaced[a] = fleiss_tally(triple);
  }
  return t;
}

DeltaKappa delta_kappa_from(const NeonateTallies& pooled) {
  DeltaKappa d;
  d.kappa_experts = fleiss_kappa(pooled.experts);
  double sum = 0.0;
  for (std::size_t a = 0; a < kExperts; ++a) {
    d.kappa_ai[a] = fleiss_kappa(pooled.replaced[a]);
    d.delta[a] = d.kappa_ai[a] - d.kappa_experts;
    sum += d.delta[a];
  }
  d.mean = sum / static_cast<double>(kExperts);
  return d;
}

DeltaKappa delta_kappa(const std::vector<NeonateAnnotations>& cohort) {
  if (cohort.empty()) throw std::invalid_argument("delta_kappa: empty cohort");
  NeonateTallies pooled;
  for (const auto& n : cohort) {
    const NeonateTallies t = neonate_tallies(n);
    pooled.experts += t.experts;
    for (std::size_t a = 0; a < kExperts; ++a) pooled.replaced[a] += t.replaced[a];
  }
  return delta_kappa_from(pooled);
}

DeltaKappa delta_kappa(const std::vector<Mask>& experts, const Mask& ai) {
  return delta_kappa(std::vector<NeonateAnnotations>{{"", experts, ai}});
}

std::vector<std::size_t> bootstrap_indices(std::size_t neonates, std::uint64_t seed, std::size_t iteration) {
  Rng rng(derive_seed(seed, {kBootstrapStream, iteration}));
  std::vector<std::size_t> idx(neonates);
  for (auto& i : idx) i = rng.below(neonates);
  return idx;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(q >= 0 && q <= 1)) throw std::invalid_argument("percentile: q outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

KappaTestResult bootstrap_test(const std::vector<NeonateAnnotations>& cohort, std::size_t iterations,
                               std::uint64_t seed) {
  if (cohort.size() < 2) throw std::invalid_argument("bootstrap_test: needs at least 2 neonates");
  if (iterations == 0) throw std::invalid_argument("bootstrap_test: iterations must be >= 1");
  std::vector<NeonateTallies> tallies;
  tallies.reserve(cohort.size());
  for (const auto& n : cohort) tallies.push_back(neonate_tallies(n));

  KappaTestResult r;
  r.point = delta_kappa(cohort);
  r.neonates = cohort.size();
  r.iterations = iterations;
  r.seed = seed;
  r.bootstrap.reserve(iterations);
  for (std::size_t it = 0; it < iterations; ++it) {
    NeonateTallies pooled;
    for (std::size_t i : bootstrap_indices(cohort.size(), seed, it)) {
      pooled.experts += tallies[i].experts;
      for (std::size_t a = 0; a < kExperts; ++a) pooled.replaced[a] += tallies[i].replaced[a];
    }
    r.bootstrap.push_back(delta_kappa_from(pooled).mean);
  }
  r.ci_low = percentile(r.bootstrap, 0.025);
  r.ci_high = percentile(r.bootstrap, 0.975);
  const double n = static_cast<double>(iterations);
  const double below = static_cast<double>(std::count_if(r.bootstrap.begin(), r.bootstrap.end(), [](double v) { return v <= 0; })) / n;
  const double above = static_cast<double>(std::count_if(r.bootstrap.begin(), r.bootstrap.end(), [](double v) { return v >= 0; })) / n;
  r.p_value = std::min(1.0, 2.0 * std::min(below, above));
  r.equivalent = r.ci_low <= 0.0 && 0.0 <= r.ci_high;
  return r;
}

std::string format_kappa_json(const KappaTestResult& r) {
  nlohmann::ordered_json j;
  j["kappa_experts"] = r.point.kappa_experts;
  j["kappa_ai"] = r.point.kappa_ai;
  j["delta_kappa"] = r.point.delta;
  j["delta_kappa_mean"] = r.point.mean;
  j["ci95"] = {r.ci_low, r.ci_high};
  j["p_value"] = r.p_value;
  j["equivalent"] = r.equivalent;
  j["neonates"] = r.neonates;
  j["iterations"] = r.iterations;
  j["seed"] = r.seed;
  j["bootstrap"] = r.bootstrap;
  return j.dump(2) + "\n";
}

std::vector<NeonateAnnotations> align_annotations(const std::vector<EventTable>& experts, const EventTable& ai,
                                                  const std::map<std::string, double>& durations) {
  if (experts.size() != kExperts) {
    throw std::invalid_argument("equivalence test needs exactly 3 expert annotation files, got " +
                                std::to_string(experts.size()));
  }
  if (durations.empty()) throw std::invalid_argument("no recordings to compare");
  const bool single = durations.size() == 1;
  auto rows_for = [&](const EventTable& t, const std::string& id, const std::string& what) {
    if (!t.has_recording_column) {
      if (!single) throw std::invalid_argument(what + " has no recording column but several recordings are compared");
      return global_events(t);
    }
    for (const auto& rec : t.recordings()) {
      if (!durations.count(rec)) throw std::invalid_argument(what + " mentions unknown recording '" + rec + "'");
    }
    return global_events(t.for_recording(id));
  };
  std::vector<NeonateAnnotations> out;
  for (const auto& [id, duration] : durations) {
    NeonateAnnotations n;
    n.id = id;
    for (std::size_t e = 0; e < kExperts; ++e) {
      n.experts.push_back(events_to_mask(rows_for(experts[e], id, "expert " + std::to_string(e + 1)), duration));
    }
    n.ai = events_to_mask(rows_for(ai, id, "AI annotation"), duration);
    out.push_back(std::move(n));
  }
  return out;
}

std::map<std::string, double> parse_durations_csv(std::string_view text, std::string_view source) {
  std::map<std::string, double> out;
  bool header = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto f = split_csv(line);
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (!header) {
      if (f.size() != 2 || f[0] != "recording" || f[1] != "duration_s") {
        throw std::invalid_argument(where + ": header must be recording,duration_s");
      }
      header = true;
      continue;
    }
    if (f.size() != 2) throw std::invalid_argument(where + ": expected 2 fields");
    const double d = parse_number(f[1], where + " duration_s");
    if (!(d > 0)) throw std::invalid_argument(where + ": duration must be positive");
    if (!out.emplace(f[0], d).second) throw std::invalid_argument(where + ": duplicate recording " + f[0]);
  }
  if (!header) throw std::invalid_argument(std::string(source) + ": missing header");
  return out;
}

}  // namespace seiznet
