#include "seiznet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "seiznet/containers.hpp"

namespace seiznet {

namespace {

constexpr double kHour = 3600.0;

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

// (po - pe) / (1 - pe) with the degenerate rule; agreement terms given as
// exact integer ratios so pe == 1 is detected without rounding.
double kappa_from(double po, unsigned __int128 pe_num, unsigned __int128 pe_den) {
  if (pe_num == pe_den) return po == 1.0 ? 1.0 : 0.0;
  const double pe = static_cast<double>(pe_num) / static_cast<double>(pe_den);
  return (po - pe) / (1.0 - pe);
}

Metric ratio(std::uint64_t num, std::uint64_t den, const char* why) {
  if (den == 0) return Metric::absent(why);
  return Metric::of(static_cast<double>(num) / static_cast<double>(den));
}

std::vector<std::span<const std::uint8_t>> spans_of(const std::vector<Mask>& masks) {
  std::vector<std::span<const std::uint8_t>> out;
  out.reserve(masks.size());
  for (const auto& m : masks) out.emplace_back(m);
  return out;
}

}  // namespace

ConfusionCounts confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> ref) {
  require_same_length(pred.size(), ref.size(), "confusion");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool r = ref[i] != 0;
    if (p && r) ++c.tp;
    else if (p) ++c.fp;
    else if (r) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double mcc(const ConfusionCounts& c) {
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(den);
}

double cohen_kappa(const ConfusionCounts& c) {
  const std::uint64_t n = c.n();
  if (n == 0) return 1.0;
  using u128 = unsigned __int128;
  const u128 a1 = c.tp + c.fp, a0 = c.fn + c.tn;  // rater a = pred
  const u128 b1 = c.tp + c.fn, b0 = c.fp + c.tn;  // rater b = ref
  const double po = static_cast<double>(c.tp + c.tn) / static_cast<double>(n);
  return kappa_from(po, a1 * b1 + a0 * b0, static_cast<u128>(n) * n);
}

double cohen_kappa(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  return cohen_kappa(confusion(a, b));
}

double scotts_pi(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  const ConfusionCounts c = confusion(a, b);
  const std::uint64_t n = c.n();
  if (n == 0) return 1.0;
  using u128 = unsigned __int128;
  const u128 ones = 2 * c.tp + c.fp + c.fn;
  const u128 zeros = 2 * static_cast<u128>(n) - ones;
  const double po = static_cast<double>(c.tp + c.tn) / static_cast<double>(n);
  return kappa_from(po, ones * ones + zeros * zeros, 4 * static_cast<u128>(n) * n);
}

std::uint64_t FleissTally::items() const {
  return std::accumulate(hist.begin(), hist.end(), std::uint64_t{0});
}

FleissTally& FleissTally::operator+=(const FleissTally& other) {
  if (other.raters != raters) throw std::invalid_argument("FleissTally: rater count mismatch");
  for (std::size_t k = 0; k < hist.size(); ++k) hist[k] += other.hist[k];
  return *this;
}

FleissTally fleiss_tally(const std::vector<std::span<const std::uint8_t>>& masks) {
  if (masks.size() < 2) throw std::invalid_argument("fleiss_kappa: needs at least 2 raters");
  const std::size_t n = masks.front().size();
  for (const auto& m : masks) require_same_length(m.size(), n, "fleiss_kappa");
  FleissTally t(static_cast<unsigned>(masks.size()));
  for (std::size_t i = 0; i < n; ++i) {
    unsigned k = 0;
    for (const auto& m : masks) k += m[i] != 0 ? 1u : 0u;
    ++t.hist[k];
  }
  return t;
}

double fleiss_kappa(const FleissTally& t) {
  if (t.raters < 2) throw std::invalid_argument("fleiss_kappa: needs at least 2 raters");
  const std::uint64_t items = t.items();
  if (items == 0) return 1.0;
  using u128 = unsigned __int128;
  const u128 m = t.raters;
  u128 agree_pairs = 0;  // sum over items of n1(n1-1) + n0(n0-1)
  u128 ones = 0;
  for (u128 k = 0; k <= m; ++k) {
    const u128 cnt = t.hist[static_cast<std::size_t>(k)];
    agree_pairs += cnt * (k * (k - (k > 0 ? 1 : 0)) + (m - k) * (m - k - (m > k ? 1 : 0)));
    ones += cnt * k;
  }
  const u128 total = static_cast<u128>(items) * m;
  const u128 zeros = total - ones;
  const double po = static_cast<double>(agree_pairs) / static_cast<double>(static_cast<u128>(items) * m * (m - 1));
  return kappa_from(po, ones * ones + zeros * zeros, total * total);
}

double fleiss_kappa(const std::vector<std::span<const std::uint8_t>>& masks) {
  return fleiss_kappa(fleiss_tally(masks));
}

double fleiss_kappa(const std::vector<Mask>& masks) { return fleiss_kappa(spans_of(masks)); }

Metric auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  require_same_length(scores.size(), labels.size(), "auc");
  const std::size_t n = scores.size();
  std::size_t pos = 0;
  for (auto l : labels) pos += l != 0 ? 1 : 0;
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) return Metric::absent("single-class reference");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the rank sum keeps midranks integral.
  std::uint64_t twice_rank_sum = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    std::size_t pos_in_tie = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      pos_in_tie += labels[order[j]] != 0 ? 1 : 0;
      ++j;
    }
    // ranks i+1 .. j, midrank (i + 1 + j) / 2
    twice_rank_sum += static_cast<std::uint64_t>(pos_in_tie) * (i + 1 + j);
    i = j;
  }
  const double u = static_cast<double>(twice_rank_sum) / 2.0 -
                   static_cast<double>(pos) * static_cast<double>(pos + 1) / 2.0;
  return Metric::of(u / (static_cast<double>(pos) * static_cast<double>(neg)));
}

PrecisionRecall average_precision(std::span<const double> scores,
                                  std::span<const std::uint8_t> labels) {
  require_same_length(scores.size(), labels.size(), "average_precision");
  const std::size_t n = scores.size();
  std::size_t pos = 0;
  for (auto l : labels) pos += l != 0 ? 1 : 0;
  if (pos == 0 || pos == n) {
    return {Metric::absent("single-class reference"), Metric::absent("single-class reference")};
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0, ap50 = 0.0, prev_recall = 0.0;
  std::size_t tp = 0, taken = 0, i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      tp += labels[order[j]] != 0 ? 1 : 0;
      ++j;
    }
    taken = j;
    const double recall = static_cast<double>(tp) / static_cast<double>(pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(taken);
    ap += (recall - prev_recall) * precision;
    ap50 += std::max(0.0, recall - std::max(prev_recall, 0.5)) * precision;
    prev_recall = recall;
    i = j;
  }
  return {Metric::of(ap), Metric::of(2.0 * ap50)};
}

Metric pearson(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "pearson");
  const std::size_t n = a.size();
  if (n < 2) return Metric::absent("fewer than 2 points");
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return Metric::absent("constant series");
  return Metric::of(sab / std::sqrt(saa * sbb));
}

Metric pearson(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  return pearson(x, y);
}

Metric cross_entropy(std::span<const double> p, std::span<const std::uint8_t> labels) {
  require_same_length(p.size(), labels.size(), "cross_entropy");
  if (p.empty()) return Metric::absent("empty series");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], 1e-7, 1.0 - 1e-7);
    s -= labels[i] != 0 ? std::log(q) : std::log(1.0 - q);
  }
  return Metric::of(s / static_cast<double>(p.size()));
}

std::size_t false_detections(std::span<const Event> pred, std::span<const Event> ref) {
  std::size_t count = 0;
  for (const Event& p : pred) {
    const bool hit = std::any_of(ref.begin(), ref.end(), [&](const Event& r) {
      return std::min(p.offset, r.offset) > std::max(p.onset, r.onset);
    });
    count += hit ? 0 : 1;
  }
  return count;
}

double fd_per_hour(std::span<const Event> pred, std::span<const Event> ref, double hours) {
  if (!(hours > 0)) throw std::invalid_argument("fd_per_hour: duration must be positive");
  return static_cast<double>(false_detections(pred, ref)) / hours;
}

std::vector<double> hourly_burden(std::span<const std::uint8_t> mask) {
  std::vector<double> out;
  const auto bin = static_cast<std::size_t>(kHour);
  for (std::size_t lo = 0; lo < mask.size(); lo += bin) {
    const std::size_t hi = std::min(mask.size(), lo + bin);
    std::size_t pos = 0;
    for (std::size_t i = lo; i < hi; ++i) pos += mask[i] != 0 ? 1 : 0;
    const double minutes = static_cast<double>(pos) / 60.0;
    out.push_back(minutes / (static_cast<double>(hi - lo) / kHour));
  }
  return out;
}

Metric seizure_burden_r(const std::vector<Mask>& pred, const std::vector<Mask>& ref) {
  require_same_length(pred.size(), ref.size(), "seizure_burden_r recordings");
  std::vector<double> bp, br;
  for (std::size_t r = 0; r < pred.size(); ++r) {
    require_same_length(pred[r].size(), ref[r].size(), "seizure_burden_r");
    for (double v : hourly_burden(pred[r])) bp.push_back(v);
    for (double v : hourly_burden(ref[r])) br.push_back(v);
  }
  if (bp.size() < 2) return Metric::absent("fewer than 2 hourly bins");
  return pearson(bp, br);
}

Mask consensus(const std::vector<Mask>& masks) {
  if (masks.empty()) throw std::invalid_argument("consensus: no annotators");
  Mask out = masks.front();
  for (const auto& m : masks) {
    require_same_length(m.size(), out.size(), "consensus");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] && m[i]) ? 1 : 0;
  }
  return out;
}

AnnotationStats annotation_stats(const std::vector<std::vector<Event>>& channel_events,
                                 double duration) {
  AnnotationStats st;
  std::vector<Mask> masks;
  std::vector<Event> all;
  for (const auto& ev : channel_events) {
    const auto merged = merge_events(ev);
    double minutes = 0;
    for (const Event& e : merged) {
      minutes += e.duration() / 60.0;
      all.push_back(e);
    }
    st.channel_minutes.push_back(minutes);
    masks.push_back(events_to_mask(merged, duration));
  }
  std::sort(all.begin(), all.end(), [](const Event& a, const Event& b) { return a.onset < b.onset; });
  std::vector<Event> groups;
  for (const Event& e : all) {
    if (!groups.empty() && e.onset < groups.back().offset) {
      groups.back().offset = std::max(groups.back().offset, e.offset);
    } else {
      groups.push_back(e);
    }
  }
  for (const Event& g : groups) {
    GlobalEventStats gs;
    gs.span = g;
    const auto lo = static_cast<std::size_t>(std::floor(g.onset));
    const auto hi = std::min(mask_length(duration), static_cast<std::size_t>(std::ceil(g.offset - 1e-9)));
    std::vector<std::span<const std::uint8_t>> window;
    for (const auto& m : masks) {
      std::span<const std::uint8_t> w(m.data() + lo, hi - lo);
      if (std::any_of(w.begin(), w.end(), [](std::uint8_t v) { return v != 0; })) ++gs.channels_involved;
      window.push_back(w);
    }
    gs.kappa = window.size() >= 2 ? fleiss_kappa(window) : 1.0;
    st.events.push_back(gs);
  }
  return st;
}

std::vector<DurationBin> detection_by_duration(std::span<const Event> pred,
                                               std::span<const Event> ref,
                                               std::vector<double> edges) {
  if (!std::is_sorted(edges.begin(), edges.end())) {
    throw std::invalid_argument("detection_by_duration: bin edges must increase");
  }
  std::vector<DurationBin> bins;
  double lo = 0.0;
  for (double e : edges) {
    bins.push_back({lo, e, 0, 0, {}});
    lo = e;
  }
  bins.push_back({lo, std::numeric_limits<double>::infinity(), 0, 0, {}});
  for (const Event& r : ref) {
    const double d = r.duration();
    auto it = std::find_if(bins.begin(), bins.end(), [&](const DurationBin& b) { return d >= b.lo && d < b.hi; });
    ++it->events;
    const bool hit = std::any_of(pred.begin(), pred.end(), [&](const Event& p) {
      return std::min(p.offset, r.offset) > std::max(p.onset, r.onset);
    });
    if (hit) ++it->detected;
  }
  for (auto& b : bins) b.rate = ratio(b.detected, b.events, "no reference events in bin");
  return bins;
}

namespace {

void fill_binary(MetricsReport& rep) {
  const ConfusionCounts& c = rep.counts;
  rep.ppv = ratio(c.tp, c.tp + c.fp, "no predicted positives");
  rep.npv = ratio(c.tn, c.tn + c.fn, "no predicted negatives");
  rep.sensitivity = ratio(c.tp, c.tp + c.fn, "no reference positives");
  rep.specificity = ratio(c.tn, c.tn + c.fp, "no reference negatives");
  rep.error_rate = ratio(c.fp + c.fn, c.n(), "empty series");
  rep.mcc = c.n() ? Metric::of(mcc(c)) : Metric::absent("empty series");
  rep.kappa = c.n() ? Metric::of(cohen_kappa(c)) : Metric::absent("empty series");
}

void fill_continuous(MetricsReport& rep, std::span<const double> p, std::span<const std::uint8_t> ref) {
  const auto pr = average_precision(p, ref);
  rep.ap = pr.ap;
  rep.ap50 = pr.ap50;
  rep.pearson_r = pearson(p, std::vector<double>(ref.begin(), ref.end()));
  rep.cross_entropy = cross_entropy(p, ref);
  rep.auc = auc(p, ref);
}

void check_input(const EvalInput& in) {
  require_same_length(in.probability.size(), in.ref.size(), ("evaluate " + in.id).c_str());
  require_same_length(in.pred.size(), in.ref.size(), ("evaluate " + in.id).c_str());
}

}  // namespace

MetricsReport evaluate(const EvalInput& in) {
  return evaluate_concatenated({in});
}

MetricsReport evaluate_concatenated(std::vector<EvalInput> inputs) {
  std::stable_sort(inputs.begin(), inputs.end(),
                   [](const EvalInput& a, const EvalInput& b) { return a.id < b.id; });
  MetricsReport rep;
  rep.id = inputs.size() == 1 ? inputs.front().id : "cc";
  std::vector<double> p;
  Mask pred, ref;
  std::vector<Mask> preds, refs;
  std::size_t false_events = 0;
  for (const auto& in : inputs) {
    check_input(in);
    p.insert(p.end(), in.probability.begin(), in.probability.end());
    pred.insert(pred.end(), in.pred.begin(), in.pred.end());
    ref.insert(ref.end(), in.ref.begin(), in.ref.end());
    preds.push_back(in.pred);
    refs.push_back(in.ref);
    false_events += false_detections(mask_to_events(in.pred), mask_to_events(in.ref));
  }
  rep.seconds = ref.size();
  rep.counts = confusion(pred, ref);
  fill_binary(rep);
  fill_continuous(rep, p, ref);
  rep.fd_per_hour = rep.seconds ? Metric::of(static_cast<double>(false_events) /
                                             (static_cast<double>(rep.seconds) / kHour))
                                : Metric::absent("empty series");
  rep.burden_r = seizure_burden_r(preds, refs);
  return rep;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {
      "recording", "seconds", "tp", "fp", "tn", "fn", "ap", "ap50", "pearson_r",
      "cross_entropy", "auc", "ppv", "npv", "sensitivity", "specificity", "error_rate",
      "mcc", "kappa", "fd_per_hour", "burden_r", "absent"};
  return cols;
}

std::string format_report_csv(const std::vector<MetricsReport>& reports) {
  std::string s;
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  s += "\n";
  for (const auto& r : reports) {
    std::string absent;
    auto cell = [&](const char* name, const Metric& m) {
      if (m.defined) return format_number(m.value);
      absent += (absent.empty() ? "" : "; ") + std::string(name) + ": " + m.reason;
      return std::string();
    };
    s += r.id + "," + std::to_string(r.seconds) + "," + std::to_string(r.counts.tp) + "," +
         std::to_string(r.counts.fp) + "," + std::to_string(r.counts.tn) + "," +
         std::to_string(r.counts.fn);
    const std::pair<const char*, const Metric*> ms[] = {
        {"ap", &r.ap},         {"ap50", &r.ap50},
        {"pearson_r", &r.pearson_r}, {"cross_entropy", &r.cross_entropy},
        {"auc", &r.auc},       {"ppv", &r.ppv},
        {"npv", &r.npv},       {"sensitivity", &r.sensitivity},
        {"specificity", &r.specificity}, {"error_rate", &r.error_rate},
        {"mcc", &r.mcc},       {"kappa", &r.kappa},
        {"fd_per_hour", &r.fd_per_hour}, {"burden_r", &r.burden_r}};
    for (const auto& [name, m] : ms) s += "," + cell(name, *m);
    s += "," + absent + "\n";
  }
  return s;
}

}  // namespace seiznet
