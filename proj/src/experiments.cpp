#include "seiznet/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "seiznet/rng.hpp"

namespace seiznet {

namespace {

constexpr std::uint64_t kSeizureOrderStream = 31;
constexpr std::uint64_t kBackgroundOrderStream = 32;
constexpr std::uint64_t kNeonateOrderStream = 33;
constexpr std::uint64_t kScalingTrainStream = 34;
constexpr std::uint64_t kMontageStream = 41;

std::vector<std::size_t> permuted(std::vector<std::size_t> v, std::uint64_t seed) {
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(v));
  return v;
}

}  // namespace

ScalingAxis parse_axis(std::string_view name) {
  if (name == "segments") return ScalingAxis::kSegments;
  if (name == "neonates") return ScalingAxis::kNeonates;
  if (name == "model") return ScalingAxis::kModel;
  throw std::invalid_argument("unknown scaling axis '" + std::string(name) + "' (segments, neonates or model)");
}

std::string axis_name(ScalingAxis axis) {
  switch (axis) {
    case ScalingAxis::kSegments: return "segments";
    case ScalingAxis::kNeonates: return "neonates";
    case ScalingAxis::kModel: return "model";
  }
  return "?";
}

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_power_law: x and y differ in length");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0 && y[i] > 0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  PowerLawFit f;
  f.points = lx.size();
  if (lx.size() < 2) {
    f.reason = "fewer than 2 positive points";
    return f;
  }
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0) {
    f.reason = "all x equal";
    return f;
  }
  f.defined = true;
  f.exponent = sxy / sxx;
  f.coefficient = std::exp(my - f.exponent * mx);
  return f;
}

const std::vector<std::string>& scaling_metrics() {
  static const std::vector<std::string> names = {"auc", "ap", "ap50", "mcc", "kappa", "sensitivity",
                                                 "specificity", "ppv", "pearson_r", "cross_entropy"};
  return names;
}

Metric metric_by_name(const MetricsReport& r, std::string_view name) {
  const std::pair<std::string_view, const Metric*> all[] = {
      {"ap", &r.ap},       {"ap50", &r.ap50},   {"pearson_r", &r.pearson_r}, {"cross_entropy", &r.cross_entropy},
      {"auc", &r.auc},     {"ppv", &r.ppv},     {"npv", &r.npv},             {"sensitivity", &r.sensitivity},
      {"specificity", &r.specificity},          {"error_rate", &r.error_rate}, {"mcc", &r.mcc},
      {"kappa", &r.kappa}, {"fd_per_hour", &r.fd_per_hour},                  {"burden_r", &r.burden_r}};
  for (const auto& [n, m] : all) {
    if (n == name) return *m;
  }
  throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

std::vector<std::vector<std::size_t>> nested_subsets(const SegmentDataset& data, ScalingAxis axis,
                                                     const std::vector<std::size_t>& grid, std::uint64_t seed,
                                                     std::size_t trial) {
  const ClassIndex classes = class_index(data);
  std::vector<std::vector<std::size_t>> out;
  if (axis == ScalingAxis::kModel) {
    std::vector<std::size_t> all = classes.seizure;
    all.insert(all.end(), classes.non_seizure.begin(), classes.non_seizure.end());
    std::sort(all.begin(), all.end());
    out.push_back(std::move(all));
    return out;
  }
  if (grid.empty()) throw std::invalid_argument("scaling grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end()) || std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
    throw std::invalid_argument("scaling grid must be strictly increasing");
  }
  if (axis == ScalingAxis::kSegments) {
    const auto s = permuted(classes.seizure, derive_seed(seed, {kSeizureOrderStream, trial}));
    const auto ns = permuted(classes.non_seizure, derive_seed(seed, {kBackgroundOrderStream, trial}));
    const std::size_t total = s.size() + ns.size();
    for (std::size_t g : grid) {
      if (g > total) {
        throw std::invalid_argument("grid point " + std::to_string(g) + " exceeds the " + std::to_string(total) +
                                    " valid training segments");
      }
      // Class proportions of the full set; both counts grow with g.
      const auto n_s = static_cast<std::size_t>(
          std::llround(static_cast<double>(g) * static_cast<double>(s.size()) / static_cast<double>(total)));
      std::vector<std::size_t> idx(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n_s));
      idx.insert(idx.end(), ns.begin(), ns.begin() + static_cast<std::ptrdiff_t>(g - n_s));
      std::sort(idx.begin(), idx.end());
      out.push_back(std::move(idx));
    }
    return out;
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < data.size(); ++i) ids.insert(data.info[i].recording);
  std::vector<std::string> order(ids.begin(), ids.end());
  {
    std::vector<std::size_t> pos(order.size());
    std::iota(pos.begin(), pos.end(), 0);
    pos = permuted(pos, derive_seed(seed, {kNeonateOrderStream, trial}));
    std::vector<std::string> shuffled;
    for (std::size_t p : pos) shuffled.push_back(order[p]);
    order = std::move(shuffled);
  }
  for (std::size_t g : grid) {
    if (g > order.size()) {
      throw std::invalid_argument("grid point " + std::to_string(g) + " exceeds the " +
                                  std::to_string(order.size()) + " neonates in the training set");
    }
    const std::set<std::string> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(g));
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.info[i].valid && chosen.count(data.info[i].recording)) idx.push_back(i);
    }
    out.push_back(std::move(idx));
  }
  return out;
}

SegmentDataset subset(const SegmentDataset& data, std::span<const std::size_t> indices) {
  SegmentDataset out;
  out.length = data.length;
  out.samples.reserve(indices.size() * data.length);
  for (std::size_t i : indices) {
    const auto seg = data.segment(i);
    out.samples.insert(out.samples.end(), seg.begin(), seg.end());
    out.info.push_back(data.info.at(i));
  }
  return out;
}

MetricsReport evaluate_segments(const ModelParams& params, const SegmentDataset& heldout) {
  EvalInput in;
  in.id = "heldout";
  std::vector<double> x(heldout.length);
  for (std::size_t i = 0; i < heldout.size(); ++i) {
    if (!heldout.info[i].valid) continue;
    const auto seg = heldout.segment(i);
    std::copy(seg.begin(), seg.end(), x.begin());
    const double p = forward(params, x);
    in.probability.push_back(p);
    in.pred.push_back(p >= kDefaultThreshold ? 1 : 0);
    in.ref.push_back(heldout.label(i) ? 1 : 0);
  }
  return evaluate(in);
}

std::uint64_t scaling_seed(std::uint64_t seed, std::size_t point, std::size_t trial) {
  return derive_seed(seed, {kScalingTrainStream, point, trial});
}

ScalingRunResult scaling_run(const SegmentDataset& train_set, const SegmentDataset& heldout,
                             const ScalingConfig& config, const ScalingProgress& progress) {
  if (config.trials == 0) throw std::invalid_argument("scaling_run: trials must be >= 1");
  const bool model_axis = config.axis == ScalingAxis::kModel;
  if (model_axis && config.models.empty()) throw std::invalid_argument("scaling_run: model axis needs a model grid");
  if (model_axis) {
    for (std::size_t i = 1; i < config.models.size(); ++i) {
      if (count_params(config.models[i]) <= count_params(config.models[i - 1])) {
        throw std::invalid_argument("scaling_run: model grid must grow strictly in parameter count");
      }
    }
  }
  const ModelConfig fixed_model = config.models.empty() ? variant("nano") : config.models.front();
  const std::size_t n_points = model_axis ? config.models.size() : config.grid.size();

  ScalingRunResult result;
  result.axis = config.axis;
  result.points.resize(n_points);
  for (std::size_t p = 0; p < n_points; ++p) {
    auto& pt = result.points[p];
    if (model_axis) {
      pt.x = static_cast<double>(count_params(config.models[p]));
      pt.label = config.models[p].variant_name == "custom"
                     ? "D" + std::to_string(config.models[p].depth) + "W" + std::to_string(config.models[p].width)
                     : config.models[p].variant_name;
    } else {
      pt.x = static_cast<double>(config.grid[p]);
      pt.label = std::to_string(config.grid[p]);
    }
  }
  for (std::size_t t = 0; t < config.trials; ++t) {
    const auto subsets = nested_subsets(train_set, config.axis, config.grid, config.seed, t);
    for (std::size_t p = 0; p < n_points; ++p) {
      const auto& idx = subsets[model_axis ? 0 : p];
      ScalingTrial trial;
      trial.seed = scaling_seed(config.seed, p, t);
      trial.train_size = idx.size();
      TrainConfig tc = config.train;
      tc.seed = trial.seed;
      const ModelConfig& model = model_axis ? config.models[p] : fixed_model;
      const TrainResult tr = train(subset(train_set, idx), model, tc);
      trial.diverged = tr.diverged;
      trial.diagnostic = tr.diagnostic;
      if (!tr.diverged) trial.metrics = evaluate_segments(tr.params, heldout);
      trial.metrics.id = result.points[p].label;
      result.points[p].trials.push_back(trial);
      if (progress) progress(result.points[p], result.points[p].trials.back());
    }
  }
  for (const auto& name : scaling_metrics()) {
    std::vector<double> xs, ys;
    for (const auto& pt : result.points) {
      double sum = 0;
      std::size_t n = 0;
      for (const auto& tr : pt.trials) {
        if (tr.diverged) continue;
        const Metric m = metric_by_name(tr.metrics, name);
        if (!m.defined) continue;
        sum += m.value;
        ++n;
      }
      if (n == 0) continue;
      xs.push_back(pt.x);
      ys.push_back(sum / static_cast<double>(n));
    }
    result.metrics.push_back(name);
    result.fits.push_back(fit_power_law(xs, ys));
  }
  return result;
}

// ---- montage stress ------------------------------------------------------

StressMetrics stressed_metrics(const std::vector<PredictionTrace>& traces, const std::vector<Mask>& refs,
                               std::span<const ZeroRun> runs, double threshold) {
  if (traces.size() != refs.size()) throw std::invalid_argument("montage: one reference mask per recording");
  std::vector<double> prob;
  Mask pred, ref;
  for (std::size_t r = 0; r < traces.size(); ++r) {
    const auto& t = traces[r];
    if (refs[r].size() != mask_length(t.duration)) {
      throw std::invalid_argument("montage: reference mask of '" + t.recording + "' has " +
                                  std::to_string(refs[r].size()) + " seconds, expected " +
                                  std::to_string(mask_length(t.duration)));
    }
    std::vector<std::vector<double>> smoothed;
    for (std::size_t c = 0; c < t.channels.size(); ++c) {
      std::vector<double> g = t.grid(c);
      for (const ZeroRun& z : runs) {
        if (z.recording != r || z.channel != c) continue;
        const std::size_t end = std::min(g.size(), z.start + z.length);
        for (std::size_t j = std::min(z.start, end); j < end; ++j) g[j] = 0.0;
      }
      smoothed.push_back(smooth(g));
    }
    const auto gmax = channel_max(smoothed);
    const auto p = per_second_mean(gmax, t.duration);
    const auto m = threshold_mask(gmax, t.duration, threshold);
    prob.insert(prob.end(), p.begin(), p.end());
    pred.insert(pred.end(), m.begin(), m.end());
    ref.insert(ref.end(), refs[r].begin(), refs[r].end());
  }
  StressMetrics s;
  s.auc = auc(prob, ref);
  s.mcc = ref.empty() ? Metric::absent("empty series") : Metric::of(mcc(confusion(pred, ref)));
  return s;
}

std::vector<ZeroRun> draw_zero_runs(const std::vector<PredictionTrace>& traces, double fraction,
                                    std::size_t affected, Rng& rng) {
  if (!(fraction >= 0 && fraction <= 1)) throw std::invalid_argument("montage: drop fraction outside [0, 1]");
  std::vector<ZeroRun> runs;
  for (std::size_t r = 0; r < traces.size(); ++r) {
    const std::size_t channels = traces[r].channels.size();
    if (affected >= channels) {
      throw std::invalid_argument("montage: " + std::to_string(affected) + " affected channels leaves none of the " +
                                  std::to_string(channels) + " in '" + traces[r].recording + "' intact");
    }
    std::vector<std::size_t> order(channels);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    const std::size_t g = traces[r].window_count() ? grid_length(traces[r].duration) : 0;
    const auto len = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(g)));
    for (std::size_t k = 0; k < affected; ++k) {
      const std::size_t start = rng.below(g - len + 1);
      runs.push_back({r, order[k], start, len});
    }
  }
  return runs;
}

Metric degradation_pct(const Metric& baseline, const Metric& stressed) {
  if (!baseline.defined) return Metric::absent("baseline undefined: " + baseline.reason);
  if (!stressed.defined) return Metric::absent("stressed value undefined: " + stressed.reason);
  if (baseline.value == 0) return Metric::absent("baseline is 0");
  return Metric::of(100.0 * (baseline.value - stressed.value) / baseline.value);
}

MontageCell montage_cell(const std::vector<PredictionTrace>& traces, const std::vector<Mask>& refs,
                         double fraction, std::size_t affected, const MontageConfig& config,
                         std::size_t fraction_index) {
  if (config.trials == 0) throw std::invalid_argument("montage: trials must be >= 1");
  const StressMetrics base = stressed_metrics(traces, refs, {}, config.threshold);
  MontageCell cell;
  cell.fraction = fraction;
  cell.affected = affected;
  cell.trials = config.trials;
  double auc_sum = 0, mcc_sum = 0;
  std::string auc_missing, mcc_missing;
  for (std::size_t t = 0; t < config.trials; ++t) {
    Rng rng(derive_seed(config.seed, {kMontageStream, fraction_index, affected, t}));
    const auto runs = draw_zero_runs(traces, fraction, affected, rng);
    const StressMetrics s = stressed_metrics(traces, refs, runs, config.threshold);
    const Metric da = degradation_pct(base.auc, s.auc), dm = degradation_pct(base.mcc, s.mcc);
    if (da.defined) auc_sum += da.value; else if (auc_missing.empty()) auc_missing = da.reason;
    if (dm.defined) mcc_sum += dm.value; else if (mcc_missing.empty()) mcc_missing = dm.reason;
  }
  const double n = static_cast<double>(config.trials);
  cell.auc_degradation = auc_missing.empty() ? Metric::of(auc_sum / n) : Metric::absent(auc_missing);
  cell.mcc_degradation = mcc_missing.empty() ? Metric::of(mcc_sum / n) : Metric::absent(mcc_missing);
  return cell;
}

MontageStressResult montage_stress(const std::vector<PredictionTrace>& traces, const std::vector<Mask>& refs,
                                   const MontageConfig& config) {
  if (traces.empty()) throw std::invalid_argument("montage: no recordings");
  MontageStressResult r;
  r.channels = traces.front().channels.size();
  for (const auto& t : traces) r.channels = std::min(r.channels, t.channels.size());
  if (r.channels < 2) throw std::invalid_argument("montage: needs at least 2 channels per recording");
  r.baseline = stressed_metrics(traces, refs, {}, config.threshold);
  for (std::size_t f = 0; f < config.fractions.size(); ++f) {
    for (std::size_t k = 1; k < r.channels; ++k) {
      r.cells.push_back(montage_cell(traces, refs, config.fractions[f], k, config, f));
    }
  }
  return r;
}

}  // namespace seiznet
