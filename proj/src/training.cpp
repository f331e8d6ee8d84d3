#include "seiznet/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "seiznet/metrics.hpp"

namespace seiznet {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kPlanStream = 1;
constexpr std::uint64_t kOrderStream = 2;
constexpr std::uint64_t kAugmentStream = 3;

}  // namespace

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
  if (!(undersample_ratio >= 1.0)) bad("undersample_ratio must be >= 1");
  if (!(weight_positive > 0) || !(weight_negative > 0)) bad("class weights must be positive");
  if (!(peak_lr > 0) || !(floor_lr > 0) || floor_lr > peak_lr) bad("need 0 < floor_lr <= peak_lr");
  if (batch_size == 0) bad("batch_size must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) bad("betas must lie in [0, 1)");
  if (!(adam_epsilon > 0)) bad("adam_epsilon must be positive");
  if (!(weight_decay >= 0)) bad("weight_decay must be >= 0");
  if (!(clip_norm > 0)) bad("clip_norm must be positive");
  for (double p : {p_flip, p_cutout}) {
    if (!(p >= 0 && p <= 1)) bad("augmentation probabilities must lie in [0, 1]");
  }
  if (!(cutout_max_fraction >= 0 && cutout_max_fraction <= 1)) bad("cutout_max_fraction must lie in [0, 1]");
}

TrainConfig TrainConfig::resolved(std::size_t total_steps) const {
  TrainConfig c = *this;
  if (warmup_steps + hold_steps + cooldown_steps + floor_steps == 0) {
    c.warmup_steps = total_steps / 10;
    c.hold_steps = total_steps * 4 / 10;
    c.cooldown_steps = total_steps * 4 / 10;
    c.floor_steps = total_steps - c.warmup_steps - c.hold_steps - c.cooldown_steps;
  }
  return c;
}

#define SEIZNET_CONFIG_FIELDS(X)                                                        \
  X(undersample_ratio) X(weight_positive) X(weight_negative) X(peak_lr) X(floor_lr)     \
  X(warmup_steps) X(hold_steps) X(cooldown_steps) X(floor_steps) X(batch_size) X(epochs) \
  X(weight_decay) X(beta1) X(beta2) X(adam_epsilon) X(clip_norm) X(p_flip) X(p_cutout) \
  X(cutout_max_fraction) X(seed)

TrainConfig parse_train_config(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("train config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("train config: expected a JSON object");
  TrainConfig c;
  std::set<std::string> known;
#define READ_FIELD(name)                                                       \
  known.insert(#name);                                                         \
  if (j.contains(#name)) {                                                     \
    try {                                                                      \
      j.at(#name).get_to(c.name);                                              \
    } catch (const nlohmann::json::exception& e) {                            \
      throw std::invalid_argument("train config field " #name ": " + std::string(e.what())); \
    }                                                                          \
  }
  SEIZNET_CONFIG_FIELDS(READ_FIELD)
#undef READ_FIELD
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("train config: unknown field '" + key + "'");
  }
  c.validate();
  return c;
}

std::string format_train_config(const TrainConfig& c) {
  nlohmann::ordered_json j;
#define WRITE_FIELD(name) j[#name] = c.name;
  SEIZNET_CONFIG_FIELDS(WRITE_FIELD)
#undef WRITE_FIELD
  return j.dump(2) + "\n";
}

ClassIndex class_index(const SegmentDataset& data) {
  ClassIndex ci;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data.info[i].valid) continue;
    (data.label(i) ? ci.seizure : ci.non_seizure).push_back(i);
  }
  return ci;
}

std::size_t non_seizure_per_epoch(std::size_t seizure_count, double ratio) {
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(seizure_count)));
}

EpochPlanner::EpochPlanner(ClassIndex classes, double ratio, std::uint64_t seed)
    : classes_(std::move(classes)), seed_(seed) {
  if (classes_.seizure.empty()) throw std::invalid_argument("epoch plan: no seizure segments");
  if (!(ratio >= 1.0)) throw std::invalid_argument("epoch plan: ratio must be >= 1");
  per_epoch_ = non_seizure_per_epoch(classes_.seizure.size(), ratio);
  if (classes_.non_seizure.size() < per_epoch_) {
    throw std::invalid_argument("epoch plan: " + std::to_string(classes_.non_seizure.size()) +
                                " non-seizure segments cannot supply " + std::to_string(per_epoch_) +
                                " per epoch");
  }
  start_cycle({}, 0);
}

void EpochPlanner::start_cycle(const std::vector<std::size_t>& avoid, std::size_t needed) {
  order_ = classes_.non_seizure;
  Rng rng(derive_seed(seed_, {kPlanStream, cycle_}));
  rng.shuffle(std::span<std::size_t>(order_));
  ++cycle_;
  cursor_ = 0;
  if (avoid.empty() || needed == 0) return;
  // Items already drawn this epoch go behind the `needed` items it still takes.
  const std::set<std::size_t> seen(avoid.begin(), avoid.end());
  std::vector<std::size_t> front, back;
  for (std::size_t v : order_) {
    if (front.size() < needed && !seen.count(v)) {
      front.push_back(v);
    } else {
      back.push_back(v);
    }
  }
  front.insert(front.end(), back.begin(), back.end());
  order_ = std::move(front);
}

EpochPlan EpochPlanner::next() {
  EpochPlan plan;
  plan.seizure = classes_.seizure;
  plan.non_seizure.reserve(per_epoch_);
  while (plan.non_seizure.size() < per_epoch_) {
    if (cursor_ == order_.size()) start_cycle(plan.non_seizure, per_epoch_ - plan.non_seizure.size());
    plan.non_seizure.push_back(order_[cursor_++]);
  }
  ++epoch_;
  return plan;
}

EpochPlan plan_epoch(const ClassIndex& classes, std::size_t epoch, std::uint64_t seed, double ratio) {
  EpochPlanner planner(classes, ratio, seed);
  for (std::size_t e = 0; e < epoch; ++e) planner.next();
  return planner.next();
}

double weighted_loss(double p, double label, double weight_negative, double weight_positive) {
  const double q = std::clamp(p, 1e-7, 1.0 - 1e-7);
  return -(weight_positive * label * std::log(q) + weight_negative * (1.0 - label) * std::log(1.0 - q));
}

double lr_at(std::size_t step, const TrainConfig& c) {
  const double ratio = c.peak_lr / c.floor_lr;
  if (step < c.warmup_steps) {
    const double f = static_cast<double>(step) / static_cast<double>(c.warmup_steps);
    return c.floor_lr * std::pow(ratio, f);
  }
  step -= c.warmup_steps;
  if (step < c.hold_steps) return c.peak_lr;
  step -= c.hold_steps;
  if (step < c.cooldown_steps) {
    const double f = static_cast<double>(step) / static_cast<double>(c.cooldown_steps);
    return c.peak_lr * std::pow(ratio, -f);
  }
  return c.floor_lr;
}

AdamState adam_state(const ModelParams& params) {
  AdamState s;
  s.m = zero_gradients(params);
  s.v = zero_gradients(params);
  return s;
}

void adamw_update(std::span<double> w, std::span<const double> g, std::span<double> m,
                  std::span<double> v, std::size_t step, const AdamHyper& h) {
  if (g.size() != w.size() || m.size() != w.size() || v.size() != w.size()) {
    throw std::invalid_argument("adamw: parameter, gradient and state sizes differ");
  }
  if (step == 0) throw std::invalid_argument("adamw: step counter starts at 1");
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] -= h.lr * h.weight_decay * w[i];
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    w[i] -= h.lr * mhat / (std::sqrt(vhat) + h.epsilon);
  }
}

void adamw_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& state,
                const AdamHyper& hyper) {
  if (grads.size() != params.arrays.size() || state.m.size() != params.arrays.size()) {
    throw std::invalid_argument("adamw: gradient list does not match parameter arrays");
  }
  ++state.step;
  for (std::size_t a = 0; a < params.arrays.size(); ++a) {
    auto& arr = params.arrays[a];
    if (!grads[a].same_shape(arr.value)) {
      throw std::invalid_argument("adamw: gradient shape mismatch for " + arr.spec.name);
    }
    AdamHyper h = hyper;
    if (arr.spec.kind == ParamKind::kBias) h.weight_decay = 0.0;
    adamw_update(arr.value.values(), grads[a].values(), state.m[a].values(), state.v[a].values(),
                 state.step, h);
  }
}

double clip_global_norm(std::vector<Tensor>& grads, double max_norm) {
  double ss = 0.0;
  for (const auto& g : grads) {
    for (double v : g.values()) ss += v * v;
  }
  const double norm = std::sqrt(ss);
  if (norm > max_norm && norm > 0) {
    const double scale = max_norm / norm;
    for (auto& g : grads) {
      for (double& v : g.values()) v *= scale;
    }
  }
  return norm;
}

void augment_flip(std::span<double> segment) {
  for (double& v : segment) v = -v;
}

void augment_cutout(std::span<double> segment, double max_fraction, Rng& rng) {
  const auto max_len = static_cast<std::size_t>(std::floor(max_fraction * static_cast<double>(segment.size())));
  if (max_len == 0) return;
  const std::size_t len = 1 + rng.below(max_len);
  const std::size_t start = rng.below(segment.size() - len + 1);
  std::fill(segment.begin() + static_cast<std::ptrdiff_t>(start),
            segment.begin() + static_cast<std::ptrdiff_t>(start + len), 0.0);
}

namespace {

bool params_finite(const ModelParams& p) {
  return std::all_of(p.arrays.begin(), p.arrays.end(), [](const ParamArray& a) { return a.value.all_finite(); });
}

}  // namespace

TrainResult train(const SegmentDataset& data, const ModelConfig& model, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  return train_from(data, build(model, config.seed), config, on_epoch);
}

TrainResult train_from(const SegmentDataset& data, ModelParams init, const TrainConfig& config,
                       const EpochCallback& on_epoch) {
  config.validate();
  if (data.length != init.config.input_length) {
    throw std::invalid_argument("train: segments have " + std::to_string(data.length) +
                                " samples, model expects " + std::to_string(init.config.input_length));
  }
  const ClassIndex classes = class_index(data);
  const std::size_t per_epoch =
      classes.seizure.size() + non_seizure_per_epoch(classes.seizure.size(), config.undersample_ratio);
  EpochPlanner planner(classes, config.undersample_ratio, config.seed);
  const std::size_t steps_per_epoch = (per_epoch + config.batch_size - 1) / config.batch_size;
  const TrainConfig cfg = config.resolved(steps_per_epoch * config.epochs);
  const AdamHyper base{cfg.peak_lr, cfg.weight_decay, cfg.beta1, cfg.beta2, cfg.adam_epsilon};

  TrainResult result;
  result.params = std::move(init);
  ModelParams checkpoint = result.params;
  AdamState state = adam_state(result.params);
  std::vector<Tensor> grads = zero_gradients(result.params);
  std::vector<double> segment(data.length);

  for (std::size_t epoch = 0; epoch < cfg.epochs && !result.diverged; ++epoch) {
    const EpochPlan plan = planner.next();
    std::vector<std::size_t> items = plan.seizure;
    items.insert(items.end(), plan.non_seizure.begin(), plan.non_seizure.end());
    Rng order_rng(derive_seed(cfg.seed, {kOrderStream, epoch}));
    order_rng.shuffle(std::span<std::size_t>(items));

    std::vector<double> outputs;
    Mask labels;
    outputs.reserve(items.size());
    labels.reserve(items.size());
    double loss_sum = 0.0;
    double lr = cfg.floor_lr;
    for (std::size_t b0 = 0; b0 < items.size() && !result.diverged; b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(items.size(), b0 + cfg.batch_size);
      for (auto& g : grads) g.fill(0.0);
      double batch_loss = 0.0;
      for (std::size_t k = b0; k < b1; ++k) {
        const std::size_t idx = items[k];
        const auto src = data.segment(idx);
        std::copy(src.begin(), src.end(), segment.begin());
        Rng aug(derive_seed(cfg.seed, {kAugmentStream, epoch, k}));
        if (aug.bernoulli(cfg.p_flip)) augment_flip(segment);
        if (aug.bernoulli(cfg.p_cutout)) augment_cutout(segment, cfg.cutout_max_fraction, aug);
        const double y = data.label(idx) ? 1.0 : 0.0;

        Tape tape;
        Var in = tape.constant(Tensor(1, data.length, segment));
        Var logit = forward_logit(tape, result.params, in, &grads);
        Var loss = tape.weighted_bce(logit, y, cfg.weight_negative, cfg.weight_positive);
        const double lv = tape.value(loss).item();
        const double z = tape.value(logit).item();
        if (!std::isfinite(lv) || !std::isfinite(z)) {
          result.diverged = true;
          result.diagnostic = "non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(result.steps);
          break;
        }
        tape.backward(loss);
        batch_loss += lv;
        outputs.push_back(1.0 / (1.0 + std::exp(-z)));
        labels.push_back(y > 0.5 ? 1 : 0);
      }
      if (result.diverged) break;
      const double n = static_cast<double>(b1 - b0);
      for (auto& g : grads) {
        for (double& v : g.values()) v /= n;
      }
      clip_global_norm(grads, cfg.clip_norm);
      lr = lr_at(result.steps, cfg);
      AdamHyper h = base;
      h.lr = lr;
      adamw_step(result.params, grads, state, h);
      ++result.steps;
      result.step_losses.push_back(batch_loss / n);
      loss_sum += batch_loss;
      if (!params_finite(result.params)) {
        result.diverged = true;
        result.diagnostic = "non-finite parameters after step " + std::to_string(result.steps);
      }
    }
    if (result.diverged) break;
    checkpoint = result.params;
    EpochLog log;
    log.epoch = epoch;
    log.loss = loss_sum / static_cast<double>(items.size());
    log.lr = lr;
    const Metric a = auc(outputs, labels);
    log.auc_defined = a.defined;
    log.train_auc = a.value;
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  if (result.diverged) result.params = std::move(checkpoint);
  return result;
}

std::string format_train_log(const std::vector<EpochLog>& log) {
  std::ostringstream os;
  os << "epoch,loss,lr,train_auc\n";
  for (const auto& e : log) {
    os << e.epoch << "," << format_number(e.loss) << "," << format_number(e.lr) << ","
       << (e.auc_defined ? format_number(e.train_auc) : std::string()) << "\n";
  }
  return os.str();
}

}  // namespace seiznet
