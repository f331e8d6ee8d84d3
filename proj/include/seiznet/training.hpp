#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seiznet/containers.hpp"
#include "seiznet/model.hpp"
#include "seiznet/rng.hpp"

namespace seiznet {

struct TrainConfig {
  double undersample_ratio = 5.0;   // non-seizure : seizure per epoch
  double weight_positive = 5.0;     // w1
  double weight_negative = 1.0;     // w0
  double peak_lr = 3e-4;
  double floor_lr = 3e-6;
  // Schedule phases in optimizer steps. All zero means 10/40/40/10 % of the run.
  std::size_t warmup_steps = 0;
  std::size_t hold_steps = 0;
  std::size_t cooldown_steps = 0;
  std::size_t floor_steps = 0;
  std::size_t batch_size = 64;
  std::size_t epochs = 30;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double clip_norm = 1.0;
  double p_flip = 0.5;
  double p_cutout = 0.5;
  double cutout_max_fraction = 0.125;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
  /// Phases filled in for a run of `total_steps` when none were given.
  TrainConfig resolved(std::size_t total_steps) const;
};

/// JSON object with any subset of the TrainConfig field names.
TrainConfig parse_train_config(std::string_view json_text);
std::string format_train_config(const TrainConfig& config);

struct ClassIndex {
  std::vector<std::size_t> seizure;
  std::vector<std::size_t> non_seizure;
};
ClassIndex class_index(const SegmentDataset& data);

struct EpochPlan {
  std::vector<std::size_t> seizure;
  std::vector<std::size_t> non_seizure;
};

/// Non-seizure draws per epoch: round(ratio * seizure count).
std::size_t non_seizure_per_epoch(std::size_t seizure_count, double ratio);

/// Walks epochs in order. Non-seizure items come from a stream of
/// permutations of the pool (one per cycle, seeded by (seed, cycle)), so each
/// item is used once per cycle. When an epoch straddles two cycles, items
/// already drawn in that epoch are moved behind the ones it still needs.
class EpochPlanner {
 public:
  EpochPlanner(ClassIndex classes, double ratio, std::uint64_t seed);
  EpochPlan next();
  std::size_t epoch() const { return epoch_; }

 private:
  void start_cycle(const std::vector<std::size_t>& avoid, std::size_t needed);

  ClassIndex classes_;
  std::size_t per_epoch_;
  std::uint64_t seed_;
  std::size_t epoch_ = 0;
  std::size_t cycle_ = 0;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

/// Plan of one epoch, replayed from epoch 0 so it depends only on (seed, epoch).
EpochPlan plan_epoch(const ClassIndex& classes, std::size_t epoch, std::uint64_t seed,
                     double ratio = 5.0);

/// Class-weighted negative log-likelihood with p clamped to [1e-7, 1 - 1e-7].
double weighted_loss(double p, double label, double weight_negative, double weight_positive);

/// Log-linear warmup floor->peak, hold at peak, log-linear cooldown back to
/// floor, then floor.
double lr_at(std::size_t step, const TrainConfig& config);

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t step = 0;
};
AdamState adam_state(const ModelParams& params);

struct AdamHyper {
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One decoupled-decay Adam update of a flat array. `step` counts from 1.
void adamw_update(std::span<double> w, std::span<const double> g, std::span<double> m,
                  std::span<double> v, std::size_t step, const AdamHyper& hyper);
/// Updates every parameter array; bias arrays get no weight decay.
void adamw_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& state,
                const AdamHyper& hyper);

/// Scales `grads` so their global L2 norm is at most `max_norm`; returns the
/// norm before clipping.
double clip_global_norm(std::vector<Tensor>& grads, double max_norm);

/// Polarity inversion.
void augment_flip(std::span<double> segment);
/// Zeroes one contiguous run of 1..floor(max_fraction * n) samples at a
/// random position. No-op when that bound is 0.
void augment_cutout(std::span<double> segment, double max_fraction, Rng& rng);

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;      // mean weighted loss over the epoch's samples
  double lr = 0.0;        // learning rate at the epoch's last step
  double train_auc = 0.0; // AUC of the epoch's training-time outputs
  bool auc_defined = false;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
  std::vector<double> step_losses;  // mean batch loss per optimizer step
  std::size_t steps = 0;
  bool diverged = false;
  std::string diagnostic;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains a freshly built model (init seed = config.seed) on the valid
/// segments of `data` for the full schedule.
TrainResult train(const SegmentDataset& data, const ModelConfig& model, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});
/// Continues from given initial parameters.
TrainResult train_from(const SegmentDataset& data, ModelParams init, const TrainConfig& config,
                       const EpochCallback& on_epoch = {});

std::string format_train_log(const std::vector<EpochLog>& log);

}  // namespace seiznet
