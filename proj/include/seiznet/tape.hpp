#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "seiznet/tensor.hpp"

namespace seiznet {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t index = 0;
  friend bool operator==(Var, Var) = default;
};

/// Records the forward computation of the ConvNeXt-1D layer set and replays
/// it in reverse to produce exact gradients.
///
/// A tape is single-use and single-writer. Parameter leaves reference storage
/// owned by the caller; after backward() their gradients are added into the
/// caller-supplied sinks, so several tapes (one per sample) can reduce into a
/// shared gradient buffer one after another.
class Tape {
 public:
  enum class Mode { kRecord, kInference };

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient (model input, labels).
  Var constant(Tensor value);
  /// Leaf with its own gradient slot, readable via grad().
  Var variable(Tensor value);
  /// Leaf referencing external storage. `value` must outlive the tape. If
  /// `grad_sink` is non-null, backward() adds this leaf's gradient into it.
  Var parameter(const Tensor& value, Tensor* grad_sink);

  const Tensor& value(Var v) const;
  /// Gradient of the last backward() root with respect to `v`. Zero-filled
  /// if `v` did not influence the root.
  const Tensor& grad(Var v);

  /// Strided valid convolution. kernel is [out, in * k]; bias is [out, 1].
  Var conv1d(Var input, Var kernel, Var bias, std::size_t kernel_size, std::size_t stride);
  /// Per-channel convolution with zero padding (k-1)/2 on each side; k odd.
  /// kernel is [channels, k]; bias is [channels, 1]. Output keeps the input shape.
  Var depthwise_conv1d(Var input, Var kernel, Var bias);
  /// Normalizes across channels at each time position. gain/shift are
  /// [channels, 1] when present.
  Var layer_norm(Var input, std::optional<Var> gain, std::optional<Var> shift,
                 double epsilon = 1e-8);
  /// Exact x * Phi(x).
  Var gelu(Var input);
  /// Mean over the time axis, giving [channels, 1].
  Var avg_pool_full(Var input);
  /// Affine map of a [channels, 1] feature vector to a 1x1 logit.
  /// weights is [1, channels]; bias is 1x1.
  Var linear(Var features, Var weights, Var bias);
  Var sigmoid(Var input);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  /// Sum of every element, giving 1x1.
  Var sum(Var input);
  /// Class-weighted negative log-likelihood of a 1x1 logit, with the
  /// probability clamped to [1e-7, 1 - 1e-7] in the loss value.
  Var weighted_bce(Var logit, double label, double weight_negative, double weight_positive);

  /// Reverse pass from a 1x1 root seeded with d(root)/d(root) = 1.
  void backward(Var root);

  /// Multiply-accumulates performed by conv/linear ops so far. Depthwise
  /// taps that land in the zero padding are counted.
  std::uint64_t mac_count() const { return macs_; }
  std::size_t size() const { return nodes_.size(); }
  std::string_view op_name(Var v) const { return nodes_.at(v.index).op; }
  /// Node indices whose adjoint was run by the last backward(), in visit order.
  const std::vector<std::size_t>& backward_order() const { return visited_; }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    Tensor* grad_sink = nullptr;
    bool requires_grad = false;
    std::string_view op;
    std::function<void()> adjoint;
  };

  Var push(Tensor value, std::string_view op, bool requires_grad);
  const Tensor& val(std::size_t i) const {
    const Node& n = nodes_[i];
    return n.external ? *n.external : n.value;
  }
  bool needs(std::size_t i) const { return mode_ == Mode::kRecord && nodes_[i].requires_grad; }
  Tensor& grad_slot(std::size_t i);

  Mode mode_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> visited_;
  std::uint64_t macs_ = 0;
};

}  // namespace seiznet
