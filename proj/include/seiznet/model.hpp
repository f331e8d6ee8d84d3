#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seiznet/tape.hpp"
#include "seiznet/tensor.hpp"

namespace seiznet {

/// Depth/width description of one ConvNeXt-1D network.
struct ModelConfig {
  int depth = 1;
  int width = 1;
  std::size_t input_length = 1024;
  std::string variant_name = "custom";

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Nano(1,1), Small(2,2), Medium(3,4), Large(3,8), XL(6,10).
const std::array<ModelConfig, 5>& named_variants();
/// Case-insensitive lookup of a named variant; throws on unknown names.
ModelConfig variant(std::string_view name);
ModelConfig custom_config(int depth, int width);

inline constexpr int kNumStages = 4;
inline constexpr std::size_t kStemKernel = 4;
inline constexpr std::size_t kDownsampleKernel = 2;
inline constexpr std::size_t kBlockKernel = 7;
inline constexpr std::size_t kExpansion = 4;

/// Channel count of stage s (0-based): 6W * 2^s.
std::size_t stage_channels(const ModelConfig& config, int stage);
/// Block count of stage s: D, D, 3D, D.
int stage_depth(const ModelConfig& config, int stage);
/// Temporal length inside stage s.
std::size_t stage_length(const ModelConfig& config, int stage);

enum class ParamKind { kWeight, kBias };

struct ParamSpec {
  std::string name;
  std::vector<std::size_t> shape;  // logical shape, e.g. {out, in, k}
  ParamKind kind = ParamKind::kWeight;

  std::size_t count() const;
  /// Storage layout: first dimension by the product of the rest.
  std::size_t rows() const { return shape.empty() ? 1 : shape.front(); }
  std::size_t cols() const { return count() / rows(); }
};

struct ParamArray {
  ParamSpec spec;
  Tensor value;
};

/// Learned weights in network order. Immutable once built or loaded; any
/// number of threads may call forward() on the same instance.
struct ModelParams {
  ModelConfig config;
  std::vector<ParamArray> arrays;

  std::size_t scalar_count() const;
  const ParamArray* find(std::string_view name) const;
  ParamArray* find(std::string_view name);
};

/// Ordered names and shapes of every weight array of `config`.
std::vector<ParamSpec> param_layout(const ModelConfig& config);

/// Validates the config (D, W >= 1; input length a positive multiple of 32).
void validate(const ModelConfig& config);

/// Truncated-normal (std 0.02, cut at 2 std) conv/linear weights, zero biases.
ModelParams build(const ModelConfig& config, std::uint64_t seed);

/// Closed-form scalar parameter count.
std::uint64_t count_params(const ModelConfig& config);
/// Closed-form multiply-accumulate count of one forward pass over conv and
/// linear layers (norm and activation costs excluded).
std::uint64_t count_flops(const ModelConfig& config);

/// Gradient buffers shaped like params.arrays, zero-filled.
std::vector<Tensor> zero_gradients(const ModelParams& params);

/// Records the network on `tape` and returns the 1x1 logit. When `grads` is
/// non-null, backward() on the tape adds parameter gradients into it.
Var forward_logit(Tape& tape, const ModelParams& params, Var segment,
                  std::vector<Tensor>* grads = nullptr);

/// Seizure probability of one single-channel segment of config.input_length
/// samples. Rejects any other length.
double forward(const ModelParams& params, std::span<const double> segment);

}  // namespace seiznet
