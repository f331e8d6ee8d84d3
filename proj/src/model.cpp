#include "seiznet/model.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "seiznet/rng.hpp"

namespace seiznet {

namespace {

constexpr std::size_t kStemChannels = 6;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

const std::array<ModelConfig, 5>& named_variants() {
  static const std::array<ModelConfig, 5> variants = {
      ModelConfig{1, 1, 1024, "nano"},   ModelConfig{2, 2, 1024, "small"},
      ModelConfig{3, 4, 1024, "medium"}, ModelConfig{3, 8, 1024, "large"},
      ModelConfig{6, 10, 1024, "xl"},
  };
  return variants;
}

ModelConfig variant(std::string_view name) {
  const std::string key = lower(name);
  for (const auto& v : named_variants()) {
    if (v.variant_name == key) return v;
  }
  if (key == "extra-large" || key == "extra_large") return named_variants()[4];
  throw std::invalid_argument("unknown model variant '" + std::string(name) + "'");
}

ModelConfig custom_config(int depth, int width) {
  ModelConfig c{depth, width, 1024, "custom"};
  for (const auto& v : named_variants()) {
    if (v.depth == depth && v.width == width) c.variant_name = v.variant_name;
  }
  validate(c);
  return c;
}

void validate(const ModelConfig& config) {
  if (config.depth < 1 || config.width < 1) {
    throw std::invalid_argument("model depth and width must be positive (got D=" +
                                std::to_string(config.depth) +
                                ", W=" + std::to_string(config.width) + ")");
  }
  if (config.input_length == 0 || config.input_length % 32 != 0) {
    throw std::invalid_argument("model input length must be a positive multiple of 32, got " +
                                std::to_string(config.input_length));
  }
}

std::size_t stage_channels(const ModelConfig& config, int stage) {
  return kStemChannels * static_cast<std::size_t>(config.width) << stage;
}

int stage_depth(const ModelConfig& config, int stage) {
  return stage == 2 ? 3 * config.depth : config.depth;
}

std::size_t stage_length(const ModelConfig& config, int stage) {
  return (config.input_length / kStemKernel) >> stage;
}

std::size_t ParamSpec::count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& a : arrays) n += a.value.size();
  return n;
}

const ParamArray* ModelParams::find(std::string_view name) const {
  for (const auto& a : arrays) {
    if (a.spec.name == name) return &a;
  }
  return nullptr;
}

ParamArray* ModelParams::find(std::string_view name) {
  for (auto& a : arrays) {
    if (a.spec.name == name) return &a;
  }
  return nullptr;
}

std::vector<ParamSpec> param_layout(const ModelConfig& config) {
  validate(config);
  std::vector<ParamSpec> out;
  auto conv = [&out](const std::string& prefix, std::size_t out_ch, std::size_t in_ch,
                     std::size_t k) {
    out.push_back({prefix + ".weight", {out_ch, in_ch, k}, ParamKind::kWeight});
    out.push_back({prefix + ".bias", {out_ch}, ParamKind::kBias});
  };
  conv("stem", stage_channels(config, 0), 1, kStemKernel);
  for (int s = 0; s < kNumStages; ++s) {
    const std::size_t c = stage_channels(config, s);
    if (s > 0) conv("downsample." + std::to_string(s), c, c / 2, kDownsampleKernel);
    for (int b = 0; b < stage_depth(config, s); ++b) {
      const std::string p = "stages." + std::to_string(s) + "." + std::to_string(b);
      out.push_back({p + ".dwconv.weight", {c, kBlockKernel}, ParamKind::kWeight});
      out.push_back({p + ".dwconv.bias", {c}, ParamKind::kBias});
      conv(p + ".pwconv1", kExpansion * c, c, 1);
      conv(p + ".pwconv2", c, kExpansion * c, 1);
    }
  }
  const std::size_t final_ch = stage_channels(config, kNumStages - 1);
  out.push_back({"head.weight", {1, final_ch}, ParamKind::kWeight});
  out.push_back({"head.bias", {1}, ParamKind::kBias});
  return out;
}

ModelParams build(const ModelConfig& config, std::uint64_t seed) {
  ModelParams params;
  params.config = config;
  Rng rng(derive_seed(seed, {0x6d6f64656cULL}));
  for (auto& spec : param_layout(config)) {
    Tensor t(spec.rows(), spec.cols(), 0.0);
    if (spec.kind == ParamKind::kWeight) {
      for (double& v : t.values()) {
        double z;
        do {
          z = rng.normal();
        } while (std::abs(z) > 2.0);
        v = 0.02 * z;
      }
    }
    params.arrays.push_back({std::move(spec), std::move(t)});
  }
  return params;
}

std::uint64_t count_params(const ModelConfig& config) {
  validate(config);
  std::uint64_t n = 0;
  const std::uint64_t c0 = stage_channels(config, 0);
  n += c0 * kStemKernel + c0;
  for (int s = 0; s < kNumStages; ++s) {
    const std::uint64_t c = stage_channels(config, s);
    if (s > 0) n += c * (c / 2) * kDownsampleKernel + c;
    const std::uint64_t block = (c * kBlockKernel + c)                 // depthwise
                                + (kExpansion * c * c + kExpansion * c)  // expand
                                + (kExpansion * c * c + c);              // project
    n += block * static_cast<std::uint64_t>(stage_depth(config, s));
  }
  const std::uint64_t final_ch = stage_channels(config, kNumStages - 1);
  n += final_ch + 1;
  return n;
}

std::uint64_t count_flops(const ModelConfig& config) {
  validate(config);
  std::uint64_t n = 0;
  n += stage_channels(config, 0) * kStemKernel * stage_length(config, 0);
  for (int s = 0; s < kNumStages; ++s) {
    const std::uint64_t c = stage_channels(config, s);
    const std::uint64_t len = stage_length(config, s);
    if (s > 0) n += c * (c / 2) * kDownsampleKernel * len;
    const std::uint64_t block = c * kBlockKernel * len + 2 * kExpansion * c * c * len;
    n += block * static_cast<std::uint64_t>(stage_depth(config, s));
  }
  n += stage_channels(config, kNumStages - 1);
  return n;
}

std::vector<Tensor> zero_gradients(const ModelParams& params) {
  std::vector<Tensor> g;
  g.reserve(params.arrays.size());
  for (const auto& a : params.arrays) g.emplace_back(a.value.channels(), a.value.length(), 0.0);
  return g;
}

Var forward_logit(Tape& tape, const ModelParams& params, Var segment, std::vector<Tensor>* grads) {
  const ModelConfig& cfg = params.config;
  const Tensor& in = tape.value(segment);
  if (in.channels() != 1 || in.length() != cfg.input_length) {
    throw std::invalid_argument("model input must be 1x" + std::to_string(cfg.input_length) +
                                ", got " + std::to_string(in.channels()) + "x" +
                                std::to_string(in.length()));
  }
  if (grads && grads->size() != params.arrays.size()) {
    throw std::invalid_argument("gradient buffer count does not match parameter arrays");
  }
  std::size_t cursor = 0;
  auto next = [&]() {
    if (cursor >= params.arrays.size()) throw std::logic_error("parameter list exhausted");
    const std::size_t i = cursor++;
    return tape.parameter(params.arrays[i].value, grads ? &(*grads)[i] : nullptr);
  };

  Var w = next();
  Var b = next();
  Var x = tape.conv1d(segment, w, b, kStemKernel, kStemKernel);
  for (int s = 0; s < kNumStages; ++s) {
    if (s > 0) {
      x = tape.layer_norm(x, std::nullopt, std::nullopt);
      w = next();
      b = next();
      x = tape.conv1d(x, w, b, kDownsampleKernel, kDownsampleKernel);
    }
    for (int blk = 0; blk < stage_depth(cfg, s); ++blk) {
      Var dw_w = next();
      Var dw_b = next();
      Var h = tape.depthwise_conv1d(x, dw_w, dw_b);
      h = tape.layer_norm(h, std::nullopt, std::nullopt);
      Var e_w = next();
      Var e_b = next();
      h = tape.conv1d(h, e_w, e_b, 1, 1);
      h = tape.gelu(h);
      Var p_w = next();
      Var p_b = next();
      h = tape.conv1d(h, p_w, p_b, 1, 1);
      x = tape.add(x, h);
    }
  }
  x = tape.layer_norm(x, std::nullopt, std::nullopt);
  x = tape.avg_pool_full(x);
  w = next();
  b = next();
  return tape.linear(x, w, b);
}

double forward(const ModelParams& params, std::span<const double> segment) {
  if (segment.size() != params.config.input_length) {
    throw std::invalid_argument("segment has " + std::to_string(segment.size()) +
                                " samples, model expects " +
                                std::to_string(params.config.input_length));
  }
  Tape tape(Tape::Mode::kInference);
  Var in = tape.constant(Tensor(1, segment.size(), std::vector<double>(segment.begin(), segment.end())));
  Var logit = forward_logit(tape, params, in);
  return tape.value(tape.sigmoid(logit)).item();
}

}  // namespace seiznet
