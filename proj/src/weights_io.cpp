#include "seiznet/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

namespace seiznet {

namespace {

constexpr char kMagic[8] = {'C', 'N', 'X', '1', 'D', 'W', 'T', 'S'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void le(T v) {
    std::uint64_t u;
    if constexpr (std::is_same_v<T, double>) {
      u = std::bit_cast<std::uint64_t>(v);
    } else {
      u = static_cast<std::uint64_t>(v);
    }
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  void need(std::size_t n, const char* what) {
    if (pos_ + n > b_.size()) {
      throw std::runtime_error(std::string("weights file truncated while reading ") + what);
    }
  }
  template <typename T>
  T le(const char* what) {
    need(sizeof(T), what);
    std::uint64_t u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= std::uint64_t(b_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(u);
    } else {
      return static_cast<T>(u);
    }
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::string shape_str(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint8_t> encode_weights(const ModelParams& params) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.le<std::uint32_t>(kWeightsFormatVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(params.config.depth));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(params.config.width));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(params.config.input_length));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(params.arrays.size()));
  for (const auto& a : params.arrays) {
    w.le<std::uint32_t>(static_cast<std::uint32_t>(a.spec.name.size()));
    w.bytes(a.spec.name.data(), a.spec.name.size());
    w.le<std::uint32_t>(static_cast<std::uint32_t>(a.spec.shape.size()));
    for (std::size_t d : a.spec.shape) w.le<std::uint64_t>(d);
    for (double v : a.value.values()) w.le<double>(v);
  }
  const std::uint64_t sum = fnv1a64(w.buffer());
  w.le<std::uint64_t>(sum);
  return std::move(w.buffer());
}

ModelParams decode_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) + 8 ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a weights file (bad magic)");
  }
  Reader r(bytes);
  r.str(sizeof(kMagic), "magic");
  const auto version = r.le<std::uint32_t>("format version");
  if (version != kWeightsFormatVersion) {
    throw std::runtime_error("unsupported weights format version " + std::to_string(version) +
                             " (expected " + std::to_string(kWeightsFormatVersion) + ")");
  }
  const std::span<const std::uint8_t> body = bytes.first(bytes.size() - 8);
  std::uint64_t stored = 0;
  for (std::size_t i = 0; i < 8; ++i) stored |= std::uint64_t(bytes[bytes.size() - 8 + i]) << (8 * i);
  if (fnv1a64(body) != stored) {
    throw std::runtime_error("weights file checksum mismatch (truncated or corrupted)");
  }
  Reader br(body);
  br.str(sizeof(kMagic), "magic");
  br.le<std::uint32_t>("format version");

  ModelConfig cfg;
  cfg.depth = static_cast<int>(br.le<std::uint32_t>("depth"));
  cfg.width = static_cast<int>(br.le<std::uint32_t>("width"));
  cfg.input_length = br.le<std::uint32_t>("input length");
  cfg = [&] {
    ModelConfig named = custom_config(cfg.depth, cfg.width);
    named.input_length = cfg.input_length;
    return named;
  }();
  const std::vector<ParamSpec> layout = param_layout(cfg);
  const auto count = br.le<std::uint32_t>("array count");
  if (count != layout.size()) {
    throw std::runtime_error("weights file has " + std::to_string(count) + " arrays, D=" +
                             std::to_string(cfg.depth) + " W=" + std::to_string(cfg.width) +
                             " requires " + std::to_string(layout.size()));
  }
  ModelParams params;
  params.config = cfg;
  for (const ParamSpec& spec : layout) {
    const auto name_len = br.le<std::uint32_t>("array name length");
    const std::string name = br.str(name_len, "array name");
    const auto rank = br.le<std::uint32_t>("array rank");
    std::vector<std::size_t> shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(br.le<std::uint64_t>("array shape"));
    if (name != spec.name || shape != spec.shape) {
      throw std::runtime_error("weights array '" + name + "' " + shape_str(shape) +
                               " does not match expected '" + spec.name + "' " +
                               shape_str(spec.shape));
    }
    const std::size_t n = spec.count();
    br.need(n * 8, "array values");
    std::vector<double> values(n);
    for (double& v : values) v = br.le<double>("array values");
    params.arrays.push_back({spec, Tensor(spec.rows(), spec.cols(), std::move(values))});
  }
  if (br.pos() != body.size()) {
    throw std::runtime_error("weights file has " + std::to_string(body.size() - br.pos()) +
                             " unexpected trailing bytes");
  }
  return params;
}

void save_weights(const ModelParams& params, const std::filesystem::path& path) {
  const auto bytes = encode_weights(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ModelParams load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weights file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

}  // namespace seiznet
