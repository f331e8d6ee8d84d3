#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace seiznet {

/// Dense channels x length array of doubles, stored row-major by channel.
/// Parameter arrays with more than two logical dimensions are flattened into
/// the length axis (a conv kernel [out, in, k] is a Tensor(out, in * k)).
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t channels, std::size_t length, double fill = 0.0);
  Tensor(std::size_t channels, std::size_t length, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor(1, 1, v); }

  std::size_t channels() const { return channels_; }
  std::size_t length() const { return length_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t c, std::size_t t) { return values_[c * length_ + t]; }
  double operator()(std::size_t c, std::size_t t) const { return values_[c * length_ + t]; }

  std::span<double> row(std::size_t c) { return {values_.data() + c * length_, length_}; }
  std::span<const double> row(std::size_t c) const {
    return {values_.data() + c * length_, length_};
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  /// Value of a 1x1 tensor.
  double item() const;

  void fill(double v);
  bool same_shape(const Tensor& other) const {
    return channels_ == other.channels_ && length_ == other.length_;
  }
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  std::vector<double> values_;
};

}  // namespace seiznet
