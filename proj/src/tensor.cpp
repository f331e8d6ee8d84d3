#include "seiznet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace seiznet {

Tensor::Tensor(std::size_t channels, std::size_t length, double fill)
    : channels_(channels), length_(length), values_(channels * length, fill) {}

Tensor::Tensor(std::size_t channels, std::size_t length, std::vector<double> values)
    : channels_(channels), length_(length), values_(std::move(values)) {
  if (values_.size() != channels * length) {
    throw std::invalid_argument("Tensor: " + std::to_string(values_.size()) +
                                " values for shape " + std::to_string(channels) + "x" +
                                std::to_string(length));
  }
}

double Tensor::item() const {
  if (values_.size() != 1) throw std::logic_error("Tensor::item on non-scalar tensor");
  return values_[0];
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace seiznet
