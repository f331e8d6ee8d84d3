#pragma once

// Central finite-difference oracle for tape gradients. Lives in test code
// only; it evaluates the loss through an inference-mode tape and never
// touches the adjoint code it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "seiznet/rng.hpp"
#include "seiznet/tape.hpp"

namespace seiznet::testing {

struct GradCheckResult {
  double worst_relative = 0.0;   // over coordinates with |grad| >= floor
  double worst_absolute = 0.0;   // over coordinates with |grad| < floor
  std::size_t checked = 0;

  bool passes(double rel_tol = 1e-3, double abs_tol = 1e-6) const {
    return worst_relative < rel_tol && worst_absolute < abs_tol;
  }
};

using LossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

inline void accumulate(GradCheckResult& r, double analytic, double numeric, double floor) {
  const double mag = std::max(std::abs(analytic), std::abs(numeric));
  const double diff = std::abs(analytic - numeric);
  if (mag >= floor) {
    r.worst_relative = std::max(r.worst_relative, diff / mag);
  } else {
    r.worst_absolute = std::max(r.worst_absolute, diff);
  }
  ++r.checked;
}

/// Compares d(loss)/d(leaf) for every element of every leaf.
inline GradCheckResult check_gradients(std::vector<Tensor> leaves, const LossBuilder& loss,
                                       double step = 1e-4, double floor = 1e-6) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : leaves) vars.push_back(tape.variable(t));
    Var root = loss(tape, vars);
    tape.backward(root);
    for (Var v : vars) analytic.push_back(tape.grad(v));
  }
  auto eval = [&]() {
    Tape tape(Tape::Mode::kInference);
    std::vector<Var> vars;
    for (const auto& t : leaves) vars.push_back(tape.constant(t));
    return tape.value(loss(tape, vars)).item();
  };
  GradCheckResult r;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    for (std::size_t i = 0; i < leaves[l].size(); ++i) {
      double& x = leaves[l].values()[i];
      const double orig = x;
      x = orig + step;
      const double up = eval();
      x = orig - step;
      const double down = eval();
      x = orig;
      accumulate(r, analytic[l].values()[i], (up - down) / (2 * step), floor);
    }
  }
  return r;
}

inline Tensor random_tensor(Rng& rng, std::size_t channels, std::size_t length, double scale = 1.0) {
  Tensor t(channels, length);
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

}  // namespace seiznet::testing
