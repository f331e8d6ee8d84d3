#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "seiznet/rng.hpp"
#include "seiznet/tape.hpp"
#include "support/gradcheck.hpp"

namespace seiznet {
namespace {

using testing::check_gradients;
using testing::random_tensor;

// Independent erf via its Maclaurin series, in long double.
long double erf_series(long double z) {
  long double sum = 0, term = z;  // z^(2n+1) / n! with sign
  for (int n = 0; n < 80; ++n) {
    sum += term / (2 * n + 1);
    term *= -z * z / (n + 1);
  }
  return 2 * sum / std::sqrt(std::numbers::pi_v<long double>);
}

Tensor ramp(std::size_t ch, std::size_t len) {
  Tensor t(ch, len);
  for (std::size_t i = 0; i < t.size(); ++i) t.values()[i] = 0.1 * static_cast<double>(i);
  return t;
}

TEST(Tensor, ShapeInvariant) {
  EXPECT_THROW(Tensor(2, 3, std::vector<double>(5)), std::invalid_argument);
  Tensor t(2, 3, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_DOUBLE_EQ(t(1, 2), 1.5);
}

TEST(Conv1d, StemShape) {
  Tape tape(Tape::Mode::kInference);
  Var x = tape.constant(Tensor(1, 1024, 1.0));
  Var w = tape.constant(Tensor(6, 4, 0.25));
  Var b = tape.constant(Tensor(6, 1, 0.0));
  const Tensor& y = tape.value(tape.conv1d(x, w, b, 4, 4));
  EXPECT_EQ(y.channels(), 6u);
  EXPECT_EQ(y.length(), 256u);
  EXPECT_DOUBLE_EQ(y(3, 100), 1.0);
}

TEST(Conv1d, IdentityKernel) {
  Tape tape(Tape::Mode::kInference);
  const Tensor in = ramp(1, 17);
  Var x = tape.constant(in);
  Var y = tape.conv1d(x, tape.constant(Tensor(1, 1, 1.0)), tape.constant(Tensor(1, 1, 0.0)), 1, 1);
  EXPECT_EQ(tape.value(y), in);
}

TEST(Conv1d, OutputLengthFormula) {
  for (std::size_t len : {7u, 8u, 9u, 30u}) {
    for (std::size_t k : {1u, 2u, 3u}) {
      for (std::size_t s : {1u, 2u, 4u}) {
        Tape tape(Tape::Mode::kInference);
        Var y = tape.conv1d(tape.constant(Tensor(2, len, 1.0)), tape.constant(Tensor(3, 2 * k, 1.0)),
                            tape.constant(Tensor(3, 1, 0.0)), k, s);
        EXPECT_EQ(tape.value(y).length(), (len - k) / s + 1);
      }
    }
  }
}

TEST(Conv1d, RejectsChannelMismatch) {
  Tape tape;
  Var x = tape.constant(Tensor(2, 8, 1.0));
  Var w = tape.constant(Tensor(3, 3 * 3, 1.0));  // expects 3 input channels
  Var b = tape.constant(Tensor(3, 1, 0.0));
  EXPECT_THROW(tape.conv1d(x, w, b, 3, 1), std::invalid_argument);
  EXPECT_THROW(tape.conv1d(tape.constant(Tensor(2, 2, 1.0)), tape.constant(Tensor(3, 6, 1.0)), b, 3, 1),
               std::invalid_argument);
}

TEST(Conv1d, SumOfOutputsGradientMatchesFiniteDifferences) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t stride = 1 + trial % 3;
    auto r = check_gradients(
        {random_tensor(rng, 2, 8), random_tensor(rng, 3, 2 * 3), random_tensor(rng, 3, 1)},
        [stride](Tape& t, const std::vector<Var>& v) {
          return t.sum(t.conv1d(v[0], v[1], v[2], 3, stride));
        });
    EXPECT_TRUE(r.passes()) << "rel " << r.worst_relative << " abs " << r.worst_absolute;
  }
}

TEST(Conv1d, Linearity) {
  Rng rng(5);
  const Tensor w = random_tensor(rng, 4, 3 * 5);
  const Tensor x = random_tensor(rng, 3, 40);
  const Tensor y = random_tensor(rng, 3, 40);
  const double a = 0.7, b = -1.3;
  Tensor mix(3, 40);
  for (std::size_t i = 0; i < mix.size(); ++i) mix.values()[i] = a * x.values()[i] + b * y.values()[i];
  auto run = [&](const Tensor& in) {
    Tape tape(Tape::Mode::kInference);
    return tape.value(tape.conv1d(tape.constant(in), tape.constant(w), tape.constant(Tensor(4, 1, 0.0)), 5, 2));
  };
  const Tensor lhs = run(mix), rx = run(x), ry = run(y);
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    EXPECT_NEAR(lhs.values()[i], a * rx.values()[i] + b * ry.values()[i], 1e-10);
  }
}

TEST(DepthwiseConv1d, ConstantInputWithUnitKernel) {
  Tape tape(Tape::Mode::kInference);
  Tensor k(2, 7, 1.0 / 7.0);
  Var y = tape.depthwise_conv1d(tape.constant(Tensor(2, 32, 5.0)), tape.constant(k),
                                tape.constant(Tensor(2, 1, 0.0)));
  const Tensor& out = tape.value(y);
  EXPECT_EQ(out.length(), 32u);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t t = 3; t < 29; ++t) EXPECT_NEAR(out(c, t), 5.0, 1e-12);
}

TEST(DepthwiseConv1d, CenteredImpulseKernelIsIdentity) {
  Tape tape(Tape::Mode::kInference);
  Tensor k(1, 7, 0.0);
  k(0, 3) = 1.0;
  const Tensor in = ramp(1, 20);
  Var y = tape.depthwise_conv1d(tape.constant(in), tape.constant(k), tape.constant(Tensor(1, 1, 0.0)));
  EXPECT_EQ(tape.value(y), in);
}

TEST(DepthwiseConv1d, RejectsChannelMismatch) {
  Tape tape;
  EXPECT_THROW(tape.depthwise_conv1d(tape.constant(Tensor(3, 10, 1.0)), tape.constant(Tensor(2, 7, 1.0)),
                                     tape.constant(Tensor(2, 1, 0.0))),
               std::invalid_argument);
}

TEST(DepthwiseConv1d, GradientMatchesFiniteDifferences) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor proj = random_tensor(rng, 4, 32);
    auto r = check_gradients(
        {random_tensor(rng, 4, 32), random_tensor(rng, 4, 7), random_tensor(rng, 4, 1)},
        [&proj](Tape& t, const std::vector<Var>& v) {
          return t.sum(t.mul(t.depthwise_conv1d(v[0], v[1], v[2]), t.constant(proj)));
        });
    EXPECT_TRUE(r.passes()) << "rel " << r.worst_relative << " abs " << r.worst_absolute;
  }
}

TEST(LayerNorm, ConstantAcrossChannelsGivesZeros) {
  Tape tape(Tape::Mode::kInference);
  Tensor x(3, 4);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t c = 0; c < 3; ++c) x(c, t) = 2.0 * static_cast<double>(t);
  const Tensor& y = tape.value(tape.layer_norm(tape.constant(x), std::nullopt, std::nullopt));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, TwoChannelExample) {
  Tape tape(Tape::Mode::kInference);
  Var g = tape.constant(Tensor(2, 1, 1.0));
  Var s = tape.constant(Tensor(2, 1, 0.0));
  Var y = tape.layer_norm(tape.constant(Tensor(2, 1, std::vector<double>{1.0, 3.0})), g, s, 0.0);
  EXPECT_DOUBLE_EQ(tape.value(y)(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(tape.value(y)(1, 0), 1.0);
}

TEST(LayerNorm, PerPositionMomentsOnRandomInput) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    // Channel variance is at least 1e-3 by construction of the scale.
    const double scale = trial % 2 ? 0.05 : 3.0;
    Tensor x = random_tensor(rng, 8, 50, scale);
    Tape tape(Tape::Mode::kInference);
    const Tensor& y = tape.value(tape.layer_norm(tape.constant(x), std::nullopt, std::nullopt));
    for (std::size_t t = 0; t < 50; ++t) {
      double m = 0, v = 0, xm = 0, xv = 0;
      for (std::size_t c = 0; c < 8; ++c) {
        m += y(c, t);
        xm += x(c, t);
      }
      m /= 8;
      xm /= 8;
      for (std::size_t c = 0; c < 8; ++c) {
        v += (y(c, t) - m) * (y(c, t) - m);
        xv += (x(c, t) - xm) * (x(c, t) - xm);
      }
      if (xv / 8 < 1e-3) continue;
      EXPECT_LT(std::abs(m), 1e-6);
      EXPECT_NEAR(v / 8, 1.0, 1e-4);
    }
  }
}

TEST(LayerNorm, GradientMatchesFiniteDifferences) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor proj = random_tensor(rng, 5, 12);
    auto r = check_gradients({random_tensor(rng, 5, 12), random_tensor(rng, 5, 1), random_tensor(rng, 5, 1)},
                             [&proj](Tape& t, const std::vector<Var>& v) {
                               return t.sum(t.mul(t.layer_norm(v[0], v[1], v[2]), t.constant(proj)));
                             });
    EXPECT_TRUE(r.passes()) << "rel " << r.worst_relative << " abs " << r.worst_absolute;
  }
}

TEST(Gelu, KnownValues) {
  Tape tape(Tape::Mode::kInference);
  Var y = tape.gelu(tape.constant(Tensor(1, 3, std::vector<double>{0.0, 6.0, -1.0})));
  const Tensor& out = tape.value(y);
  EXPECT_EQ(out(0, 0), 0.0);
  EXPECT_NEAR(out(0, 1), 6.0, 1e-3);
  const long double expected = -1.0L * 0.5L * (1.0L + erf_series(-1.0L / std::sqrt(2.0L)));
  EXPECT_NEAR(out(0, 2), static_cast<double>(expected), 1e-15);
  EXPECT_NEAR(static_cast<double>(expected), -0.15865525393145707, 1e-15);
}

TEST(Gelu, GradientMatchesFiniteDifferences) {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    auto r = check_gradients({random_tensor(rng, 3, 10, 2.0)},
                             [](Tape& t, const std::vector<Var>& v) { return t.sum(t.gelu(v[0])); });
    EXPECT_TRUE(r.passes()) << "rel " << r.worst_relative << " abs " << r.worst_absolute;
  }
}

TEST(AvgPool, MeansAndGradient) {
  Tape tape;
  Var x = tape.variable(Tensor(2, 4, std::vector<double>{1, 2, 3, 4, 2.5, 2.5, 2.5, 2.5}));
  Var y = tape.avg_pool_full(x);
  EXPECT_DOUBLE_EQ(tape.value(y)(0, 0), 2.5);
  EXPECT_DOUBLE_EQ(tape.value(y)(1, 0), 2.5);
  tape.backward(tape.sum(y));
  for (double g : tape.grad(x).values()) EXPECT_DOUBLE_EQ(g, 0.25);
  Tape empty;
  EXPECT_THROW(empty.avg_pool_full(empty.constant(Tensor(2, 0))), std::invalid_argument);
}

TEST(Linear, ValuesAndErrors) {
  Tape tape(Tape::Mode::kInference);
  Var f = tape.constant(Tensor(3, 1, std::vector<double>{4, 5, 6}));
  EXPECT_DOUBLE_EQ(tape.value(tape.linear(f, tape.constant(Tensor(1, 3, 0.0)), tape.constant(Tensor::scalar(0.75)))).item(), 0.75);
  EXPECT_DOUBLE_EQ(tape.value(tape.linear(f, tape.constant(Tensor(1, 3, std::vector<double>{0, 1, 0})), tape.constant(Tensor::scalar(0)))).item(), 5.0);
  EXPECT_THROW(tape.linear(f, tape.constant(Tensor(1, 4, 0.0)), tape.constant(Tensor::scalar(0))), std::invalid_argument);
}

TEST(Linear, GradientMatchesFiniteDifferences) {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    auto r = check_gradients({random_tensor(rng, 6, 1), random_tensor(rng, 1, 6), random_tensor(rng, 1, 1)},
                             [](Tape& t, const std::vector<Var>& v) {
                               Var z = t.linear(v[0], v[1], v[2]);
                               return t.mul(z, z);
                             });
    EXPECT_TRUE(r.passes()) << "rel " << r.worst_relative << " abs " << r.worst_absolute;
  }
}

TEST(Sigmoid, Values) {
  Tape tape(Tape::Mode::kInference);
  Var y = tape.sigmoid(tape.constant(Tensor(1, 4, std::vector<double>{0.0, 3.7, -3.7, 2.0})));
  const Tensor& out = tape.value(y);
  EXPECT_EQ(out(0, 0), 0.5);
  EXPECT_NEAR(out(0, 2), 1.0 - out(0, 1), 1e-15);
  // exp(-2) from its power series.
  long double e = 0, term = 1;
  for (int n = 0; n < 40; ++n) {
    e += term;
    term *= -2.0L / (n + 1);
  }
  EXPECT_NEAR(out(0, 3), static_cast<double>(1.0L / (1.0L + e)), 1e-15);
  EXPECT_NEAR(out(0, 3), 0.8807970779778823, 1e-15);
}

TEST(Backward, ScalarProduct) {
  Tape tape;
  Var w = tape.variable(Tensor::scalar(2.0));
  Var x = tape.constant(Tensor::scalar(3.0));
  tape.backward(tape.mul(w, x));
  EXPECT_DOUBLE_EQ(tape.grad(w).item(), 3.0);
}

TEST(Backward, ReusedValueAccumulates) {
  Tape tape;
  Var w = tape.variable(Tensor::scalar(2.0));
  Var x = tape.constant(Tensor::scalar(3.0));
  Var y = tape.constant(Tensor::scalar(-7.5));
  tape.backward(tape.add(tape.mul(w, x), tape.mul(w, y)));
  EXPECT_DOUBLE_EQ(tape.grad(w).item(), 3.0 - 7.5);
}

TEST(Backward, RejectsNonScalarRoot) {
  Tape tape;
  Var w = tape.variable(Tensor(2, 2, 1.0));
  EXPECT_THROW(tape.backward(tape.gelu(w)), std::invalid_argument);
}

TEST(Backward, VisitsInReverseExecutionOrder) {
  Tape tape;
  Var w = tape.variable(Tensor(1, 4, 0.5));
  Var a = tape.gelu(w);
  Var b = tape.sigmoid(a);
  Var c = tape.sum(b);
  tape.backward(c);
  EXPECT_EQ(tape.backward_order(), (std::vector<std::size_t>{c.index, b.index, a.index}));
}

TEST(Backward, ParameterSinksAccumulateAcrossTapes) {
  Tensor w(1, 1, 2.0), sink(1, 1, 0.0);
  for (double x : {3.0, 4.0}) {
    Tape tape;
    tape.backward(tape.mul(tape.parameter(w, &sink), tape.constant(Tensor::scalar(x))));
  }
  EXPECT_DOUBLE_EQ(sink.item(), 7.0);
}

TEST(WeightedBce, GradientMatchesFiniteDifferences) {
  Rng rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    const double label = trial % 2;
    auto r = check_gradients({random_tensor(rng, 1, 1, 3.0)}, [label](Tape& t, const std::vector<Var>& v) {
      return t.weighted_bce(v[0], label, 1.0, 5.0);
    });
    EXPECT_TRUE(r.passes()) << "rel " << r.worst_relative << " abs " << r.worst_absolute;
  }
}

TEST(Determinism, RepeatedForwardIsBitIdentical) {
  Rng rng(17);
  const Tensor x = random_tensor(rng, 4, 64), w = random_tensor(rng, 16, 4), k = random_tensor(rng, 4, 7);
  auto run = [&]() {
    Tape tape(Tape::Mode::kInference);
    Var h = tape.depthwise_conv1d(tape.constant(x), tape.constant(k), tape.constant(Tensor(4, 1, 0.1)));
    h = tape.layer_norm(h, std::nullopt, std::nullopt);
    h = tape.gelu(tape.conv1d(h, tape.constant(w), tape.constant(Tensor(16, 1, 0.0)), 1, 1));
    return tape.value(h);
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace seiznet
