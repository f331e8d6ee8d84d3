#include "seiznet/tape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace seiznet {

namespace {

// Four independent accumulators so the reduction pipelines without
// reassociation flags.
double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

double dot_strided(const double* a, const double* b, std::size_t b_stride, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i * b_stride];
  return s;
}

double total(const double* a, std::size_t n) {
  double s0 = 0, s1 = 0;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    s0 += a[i];
    s1 += a[i + 1];
  }
  for (; i < n; ++i) s0 += a[i];
  return s0 + s1;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// Message is built only on failure; these checks run on every op.
template <class Msg>
void require(bool ok, const char* op, Msg&& what) {
  if (!ok) throw std::invalid_argument(std::string(op) + ": " + std::string(what()));
}

std::string shape_str(const Tensor& t) {
  return std::to_string(t.channels()) + "x" + std::to_string(t.length());
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

Var Tape::push(Tensor value, std::string_view op, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.op = op;
  n.requires_grad = requires_grad && mode_ == Mode::kRecord;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Tensor& Tape::grad_slot(std::size_t i) {
  Node& n = nodes_[i];
  if (n.grad.empty()) {
    const Tensor& v = val(i);
    n.grad = Tensor(v.channels(), v.length(), 0.0);
  }
  return n.grad;
}

Var Tape::constant(Tensor value) { return push(std::move(value), "constant", false); }

Var Tape::variable(Tensor value) { return push(std::move(value), "variable", true); }

Var Tape::parameter(const Tensor& value, Tensor* grad_sink) {
  if (grad_sink && !grad_sink->same_shape(value)) {
    throw std::invalid_argument("Tape::parameter: gradient sink shape " + shape_str(*grad_sink) +
                                " does not match value shape " + shape_str(value));
  }
  Var v = push(Tensor(), "parameter", grad_sink != nullptr);
  nodes_[v.index].external = &value;
  nodes_[v.index].grad_sink = grad_sink;
  return v;
}

const Tensor& Tape::value(Var v) const { return val(v.index); }

const Tensor& Tape::grad(Var v) { return grad_slot(v.index); }

Var Tape::conv1d(Var input, Var kernel, Var bias, std::size_t kernel_size, std::size_t stride) {
  const Tensor& x = val(input.index);
  const Tensor& w = val(kernel.index);
  const Tensor& b = val(bias.index);
  const std::size_t in_ch = x.channels();
  const std::size_t len = x.length();
  const std::size_t k = kernel_size;
  require(k >= 1 && stride >= 1, "conv1d", [&] { return "kernel size and stride must be positive"; });
  require(w.length() == in_ch * k, "conv1d", [&] { return
          "kernel " + shape_str(w) + " expects " + std::to_string(w.length() / k) +
              " input channels, input has " + std::to_string(in_ch); });
  require(b.channels() == w.channels() && b.length() == 1, "conv1d", [&] { return
          "bias " + shape_str(b) + " does not match " + std::to_string(w.channels()) +
              " output channels"; });
  require(len >= k, "conv1d", [&] { return
          "input length " + std::to_string(len) + " shorter than kernel " + std::to_string(k); });
  const std::size_t out_ch = w.channels();
  const std::size_t out_len = (len - k) / stride + 1;

  Tensor y(out_ch, out_len);
  for (std::size_t o = 0; o < out_ch; ++o) {
    double* yo = y.row(o).data();
    std::fill(yo, yo + out_len, b(o, 0));
  }
  if (stride == 1) {
    // Four output rows per pass over each input row.
    std::size_t o = 0;
    for (; o + 4 <= out_ch; o += 4) {
      double* y0 = y.row(o).data();
      double* y1 = y.row(o + 1).data();
      double* y2 = y.row(o + 2).data();
      double* y3 = y.row(o + 3).data();
      for (std::size_t c = 0; c < in_ch * k; ++c) {
        const double* xr = x.row(c / k).data() + c % k;
        const double w0 = w(o, c), w1 = w(o + 1, c), w2 = w(o + 2, c), w3 = w(o + 3, c);
        for (std::size_t t = 0; t < out_len; ++t) {
          const double xv = xr[t];
          y0[t] += w0 * xv;
          y1[t] += w1 * xv;
          y2[t] += w2 * xv;
          y3[t] += w3 * xv;
        }
      }
    }
    for (; o < out_ch; ++o) {
      for (std::size_t c = 0; c < in_ch * k; ++c) {
        axpy(w(o, c), x.row(c / k).data() + c % k, y.row(o).data(), out_len);
      }
    }
  } else {
    for (std::size_t o = 0; o < out_ch; ++o) {
      double* yo = y.row(o).data();
      for (std::size_t i = 0; i < in_ch; ++i) {
        const double* xi = x.row(i).data();
        for (std::size_t j = 0; j < k; ++j) {
          const double wv = w(o, i * k + j);
          for (std::size_t t = 0; t < out_len; ++t) yo[t] += wv * xi[t * stride + j];
        }
      }
    }
  }
  macs_ += static_cast<std::uint64_t>(out_ch) * in_ch * k * out_len;

  const bool rg = needs(input.index) || needs(kernel.index) || needs(bias.index);
  Var out = push(std::move(y), "conv1d", rg);
  if (!rg) return out;
  const std::size_t yi = out.index, xi_ = input.index, wi = kernel.index, bi = bias.index;
  nodes_[yi].adjoint = [this, yi, xi_, wi, bi, k, stride, in_ch, out_ch, out_len]() {
    const Tensor& gy = nodes_[yi].grad;
    const Tensor& x = val(xi_);
    const Tensor& w = val(wi);
    if (needs(bi)) {
      Tensor& gb = grad_slot(bi);
      for (std::size_t o = 0; o < out_ch; ++o) gb(o, 0) += total(gy.row(o).data(), out_len);
    }
    if (needs(wi)) {
      Tensor& gw = grad_slot(wi);
      for (std::size_t o = 0; o < out_ch; ++o) {
        const double* go = gy.row(o).data();
        for (std::size_t i = 0; i < in_ch; ++i) {
          const double* xr = x.row(i).data();
          for (std::size_t j = 0; j < k; ++j) {
            gw(o, i * k + j) += stride == 1 ? dot(go, xr + j, out_len)
                                            : dot_strided(go, xr + j, stride, out_len);
          }
        }
      }
    }
    if (needs(xi_)) {
      Tensor& gx = grad_slot(xi_);
      if (stride == 1) {
        std::size_t o = 0;
        for (; o + 4 <= out_ch; o += 4) {
          const double* g0 = gy.row(o).data();
          const double* g1 = gy.row(o + 1).data();
          const double* g2 = gy.row(o + 2).data();
          const double* g3 = gy.row(o + 3).data();
          for (std::size_t c = 0; c < in_ch * k; ++c) {
            double* gxr = gx.row(c / k).data() + c % k;
            const double w0 = w(o, c), w1 = w(o + 1, c), w2 = w(o + 2, c), w3 = w(o + 3, c);
            for (std::size_t t = 0; t < out_len; ++t) {
              gxr[t] += (w0 * g0[t] + w1 * g1[t]) + (w2 * g2[t] + w3 * g3[t]);
            }
          }
        }
        for (; o < out_ch; ++o) {
          for (std::size_t c = 0; c < in_ch * k; ++c) {
            axpy(w(o, c), gy.row(o).data(), gx.row(c / k).data() + c % k, out_len);
          }
        }
      } else {
        for (std::size_t o = 0; o < out_ch; ++o) {
          const double* go = gy.row(o).data();
          for (std::size_t i = 0; i < in_ch; ++i) {
            double* gxr = gx.row(i).data();
            for (std::size_t j = 0; j < k; ++j) {
              const double wv = w(o, i * k + j);
              for (std::size_t t = 0; t < out_len; ++t) gxr[t * stride + j] += wv * go[t];
            }
          }
        }
      }
    }
  };
  return out;
}

Var Tape::depthwise_conv1d(Var input, Var kernel, Var bias) {
  const Tensor& x = val(input.index);
  const Tensor& w = val(kernel.index);
  const Tensor& b = val(bias.index);
  const std::size_t ch = x.channels();
  const std::size_t len = x.length();
  const std::size_t k = w.length();
  require(w.channels() == ch, "depthwise_conv1d", [&] { return
          "kernel has " + std::to_string(w.channels()) + " channels, input has " +
              std::to_string(ch); });
  require(k % 2 == 1, "depthwise_conv1d", [&] { return "kernel length must be odd"; });
  require(b.channels() == ch && b.length() == 1, "depthwise_conv1d", [&] { return
          "bias " + shape_str(b) + " does not match channel count"; });
  const std::size_t pad = (k - 1) / 2;

  // Output position t reads input t + j - pad for tap j.
  auto tap_range = [len, pad](std::size_t j, std::size_t& t0, std::size_t& t1) {
    t0 = j < pad ? pad - j : 0;
    t1 = std::min(len, len + pad - j);
  };

  Tensor y(ch, len);
  for (std::size_t c = 0; c < ch; ++c) {
    double* yc = y.row(c).data();
    const double* xc = x.row(c).data();
    std::fill(yc, yc + len, b(c, 0));
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t t0, t1;
      tap_range(j, t0, t1);
      if (t1 > t0) axpy(w(c, j), xc + t0 + j - pad, yc + t0, t1 - t0);
    }
  }
  macs_ += static_cast<std::uint64_t>(ch) * k * len;

  const bool rg = needs(input.index) || needs(kernel.index) || needs(bias.index);
  Var out = push(std::move(y), "depthwise_conv1d", rg);
  if (!rg) return out;
  const std::size_t yi = out.index, xi_ = input.index, wi = kernel.index, bi = bias.index;
  nodes_[yi].adjoint = [this, yi, xi_, wi, bi, ch, k, tap_range]() {
    const Tensor& gy = nodes_[yi].grad;
    const Tensor& x = val(xi_);
    const Tensor& w = val(wi);
    const std::size_t pad = (k - 1) / 2;
    const std::size_t len = x.length();
    if (needs(bi)) {
      Tensor& gb = grad_slot(bi);
      for (std::size_t c = 0; c < ch; ++c) gb(c, 0) += total(gy.row(c).data(), len);
    }
    const bool gw_needed = needs(wi);
    const bool gx_needed = needs(xi_);
    for (std::size_t c = 0; c < ch; ++c) {
      const double* gc = gy.row(c).data();
      for (std::size_t j = 0; j < k; ++j) {
        std::size_t t0, t1;
        tap_range(j, t0, t1);
        if (t1 <= t0) continue;
        if (gw_needed) grad_slot(wi)(c, j) += dot(gc + t0, x.row(c).data() + t0 + j - pad, t1 - t0);
        if (gx_needed) axpy(w(c, j), gc + t0, grad_slot(xi_).row(c).data() + t0 + j - pad, t1 - t0);
      }
    }
  };
  return out;
}

Var Tape::layer_norm(Var input, std::optional<Var> gain, std::optional<Var> shift, double epsilon) {
  const Tensor& x = val(input.index);
  const std::size_t ch = x.channels();
  const std::size_t len = x.length();
  require(ch >= 1, "layer_norm", [&] { return "empty input"; });
  for (auto p : {gain, shift}) {
    if (p) {
      const Tensor& t = val(p->index);
      require(t.channels() == ch && t.length() == 1, "layer_norm", [&] { return
              "affine parameter " + shape_str(t) + " does not match " + std::to_string(ch) +
                  " channels"; });
    }
  }

  std::vector<double> mean(len, 0.0), inv_std(len, 0.0);
  for (std::size_t c = 0; c < ch; ++c) axpy(1.0, x.row(c).data(), mean.data(), len);
  for (double& m : mean) m /= static_cast<double>(ch);
  std::vector<double> var(len, 0.0);
  for (std::size_t c = 0; c < ch; ++c) {
    const double* xc = x.row(c).data();
    for (std::size_t t = 0; t < len; ++t) {
      const double d = xc[t] - mean[t];
      var[t] += d * d;
    }
  }
  for (std::size_t t = 0; t < len; ++t) {
    inv_std[t] = 1.0 / std::sqrt(var[t] / static_cast<double>(ch) + epsilon);
  }
  Tensor xhat(ch, len);
  for (std::size_t c = 0; c < ch; ++c) {
    const double* xc = x.row(c).data();
    double* hc = xhat.row(c).data();
    for (std::size_t t = 0; t < len; ++t) hc[t] = (xc[t] - mean[t]) * inv_std[t];
  }
  Tensor y = xhat;
  if (gain || shift) {
    for (std::size_t c = 0; c < ch; ++c) {
      const double g = gain ? val(gain->index)(c, 0) : 1.0;
      const double s = shift ? val(shift->index)(c, 0) : 0.0;
      for (double& v : y.row(c)) v = v * g + s;
    }
  }

  bool rg = needs(input.index);
  if (gain) rg = rg || needs(gain->index);
  if (shift) rg = rg || needs(shift->index);
  Var out = push(std::move(y), "layer_norm", rg);
  if (!rg) return out;
  const std::size_t yi = out.index, xi_ = input.index;
  nodes_[yi].adjoint = [this, yi, xi_, gain, shift, ch, len, xhat = std::move(xhat),
                        inv_std = std::move(inv_std)]() {
    const Tensor& gy = nodes_[yi].grad;
    if (shift && needs(shift->index)) {
      Tensor& gs = grad_slot(shift->index);
      for (std::size_t c = 0; c < ch; ++c) gs(c, 0) += total(gy.row(c).data(), len);
    }
    if (gain && needs(gain->index)) {
      Tensor& gg = grad_slot(gain->index);
      for (std::size_t c = 0; c < ch; ++c) gg(c, 0) += dot(gy.row(c).data(), xhat.row(c).data(), len);
    }
    if (!needs(xi_)) return;
    // d xhat = gy * gain; dx = inv_std * (dxhat - mean_c(dxhat) - xhat * mean_c(dxhat * xhat))
    std::vector<double> m1(len, 0.0), m2(len, 0.0);
    Tensor dxhat = gy;
    if (gain) {
      const Tensor& g = val(gain->index);
      for (std::size_t c = 0; c < ch; ++c)
        for (double& v : dxhat.row(c)) v *= g(c, 0);
    }
    for (std::size_t c = 0; c < ch; ++c) {
      const double* d = dxhat.row(c).data();
      const double* h = xhat.row(c).data();
      for (std::size_t t = 0; t < len; ++t) {
        m1[t] += d[t];
        m2[t] += d[t] * h[t];
      }
    }
    const double inv_ch = 1.0 / static_cast<double>(ch);
    Tensor& gx = grad_slot(xi_);
    for (std::size_t c = 0; c < ch; ++c) {
      const double* d = dxhat.row(c).data();
      const double* h = xhat.row(c).data();
      double* g = gx.row(c).data();
      for (std::size_t t = 0; t < len; ++t) {
        g[t] += inv_std[t] * (d[t] - m1[t] * inv_ch - h[t] * m2[t] * inv_ch);
      }
    }
  };
  return out;
}

Var Tape::gelu(Var input) {
  const Tensor& x = val(input.index);
  Tensor y(x.channels(), x.length());
  auto xs = x.values();
  auto ys = y.values();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = xs[i] * std_normal_cdf(xs[i]);
  const bool rg = needs(input.index);
  Var out = push(std::move(y), "gelu", rg);
  if (!rg) return out;
  const std::size_t yi = out.index, xi_ = input.index;
  nodes_[yi].adjoint = [this, yi, xi_]() {
    auto gy = nodes_[yi].grad.values();
    auto xs = val(xi_).values();
    auto gx = grad_slot(xi_).values();
    const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double v = xs[i];
      gx[i] += gy[i] * (std_normal_cdf(v) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v));
    }
  };
  return out;
}

Var Tape::avg_pool_full(Var input) {
  const Tensor& x = val(input.index);
  require(x.length() > 0, "avg_pool_full", [&] { return "zero-length input"; });
  const std::size_t ch = x.channels();
  const std::size_t len = x.length();
  Tensor y(ch, 1);
  for (std::size_t c = 0; c < ch; ++c) y(c, 0) = total(x.row(c).data(), len) / static_cast<double>(len);
  const bool rg = needs(input.index);
  Var out = push(std::move(y), "avg_pool_full", rg);
  if (!rg) return out;
  const std::size_t yi = out.index, xi_ = input.index;
  nodes_[yi].adjoint = [this, yi, xi_, ch, len]() {
    const Tensor& gy = nodes_[yi].grad;
    Tensor& gx = grad_slot(xi_);
    const double inv = 1.0 / static_cast<double>(len);
    for (std::size_t c = 0; c < ch; ++c) {
      const double g = gy(c, 0) * inv;
      for (double& v : gx.row(c)) v += g;
    }
  };
  return out;
}

Var Tape::linear(Var features, Var weights, Var bias) {
  const Tensor& f = val(features.index);
  const Tensor& w = val(weights.index);
  const Tensor& b = val(bias.index);
  require(f.length() == 1, "linear", [&] { return "features must be a column vector, got " + shape_str(f); });
  require(w.channels() == 1 && w.length() == f.channels(), "linear", [&] { return
          "weights " + shape_str(w) + " do not match " + std::to_string(f.channels()) +
              " features"; });
  require(b.size() == 1, "linear", [&] { return "bias must be scalar"; });
  const std::size_t n = f.channels();
  Tensor y = Tensor::scalar(dot(w.data(), f.data(), n) + b.item());
  macs_ += n;
  const bool rg = needs(features.index) || needs(weights.index) || needs(bias.index);
  Var out = push(std::move(y), "linear", rg);
  if (!rg) return out;
  const std::size_t yi = out.index, fi = features.index, wi = weights.index, bi = bias.index;
  nodes_[yi].adjoint = [this, yi, fi, wi, bi, n]() {
    const double g = nodes_[yi].grad.item();
    if (needs(bi)) grad_slot(bi).values()[0] += g;
    if (needs(wi)) axpy(g, val(fi).data(), grad_slot(wi).data(), n);
    if (needs(fi)) axpy(g, val(wi).data(), grad_slot(fi).data(), n);
  };
  return out;
}

namespace {
double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Var Tape::sigmoid(Var input) {
  const Tensor& x = val(input.index);
  Tensor y(x.channels(), x.length());
  for (std::size_t i = 0; i < x.size(); ++i) y.values()[i] = logistic(x.values()[i]);
  const bool rg = needs(input.index);
  Var out = push(std::move(y), "sigmoid", rg);
  if (!rg) return out;
  const std::size_t yi = out.index, xi_ = input.index;
  nodes_[yi].adjoint = [this, yi, xi_]() {
    auto gy = nodes_[yi].grad.values();
    auto ys = nodes_[yi].value.values();
    auto gx = grad_slot(xi_).values();
    for (std::size_t i = 0; i < ys.size(); ++i) gx[i] += gy[i] * ys[i] * (1.0 - ys[i]);
  };
  return out;
}

Var Tape::add(Var a, Var b) {
  const Tensor& x = val(a.index);
  const Tensor& z = val(b.index);
  require(x.same_shape(z), "add", [&] { return shape_str(x) + " vs " + shape_str(z); });
  Tensor y = x;
  axpy(1.0, z.data(), y.data(), y.size());
  const bool rg = needs(a.index) || needs(b.index);
  Var out = push(std::move(y), "add", rg);
  if (!rg) return out;
  const std::size_t yi = out.index, ai = a.index, bi = b.index;
  nodes_[yi].adjoint = [this, yi, ai, bi]() {
    const Tensor& gy = nodes_[yi].grad;
    if (needs(ai)) axpy(1.0, gy.data(), grad_slot(ai).data(), gy.size());
    if (needs(bi)) axpy(1.0, gy.data(), grad_slot(bi).data(), gy.size());
  };
  return out;
}

Var Tape::mul(Var a, Var b) {
  const Tensor& x = val(a.index);
  const Tensor& z = val(b.index);
  require(x.same_shape(z), "mul", [&] { return shape_str(x) + " vs " + shape_str(z); });
  Tensor y(x.channels(), x.length());
  for (std::size_t i = 0; i < y.size(); ++i) y.values()[i] = x.values()[i] * z.values()[i];
  const bool rg = needs(a.index) || needs(b.index);
  Var out = push(std::move(y), "mul", rg);
  if (!rg) return out;
  const std::size_t yi = out.index, ai = a.index, bi = b.index;
  nodes_[yi].adjoint = [this, yi, ai, bi]() {
    auto gy = nodes_[yi].grad.values();
    if (needs(ai)) {
      auto g = grad_slot(ai).values();
      auto o = val(bi).values();
      for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * o[i];
    }
    if (needs(bi)) {
      auto g = grad_slot(bi).values();
      auto o = val(ai).values();
      for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * o[i];
    }
  };
  return out;
}

Var Tape::sum(Var input) {
  const Tensor& x = val(input.index);
  Tensor y = Tensor::scalar(total(x.data(), x.size()));
  const bool rg = needs(input.index);
  Var out = push(std::move(y), "sum", rg);
  if (!rg) return out;
  const std::size_t yi = out.index, xi_ = input.index;
  nodes_[yi].adjoint = [this, yi, xi_]() {
    const double g = nodes_[yi].grad.item();
    for (double& v : grad_slot(xi_).values()) v += g;
  };
  return out;
}

Var Tape::weighted_bce(Var logit, double label, double weight_negative, double weight_positive) {
  const Tensor& z = val(logit.index);
  require(z.size() == 1, "weighted_bce", [&] { return "logit must be scalar"; });
  const double p = logistic(z.item());
  const double pc = std::clamp(p, 1e-7, 1.0 - 1e-7);
  const double loss = -(weight_positive * label * std::log(pc) +
                        weight_negative * (1.0 - label) * std::log(1.0 - pc));
  const bool rg = needs(logit.index);
  Var out = push(Tensor::scalar(loss), "weighted_bce", rg);
  if (!rg) return out;
  const std::size_t yi = out.index, zi = logit.index;
  nodes_[yi].adjoint = [this, yi, zi, p, label, weight_negative, weight_positive]() {
    const double g = nodes_[yi].grad.item();
    const double dz = weight_positive * label * (p - 1.0) + weight_negative * (1.0 - label) * p;
    grad_slot(zi).values()[0] += g * dz;
  };
  return out;
}

void Tape::backward(Var root) {
  if (mode_ != Mode::kRecord) throw std::logic_error("Tape::backward on an inference-only tape");
  if (!visited_.empty()) throw std::logic_error("Tape::backward called twice on one tape");
  const Tensor& r = val(root.index);
  if (r.size() != 1) {
    throw std::invalid_argument("Tape::backward: root must be scalar, got " + shape_str(r));
  }
  grad_slot(root.index).values()[0] = 1.0;
  for (std::size_t i = root.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.adjoint) continue;
    n.adjoint();
    visited_.push_back(i);
  }
  for (std::size_t i = 0; i <= root.index; ++i) {
    Node& n = nodes_[i];
    if (n.grad_sink && !n.grad.empty()) axpy(1.0, n.grad.data(), n.grad_sink->data(), n.grad.size());
  }
}

}  // namespace seiznet
