#include "sma/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sma/error.hpp"

namespace sma {
namespace {

template <typename Real>
void check_conv(const Tensor3<Real>& x, const ConvView<Real>& p) {
  const auto& s = p.shape;
  if (s.kernel < 1 || s.dilation < 1) throw ArgumentError("conv: kernel and dilation must be >= 1");
  if (x.channels() != s.in_channels) {
    throw ShapeError("conv: input has " + std::to_string(x.channels()) + " channels, expected " +
                     std::to_string(s.in_channels));
  }
  if (p.weights.size() != s.weight_count() || p.bias.size() != s.out_channels) {
    throw ShapeError("conv: parameter sizes do not match shape");
  }
}

}  // namespace

template <typename Real>
Tensor3<Real> causal_conv1d(const Tensor3<Real>& x, const ConvView<Real>& p) {
  check_conv(x, p);
  const auto& s = p.shape;
  const std::size_t T = x.time();
  Tensor3<Real> y(x.batch(), s.out_channels, T);
  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t o = 0; o < s.out_channels; ++o) {
      auto out = y.row(n, o);
      std::fill(out.begin(), out.end(), p.bias[o]);
      for (std::size_t i = 0; i < s.in_channels; ++i) {
        const auto in = x.row(n, i);
        const Real* w = p.weights.data() + (o * s.in_channels + i) * s.kernel;
        for (std::size_t k = 0; k < s.kernel; ++k) {
          const std::size_t shift = (s.kernel - 1 - k) * s.dilation;
          if (shift >= T) continue;
          const Real wk = w[k];
          for (std::size_t t = shift; t < T; ++t) out[t] += wk * in[t - shift];
        }
      }
    }
  }
  return y;
}

template <typename Real>
ConvGrads<Real> causal_conv1d_backward(const Tensor3<Real>& x, const ConvView<Real>& p,
                                       const Tensor3<Real>& grad_y) {
  check_conv(x, p);
  const auto& s = p.shape;
  if (grad_y.batch() != x.batch() || grad_y.channels() != s.out_channels || grad_y.time() != x.time()) {
    throw ShapeError("conv backward: grad_y shape does not match forward output");
  }
  const std::size_t T = x.time();
  ConvGrads<Real> g{Tensor3<Real>(x.batch(), x.channels(), T), std::vector<Real>(s.weight_count(), Real(0)),
                    std::vector<Real>(s.out_channels, Real(0))};
  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t o = 0; o < s.out_channels; ++o) {
      const auto gy = grad_y.row(n, o);
      Real bsum = 0;
      for (std::size_t t = 0; t < T; ++t) bsum += gy[t];
      g.bias[o] += bsum;
      for (std::size_t i = 0; i < s.in_channels; ++i) {
        const auto in = x.row(n, i);
        auto gx = g.input.row(n, i);
        const std::size_t widx = (o * s.in_channels + i) * s.kernel;
        for (std::size_t k = 0; k < s.kernel; ++k) {
          const std::size_t shift = (s.kernel - 1 - k) * s.dilation;
          if (shift >= T) continue;
          const Real wk = p.weights[widx + k];
          Real wsum = 0;
          for (std::size_t t = shift; t < T; ++t) {
            wsum += gy[t] * in[t - shift];
            gx[t - shift] += wk * gy[t];
          }
          g.weights[widx + k] += wsum;
        }
      }
    }
  }
  return g;
}

template <typename Real>
Tensor3<Real> relu(const Tensor3<Real>& x) {
  Tensor3<Real> y = x;
  for (auto& v : y.data()) v = v > Real(0) ? v : Real(0);
  return y;
}

template <typename Real>
Tensor3<Real> relu_backward(const Tensor3<Real>& x, const Tensor3<Real>& grad_y) {
  if (!x.same_shape(grad_y)) throw ShapeError("relu backward: shape mismatch");
  Tensor3<Real> g = grad_y;
  auto gd = g.data();
  const auto xd = x.data();
  for (std::size_t j = 0; j < gd.size(); ++j) {
    if (!(xd[j] > Real(0))) gd[j] = Real(0);
  }
  return g;
}

template <typename Real>
Matrix<Real> global_avg_pool(const Tensor3<Real>& x) {
  if (x.time() == 0) throw ShapeError("global_avg_pool: empty time axis");
  Matrix<Real> y(x.batch(), x.channels());
  const Real inv = Real(1) / static_cast<Real>(x.time());
  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      Real sum = 0;
      for (Real v : x.row(n, c)) sum += v;
      y(n, c) = sum * inv;
    }
  }
  return y;
}

template <typename Real>
Tensor3<Real> global_avg_pool_backward(const Matrix<Real>& grad_y, std::size_t time) {
  if (time == 0) throw ShapeError("global_avg_pool backward: empty time axis");
  Tensor3<Real> g(grad_y.rows(), grad_y.cols(), time);
  const Real inv = Real(1) / static_cast<Real>(time);
  for (std::size_t n = 0; n < grad_y.rows(); ++n) {
    for (std::size_t c = 0; c < grad_y.cols(); ++c) {
      auto r = g.row(n, c);
      std::fill(r.begin(), r.end(), grad_y(n, c) * inv);
    }
  }
  return g;
}

template <typename Real>
Matrix<Real> dense(const Matrix<Real>& x, const DenseView<Real>& p) {
  const auto& s = p.shape;
  if (x.cols() != s.in_features) throw ShapeError("dense: input width does not match in_features");
  if (p.weights.size() != s.weight_count() || p.bias.size() != s.out_features) {
    throw ShapeError("dense: parameter sizes do not match shape");
  }
  Matrix<Real> y(x.rows(), s.out_features);
  for (std::size_t n = 0; n < x.rows(); ++n) {
    const auto xr = x.row(n);
    for (std::size_t o = 0; o < s.out_features; ++o) {
      const Real* w = p.weights.data() + o * s.in_features;
      Real acc = p.bias[o];
      for (std::size_t i = 0; i < s.in_features; ++i) acc += w[i] * xr[i];
      y(n, o) = acc;
    }
  }
  return y;
}

template <typename Real>
DenseGrads<Real> dense_backward(const Matrix<Real>& x, const DenseView<Real>& p, const Matrix<Real>& grad_y) {
  const auto& s = p.shape;
  if (x.cols() != s.in_features || grad_y.rows() != x.rows() || grad_y.cols() != s.out_features) {
    throw ShapeError("dense backward: shape mismatch");
  }
  DenseGrads<Real> g{Matrix<Real>(x.rows(), s.in_features), std::vector<Real>(s.weight_count(), Real(0)),
                     std::vector<Real>(s.out_features, Real(0))};
  for (std::size_t n = 0; n < x.rows(); ++n) {
    const auto xr = x.row(n);
    auto gx = g.input.row(n);
    for (std::size_t o = 0; o < s.out_features; ++o) {
      const Real gy = grad_y(n, o);
      const Real* w = p.weights.data() + o * s.in_features;
      Real* gw = g.weights.data() + o * s.in_features;
      g.bias[o] += gy;
      for (std::size_t i = 0; i < s.in_features; ++i) {
        gw[i] += gy * xr[i];
        gx[i] += gy * w[i];
      }
    }
  }
  return g;
}

template <typename Real>
Matrix<Real> softmax(const Matrix<Real>& logits) {
  Matrix<Real> p(logits.rows(), logits.cols());
  for (std::size_t n = 0; n < logits.rows(); ++n) {
    const auto z = logits.row(n);
    auto out = p.row(n);
    const Real mx = *std::max_element(z.begin(), z.end());
    Real sum = 0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      out[c] = std::exp(z[c] - mx);
      sum += out[c];
    }
    for (auto& v : out) v /= sum;
  }
  return p;
}

template <typename Real>
LossAndGrad<Real> softmax_xent(const Matrix<Real>& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) throw ShapeError("softmax_xent: label count does not match batch");
  if (logits.rows() == 0) throw ArgumentError("softmax_xent: empty batch");
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= logits.cols()) {
      throw ArgumentError("softmax_xent: label " + std::to_string(l) + " outside [0, " +
                          std::to_string(logits.cols()) + ")");
    }
  }
  const std::size_t N = logits.rows();
  LossAndGrad<Real> out{0, softmax(logits)};
  const Real invn = Real(1) / static_cast<Real>(N);
  Real total = 0;
  for (std::size_t n = 0; n < N; ++n) {
    const auto z = logits.row(n);
    const Real mx = *std::max_element(z.begin(), z.end());
    Real sum = 0;
    for (Real v : z) sum += std::exp(v - mx);
    const auto y = static_cast<std::size_t>(labels[n]);
    total += (mx + std::log(sum)) - z[y];
    auto g = out.grad.row(n);
    g[y] -= Real(1);
    for (auto& v : g) v *= invn;
  }
  out.loss = total * invn;
  return out;
}

#define SMA_INSTANTIATE_LAYERS(Real)                                                                       \
  template Tensor3<Real> causal_conv1d(const Tensor3<Real>&, const ConvView<Real>&);                       \
  template ConvGrads<Real> causal_conv1d_backward(const Tensor3<Real>&, const ConvView<Real>&,             \
                                                  const Tensor3<Real>&);                                   \
  template Tensor3<Real> relu(const Tensor3<Real>&);                                                       \
  template Tensor3<Real> relu_backward(const Tensor3<Real>&, const Tensor3<Real>&);                        \
  template Matrix<Real> global_avg_pool(const Tensor3<Real>&);                                             \
  template Tensor3<Real> global_avg_pool_backward(const Matrix<Real>&, std::size_t);                       \
  template Matrix<Real> dense(const Matrix<Real>&, const DenseView<Real>&);                                 \
  template DenseGrads<Real> dense_backward(const Matrix<Real>&, const DenseView<Real>&, const Matrix<Real>&); \
  template Matrix<Real> softmax(const Matrix<Real>&);                                                      \
  template LossAndGrad<Real> softmax_xent(const Matrix<Real>&, std::span<const int>);

SMA_INSTANTIATE_LAYERS(float)
SMA_INSTANTIATE_LAYERS(double)

#undef SMA_INSTANTIATE_LAYERS

}  // namespace sma
