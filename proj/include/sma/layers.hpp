#pragma once

// Numerical kernels for the Res-TCN: causal dilated convolution, ReLU,
// global average pooling, dense, softmax cross-entropy. Each forward has a
// hand-written adjoint. Instantiated for float (training) and double
// (gradient checks).

#include <cstddef>
#include <span>
#include <vector>

#include "sma/tensor.hpp"

namespace sma {

struct ConvShape {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 1;
  std::size_t dilation = 1;

  std::size_t weight_count() const { return out_channels * in_channels * kernel; }
  /// Number of past samples (including the current one) one output sees.
  std::size_t receptive_field() const { return 1 + (kernel - 1) * dilation; }

  friend bool operator==(const ConvShape&, const ConvShape&) = default;
};

/// Non-owning view of convolution parameters. Weights are laid out
/// (out, in, k); tap k reads input at t - (kernel-1-k)*dilation.
template <typename Real>
struct ConvView {
  ConvShape shape;
  std::span<const Real> weights;
  std::span<const Real> bias;
};

/// Owning convolution parameters.
template <typename Real>
struct ConvParams {
  ConvShape shape;
  std::vector<Real> weights;
  std::vector<Real> bias;

  ConvView<Real> view() const { return {shape, weights, bias}; }
};

template <typename Real>
struct ConvGrads {
  Tensor3<Real> input;
  std::vector<Real> weights;
  std::vector<Real> bias;
};

template <typename Real>
Tensor3<Real> causal_conv1d(const Tensor3<Real>& x, const ConvView<Real>& p);

template <typename Real>
Tensor3<Real> causal_conv1d(const Tensor3<Real>& x, const ConvParams<Real>& p) {
  return causal_conv1d(x, p.view());
}

template <typename Real>
ConvGrads<Real> causal_conv1d_backward(const Tensor3<Real>& x, const ConvView<Real>& p,
                                       const Tensor3<Real>& grad_y);

template <typename Real>
ConvGrads<Real> causal_conv1d_backward(const Tensor3<Real>& x, const ConvParams<Real>& p,
                                       const Tensor3<Real>& grad_y) {
  return causal_conv1d_backward(x, p.view(), grad_y);
}

template <typename Real>
Tensor3<Real> relu(const Tensor3<Real>& x);

/// Masks grad_y where x <= 0; the subgradient at exactly 0 is 0.
template <typename Real>
Tensor3<Real> relu_backward(const Tensor3<Real>& x, const Tensor3<Real>& grad_y);

/// Mean over the time axis: (N, C, T) -> (N x C).
template <typename Real>
Matrix<Real> global_avg_pool(const Tensor3<Real>& x);

template <typename Real>
Tensor3<Real> global_avg_pool_backward(const Matrix<Real>& grad_y, std::size_t time);

struct DenseShape {
  std::size_t in_features = 1;
  std::size_t out_features = 1;

  std::size_t weight_count() const { return in_features * out_features; }
  friend bool operator==(const DenseShape&, const DenseShape&) = default;
};

/// W is (out x in), row-major. y = x W^T + b.
template <typename Real>
struct DenseView {
  DenseShape shape;
  std::span<const Real> weights;
  std::span<const Real> bias;
};

template <typename Real>
struct DenseGrads {
  Matrix<Real> input;
  std::vector<Real> weights;
  std::vector<Real> bias;
};

template <typename Real>
Matrix<Real> dense(const Matrix<Real>& x, const DenseView<Real>& p);

template <typename Real>
DenseGrads<Real> dense_backward(const Matrix<Real>& x, const DenseView<Real>& p,
                                const Matrix<Real>& grad_y);

/// Row-wise softmax with max subtraction.
template <typename Real>
Matrix<Real> softmax(const Matrix<Real>& logits);

template <typename Real>
struct LossAndGrad {
  Real loss = 0;
  Matrix<Real> grad;
};

/// Mean negative log-likelihood over the batch; grad = (softmax - onehot) / N.
template <typename Real>
LossAndGrad<Real> softmax_xent(const Matrix<Real>& logits, std::span<const int> labels);

}  // namespace sma
