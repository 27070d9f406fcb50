#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sma {

/// Dense rank-3 array laid out as (batch, channels, time), time fastest.
template <typename Real>
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t batch, std::size_t channels, std::size_t time, Real fill = Real(0))
      : n_(batch), c_(channels), t_(time), data_(batch * channels * time, fill) {}

  std::size_t batch() const { return n_; }
  std::size_t channels() const { return c_; }
  std::size_t time() const { return t_; }
  std::size_t size() const { return data_.size(); }

  Real& operator()(std::size_t n, std::size_t c, std::size_t t) { return data_[(n * c_ + c) * t_ + t]; }
  Real operator()(std::size_t n, std::size_t c, std::size_t t) const { return data_[(n * c_ + c) * t_ + t]; }

  std::span<Real> row(std::size_t n, std::size_t c) { return {data_.data() + (n * c_ + c) * t_, t_}; }
  std::span<const Real> row(std::size_t n, std::size_t c) const {
    return {data_.data() + (n * c_ + c) * t_, t_};
  }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }

  bool same_shape(const Tensor3& o) const { return n_ == o.n_ && c_ == o.c_ && t_ == o.t_; }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t n_ = 0, c_ = 0, t_ = 0;
  std::vector<Real> data_;
};

/// Row-major matrix, used for (batch x features) activations in the head.
template <typename Real>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, Real fill = Real(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Real& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Real operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<Real> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Real> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<Real> data_;
};

}  // namespace sma
