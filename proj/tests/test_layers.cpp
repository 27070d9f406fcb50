#include <doctest.h>

#include <cmath>
#include <random>

#include "sma/error.hpp"
#include "sma/layers.hpp"
#include "support/oracles.hpp"

using namespace sma;
using sma::test::fd_gradient;
using sma::test::max_rel_err;
using sma::test::weighted_sum;

namespace {

Tensor3<double> seq(std::vector<double> v) {
  Tensor3<double> x(1, 1, v.size());
  std::copy(v.begin(), v.end(), x.data().begin());
  return x;
}

std::vector<double> as_vec(const Tensor3<double>& x) { return {x.data().begin(), x.data().end()}; }

template <typename Span>
void randomize(Span&& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1, 1);
  for (auto& v : s) v = d(rng);
}

}  // namespace

TEST_CASE("causal_conv1d fixed examples") {
  ConvParams<double> sum2{{1, 1, 2, 1}, {1, 1}, {0}};
  CHECK(as_vec(causal_conv1d(seq({1, 2, 3}), sum2)) == std::vector<double>{1, 3, 5});
  CHECK(as_vec(test::naive_conv(seq({1, 2, 3}), sum2)) == std::vector<double>{1, 3, 5});

  ConvParams<double> dilated{{1, 1, 2, 2}, {1, 1}, {0}};
  CHECK(as_vec(causal_conv1d(seq({1, 0, 0, 0}), dilated)) == std::vector<double>{1, 0, 1, 0});
  CHECK(as_vec(test::naive_conv(seq({1, 0, 0, 0}), dilated)) == std::vector<double>{1, 0, 1, 0});

  ConvParams<double> identity{{1, 1, 1, 1}, {1}, {0}};
  CHECK(as_vec(causal_conv1d(seq({4, -2, 7}), identity)) == std::vector<double>{4, -2, 7});

  ConvParams<double> wide{{2, 1, 1, 1}, {1, 1}, {0}};
  CHECK_THROWS_AS(causal_conv1d(seq({1, 2}), wide), ShapeError);
}

TEST_CASE("causal_conv1d matches the direct sum on random shapes") {
  std::mt19937_64 rng(2024);
  auto pick = [&](int lo, int hi) { return static_cast<std::size_t>(std::uniform_int_distribution<int>(lo, hi)(rng)); };
  for (int trial = 0; trial < 100; ++trial) {
    ConvShape s{pick(1, 8), pick(1, 8), pick(1, 7), pick(1, 8)};
    ConvParams<double> p{s, std::vector<double>(s.weight_count()), std::vector<double>(s.out_channels)};
    randomize(p.weights, rng);
    randomize(p.bias, rng);
    Tensor3<double> x(pick(1, 4), s.in_channels, pick(1, 64));
    randomize(x.data(), rng);
    const auto fast = causal_conv1d(x, p), slow = test::naive_conv(x, p);
    double worst = 0;
    for (std::size_t j = 0; j < fast.size(); ++j) worst = std::max(worst, std::abs(fast.data()[j] - slow.data()[j]));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("causal_conv1d backward") {
  std::mt19937_64 rng(7);
  ConvParams<double> p{{3, 2, 4, 3}, std::vector<double>(24), std::vector<double>(2)};
  randomize(p.weights, rng);
  randomize(p.bias, rng);
  Tensor3<double> x(2, 3, 13);
  randomize(x.data(), rng);
  Tensor3<double> r(2, 2, 13);
  randomize(r.data(), rng);

  SUBCASE("finite differences") {
    const auto g = causal_conv1d_backward(x, p, r);
    auto f = [&] { return weighted_sum(causal_conv1d(x, p).data(), r.data()); };
    CHECK(max_rel_err(g.input.data(), fd_gradient(x.data(), f)) < 1e-4);
    CHECK(max_rel_err(g.weights, fd_gradient(p.weights, f)) < 1e-4);
    CHECK(max_rel_err(g.bias, fd_gradient(p.bias, f)) < 1e-4);
  }
  SUBCASE("zero upstream gradient") {
    const auto g = causal_conv1d_backward(x, p, Tensor3<double>(2, 2, 13));
    for (double v : g.input.data()) CHECK(v == 0);
    for (double v : g.weights) CHECK(v == 0);
    for (double v : g.bias) CHECK(v == 0);
  }
  SUBCASE("identity kernel passes the gradient through") {
    ConvParams<double> id{{1, 1, 1, 1}, {1}, {0}};
    const auto in = seq({1, 2, 3, 4});
    const auto gy = seq({0.5, -1, 2, 3});
    CHECK(causal_conv1d_backward(in, id, gy).input == gy);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(causal_conv1d_backward(x, p, Tensor3<double>(2, 2, 12)), ShapeError);
  }
}

TEST_CASE("causal_conv1d is causal") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    ConvParams<double> p{{2, 3, 3, 1 + static_cast<std::size_t>(trial % 4)}, std::vector<double>(18), std::vector<double>(3)};
    randomize(p.weights, rng);
    Tensor3<double> x(1, 2, 20);
    randomize(x.data(), rng);
    const auto base = causal_conv1d(x, p);
    const std::size_t tp = static_cast<std::size_t>(trial) % 20;
    x(0, trial % 2, tp) += 1.0;
    const auto moved = causal_conv1d(x, p);
    for (std::size_t o = 0; o < 3; ++o)
      for (std::size_t t = 0; t < tp; ++t) CHECK(moved(0, o, t) == base(0, o, t));
  }
}

TEST_CASE("relu") {
  const auto x = seq({-1, 0, 2});
  CHECK(as_vec(relu(x)) == std::vector<double>{0, 0, 2});
  CHECK(as_vec(relu_backward(x, seq({5, 5, 5}))) == std::vector<double>{0, 0, 5});

  std::mt19937_64 rng(1);
  Tensor3<double> y(2, 2, 9);
  randomize(y.data(), rng);
  for (auto& v : y.data()) v += v >= 0 ? 0.05 : -0.05;
  Tensor3<double> r(2, 2, 9);
  randomize(r.data(), rng);
  auto f = [&] { return weighted_sum(relu(y).data(), r.data()); };
  CHECK(max_rel_err(relu_backward(y, r).data(), fd_gradient(y.data(), f)) < 1e-6);
}

TEST_CASE("global average pooling") {
  const auto x = seq({1, 2, 3, 4});
  CHECK(global_avg_pool(x)(0, 0) == 2.5);
  Matrix<double> one(1, 1, 1.0);
  CHECK(as_vec(global_avg_pool_backward(one, 4)) == std::vector<double>{0.25, 0.25, 0.25, 0.25});

  std::mt19937_64 rng(4);
  Tensor3<double> y(3, 2, 6);
  randomize(y.data(), rng);
  Matrix<double> r(3, 2);
  randomize(r.data(), rng);
  auto f = [&] { return weighted_sum(global_avg_pool(y).data(), r.data()); };
  CHECK(max_rel_err(global_avg_pool_backward(r, 6).data(), fd_gradient(y.data(), f)) < 1e-4);
}

TEST_CASE("dense") {
  Matrix<double> x(2, 3);
  for (std::size_t j = 0; j < 6; ++j) x.data()[j] = static_cast<double>(j) - 2.5;
  const std::vector<double> eye{1, 0, 0, 0, 1, 0, 0, 0, 1}, zero3(3, 0.0), bias{1, 2, 3};
  CHECK(dense(x, DenseView<double>{{3, 3}, eye, zero3}) == x);
  const auto yb = dense(Matrix<double>(2, 3), DenseView<double>{{3, 3}, eye, bias});
  CHECK(std::vector<double>(yb.row(1).begin(), yb.row(1).end()) == bias);
  CHECK_THROWS_AS(dense(Matrix<double>(2, 4), DenseView<double>{{3, 3}, eye, bias}), ShapeError);

  std::mt19937_64 rng(8);
  std::vector<double> w(12), b(4);
  randomize(w, rng);
  randomize(b, rng);
  Matrix<double> in(5, 3), r(5, 4);
  randomize(in.data(), rng);
  randomize(r.data(), rng);
  const DenseView<double> v{{3, 4}, w, b};
  const auto g = dense_backward(in, v, r);
  auto f = [&] { return weighted_sum(dense(in, DenseView<double>{{3, 4}, w, b}).data(), r.data()); };
  CHECK(max_rel_err(g.input.data(), fd_gradient(in.data(), f)) < 1e-4);
  CHECK(max_rel_err(g.weights, fd_gradient(w, f)) < 1e-4);
  CHECK(max_rel_err(g.bias, fd_gradient(b, f)) < 1e-4);
}

TEST_CASE("softmax cross-entropy") {
  const std::vector<int> zero_label{0};
  Matrix<double> uniform(1, 4, 0.3);
  CHECK(softmax_xent(uniform, zero_label).loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  double previous = 1e9;
  for (double z : {0.0, 1.0, 2.0, 5.0, 10.0, 20.0}) {
    Matrix<double> l(1, 3, 0.0);
    l(0, 0) = z;
    const double loss = softmax_xent(l, zero_label).loss;
    CHECK(loss < previous);
    CHECK(loss >= 0);
    previous = loss;
  }
  CHECK(previous < 1e-8);

  std::mt19937_64 rng(12);
  Matrix<double> z(3, 5);
  randomize(z.data(), rng);
  const std::vector<int> labels{4, 0, 2};
  const auto g = softmax_xent(z, labels);
  CHECK(max_rel_err(g.grad.data(), fd_gradient(z.data(), [&] { return softmax_xent(z, labels).loss; })) < 1e-5);

  const auto p = softmax(z);
  for (std::size_t n = 0; n < 3; ++n) {
    double s = 0;
    for (double v : p.row(n)) s += v;
    CHECK(std::abs(s - 1) < 1e-12);
  }

  Matrix<double> big(1, 2);
  big(0, 0) = 1000;
  big(0, 1) = -1000;
  CHECK(std::isfinite(softmax_xent(big, std::vector<int>{1}).loss));

  CHECK_THROWS_AS(softmax_xent(z, std::vector<int>{5, 0, 0}), ArgumentError);
  CHECK_THROWS_AS(softmax_xent(z, std::vector<int>{0}), ShapeError);
}

TEST_CASE("float instantiation agrees with double") {
  std::mt19937_64 rng(3);
  ConvParams<double> pd{{2, 3, 3, 2}, std::vector<double>(18), std::vector<double>(3)};
  randomize(pd.weights, rng);
  Tensor3<double> xd(2, 2, 15);
  randomize(xd.data(), rng);
  ConvParams<float> pf{pd.shape, {pd.weights.begin(), pd.weights.end()}, {pd.bias.begin(), pd.bias.end()}};
  Tensor3<float> xf(2, 2, 15);
  std::copy(xd.data().begin(), xd.data().end(), xf.data().begin());
  const auto yd = causal_conv1d(xd, pd);
  const auto yf = causal_conv1d(xf, pf);
  for (std::size_t j = 0; j < yd.size(); ++j) CHECK(yf.data()[j] == doctest::Approx(yd.data()[j]).epsilon(1e-5));
}
