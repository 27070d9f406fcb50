#include "sma/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>

#include "sma/layers.hpp"
#include "sma/model.hpp"

namespace sma {

bool GradcheckReport::passed() const {
  return !entries.empty() && std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

double GradcheckReport::max_rel_error() const {
  double m = 0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

namespace {

constexpr double kStep = 1e-5;
constexpr double kLayerTol = 1e-4;
constexpr double kModelTol = 1e-3;

using Rng = std::mt19937_64;

void fill(std::span<double> v, Rng& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& x : v) x = d(rng);
}

// Compares analytic gradient of `loss` w.r.t. `values` to central differences.
double max_error(std::span<double> values, std::span<const double> analytic, const std::function<double()>& loss) {
  double worst = 0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double saved = values[j];
    values[j] = saved + kStep;
    const double up = loss();
    values[j] = saved - kStep;
    const double down = loss();
    values[j] = saved;
    worst = std::max(worst, relative_error(analytic[j], (up - down) / (2 * kStep)));
  }
  return worst;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

GradcheckEntry entry(std::string name, double err, double tol) { return {std::move(name), err, tol, err < tol}; }

}  // namespace

GradcheckReport run_gradcheck(std::uint64_t seed) {
  Rng rng(seed);
  GradcheckReport report;

  {
    ConvParams<double> p{{3, 4, 3, 2}, std::vector<double>(36), std::vector<double>(4)};
    fill(p.weights, rng);
    fill(p.bias, rng);
    Tensor3<double> x(2, 3, 11);
    fill(x.data(), rng);
    Tensor3<double> r(2, 4, 11);
    fill(r.data(), rng);
    auto loss = [&] { return dot(causal_conv1d(x, p).data(), r.data()); };
    const auto g = causal_conv1d_backward(x, p, r);
    double err = max_error(x.data(), g.input.data(), loss);
    err = std::max(err, max_error(p.weights, g.weights, loss));
    err = std::max(err, max_error(p.bias, g.bias, loss));
    report.entries.push_back(entry("causal_conv1d", err, kLayerTol));
  }
  {
    Tensor3<double> x(2, 3, 7);
    fill(x.data(), rng);
    for (auto& v : x.data()) v += v >= 0 ? 0.05 : -0.05;  // stay clear of the kink
    Tensor3<double> r(2, 3, 7);
    fill(r.data(), rng);
    auto loss = [&] { return dot(relu(x).data(), r.data()); };
    const auto g = relu_backward(x, r);
    report.entries.push_back(entry("relu", max_error(x.data(), g.data(), loss), kLayerTol));
  }
  {
    Tensor3<double> x(3, 2, 5);
    fill(x.data(), rng);
    Matrix<double> r(3, 2);
    fill(r.data(), rng);
    auto loss = [&] { return dot(global_avg_pool(x).data(), r.data()); };
    const auto g = global_avg_pool_backward(r, x.time());
    report.entries.push_back(entry("global_avg_pool", max_error(x.data(), g.data(), loss), kLayerTol));
  }
  {
    DenseShape shape{5, 3};
    std::vector<double> w(15), b(3);
    fill(w, rng);
    fill(b, rng);
    Matrix<double> x(4, 5);
    fill(x.data(), rng);
    Matrix<double> r(4, 3);
    fill(r.data(), rng);
    auto loss = [&] { return dot(dense(x, DenseView<double>{shape, w, b}).data(), r.data()); };
    const auto g = dense_backward(x, DenseView<double>{shape, w, b}, r);
    double err = max_error(x.data(), g.input.data(), loss);
    err = std::max(err, max_error(w, g.weights, loss));
    err = std::max(err, max_error(b, g.bias, loss));
    report.entries.push_back(entry("dense", err, kLayerTol));
  }
  {
    Matrix<double> z(3, 5);
    fill(z.data(), rng, -2, 2);
    const std::vector<int> labels{0, 3, 4};
    auto loss = [&] { return softmax_xent(z, labels).loss; };
    const auto g = softmax_xent(z, labels);
    report.entries.push_back(entry("softmax_xent", max_error(z.data(), g.grad.data(), loss), kLayerTol));
  }
  {
    ResTcnConfig cfg;
    cfg.in_channels = 1;
    cfg.stem = {3, 2, 1};
    cfg.blocks = {{3, 2, 2}};
    cfg.num_classes = 3;
    cfg.seed = seed;
    BasicResTcn<double> model(cfg);
    for (auto& v : model.parameters()) v += std::uniform_real_distribution<double>(-0.1, 0.1)(rng);
    Tensor3<double> x(4, 1, 16);
    fill(x.data(), rng);
    const std::vector<int> labels{0, 1, 2, 1};
    std::vector<double> grad(model.parameter_count()), scratch(model.parameter_count());
    model.loss_and_gradient(x, labels, grad);
    auto loss = [&] { return model.loss_and_gradient(x, labels, scratch); };
    report.entries.push_back(entry("res_tcn_end_to_end", max_error(model.parameters(), grad, loss), kModelTol));
  }
  return report;
}

}  // namespace sma
