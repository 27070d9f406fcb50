#include "sma/adam.hpp"

#include <cmath>

#include "sma/error.hpp"

namespace sma {

template <typename Real>
void adam_step(std::span<Real> params, std::span<const Real> grads, AdamState<Real>& state) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: params, grads and moment buffers differ in size");
  }
  if (!(state.lr > 0) || state.beta1 < 0 || state.beta1 >= 1 || state.beta2 < 0 || state.beta2 >= 1) {
    throw ArgumentError("adam_step: hyperparameters out of range");
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const Real b1 = static_cast<Real>(state.beta1);
  const Real b2 = static_cast<Real>(state.beta2);
  for (std::size_t j = 0; j < params.size(); ++j) {
    const Real g = grads[j];
    state.m[j] = b1 * state.m[j] + (Real(1) - b1) * g;
    state.v[j] = b2 * state.v[j] + (Real(1) - b2) * g * g;
    const double mhat = static_cast<double>(state.m[j]) / c1;
    const double vhat = static_cast<double>(state.v[j]) / c2;
    params[j] -= static_cast<Real>(state.lr * mhat / (std::sqrt(vhat) + state.eps));
  }
}

template void adam_step(std::span<float>, std::span<const float>, AdamState<float>&);
template void adam_step(std::span<double>, std::span<const double>, AdamState<double>&);

}  // namespace sma
