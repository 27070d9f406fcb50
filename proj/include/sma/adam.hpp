#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sma {

template <typename Real>
struct AdamState {
  std::vector<Real> m;
  std::vector<Real> v;
  std::uint64_t t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Zeroed moments sized for `n` parameters.
  static AdamState fresh(std::size_t n, double lr = 1e-3) {
    AdamState s;
    s.m.assign(n, Real(0));
    s.v.assign(n, Real(0));
    s.lr = lr;
    return s;
  }

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update applied in place to `params`. The result
/// depends only on (params, grads, state).
template <typename Real>
void adam_step(std::span<Real> params, std::span<const Real> grads, AdamState<Real>& state);

}  // namespace sma
