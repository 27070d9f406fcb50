#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sma {

struct GradcheckEntry {
  std::string name;
  double max_rel_error = 0;
  double tolerance = 0;
  bool passed = false;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;

  bool passed() const;
  double max_rel_error() const;
};

/// |a - n| / max(|a|, |n|, 1e-6).
double relative_error(double analytic, double numeric);

/// Central differences (h = 1e-5, double) against every hand-written
/// backward pass and against a tiny end-to-end Res-TCN.
GradcheckReport run_gradcheck(std::uint64_t seed = 42);

}  // namespace sma
