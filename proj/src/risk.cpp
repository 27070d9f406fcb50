#include "sma/risk.hpp"

#include <algorithm>
#include <string>

#include "sma/error.hpp"

namespace sma {

std::string_view to_string(RiskLevel level) {
  switch (level) {
    case RiskLevel::low: return "low";
    case RiskLevel::moderate: return "moderate";
    case RiskLevel::high: return "high";
  }
  return "?";
}

RiskLevel parse_risk_level(std::string_view text) {
  if (text == "low") return RiskLevel::low;
  if (text == "moderate") return RiskLevel::moderate;
  if (text == "high") return RiskLevel::high;
  throw ArgumentError("unknown risk level '" + std::string(text) + "'");
}

RiskMatrix RiskMatrix::defaults() {
  RiskMatrix m;
  for (int i = 0; i < 3; ++i) {
    for (int b = 0; b < 3; ++b) m.table[i][b] = static_cast<RiskLevel>(std::max(i, b));
  }
  return m;
}

void RiskMatrix::validate() const {
  if (!(lower > 0 && lower < upper && upper < 1)) {
    throw ValidationError("risk thresholds must satisfy 0 < lower < upper < 1");
  }
  for (int i = 0; i < 3; ++i) {
    for (int b = 0; b < 3; ++b) {
      if (i > 0 && table[i][b] < table[i - 1][b]) throw ValidationError("risk table decreases along impact");
      if (b > 0 && table[i][b] < table[i][b - 1]) throw ValidationError("risk table decreases along band");
    }
  }
}

int band(double accuracy, const RiskMatrix& matrix) {
  if (!(accuracy >= 0 && accuracy <= 1)) throw ArgumentError("accuracy must lie in [0, 1]");
  if (accuracy < matrix.lower) return 2;
  if (accuracy < matrix.upper) return 1;
  return 0;
}

RiskLevel assess(RiskLevel impact, double accuracy, const RiskMatrix& matrix) {
  return matrix.table[static_cast<int>(impact)][band(accuracy, matrix)];
}

}  // namespace sma
