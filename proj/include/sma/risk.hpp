#pragma once

// Ordinal e-coaching risk: Risk = F(impact, probability), where the
// probability is the stress detector's accuracy. Higher accuracy means a
// lower risk contribution.

#include <array>
#include <string_view>

namespace sma {

enum class RiskLevel : int { low = 0, moderate = 1, high = 2 };

std::string_view to_string(RiskLevel level);
RiskLevel parse_risk_level(std::string_view text);

struct RiskMatrix {
  /// table[impact][band]; band 0 = accurate detector, band 2 = poor.
  std::array<std::array<RiskLevel, 3>, 3> table{};
  /// Accuracy below lower -> band 2; below upper -> band 1; else band 0.
  double lower = 0.7;
  double upper = 0.9;

  /// max(impact, band) with thresholds 0.7 / 0.9.
  static RiskMatrix defaults();

  /// Throws ValidationError unless thresholds are strictly increasing in
  /// (0,1) and the table is nondecreasing in impact and in band.
  void validate() const;
};

int band(double accuracy, const RiskMatrix& matrix);
RiskLevel assess(RiskLevel impact, double accuracy, const RiskMatrix& matrix);

}  // namespace sma
