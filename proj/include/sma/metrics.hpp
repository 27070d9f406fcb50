#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sma {

/// counts(true, predicted); rows are the true class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0) : c_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const { return c_; }
  std::uint64_t operator()(std::size_t truth, std::size_t pred) const { return counts_[truth * c_ + pred]; }
  std::uint64_t& operator()(std::size_t truth, std::size_t pred) { return counts_[truth * c_ + pred]; }
  std::uint64_t total() const;
  std::uint64_t trace() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t c_;
  std::vector<std::uint64_t> counts_;
};

struct ClassScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> pred, std::size_t classes);

/// trace / total. Throws on an empty matrix.
double accuracy(const ConfusionMatrix& cm);

/// 0/0 is taken as 0 for every ratio.
ClassScores precision_recall_f1(const ConfusionMatrix& cm, std::size_t cls);

/// Unweighted mean of per-class F1 over all classes.
double macro_f1(const ConfusionMatrix& cm);

}  // namespace sma
