#include "sma/metrics.hpp"

#include <numeric>
#include <string>

#include "sma/error.hpp"

namespace sma {

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t c = 0; c < c_; ++c) t += (*this)(c, c);
  return t;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> pred, std::size_t classes) {
  if (truth.size() != pred.size()) throw ArgumentError("confusion: length mismatch");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || pred[i] < 0 || static_cast<std::size_t>(truth[i]) >= classes ||
        static_cast<std::size_t>(pred[i]) >= classes) {
      throw ArgumentError("confusion: class index out of range at position " + std::to_string(i));
    }
    cm(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(pred[i]))++;
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  const auto n = cm.total();
  if (n == 0) throw ArgumentError("accuracy: empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(n);
}

namespace {
double ratio(double num, double den) { return den == 0 ? 0.0 : num / den; }
}  // namespace

ClassScores precision_recall_f1(const ConfusionMatrix& cm, std::size_t cls) {
  if (cls >= cm.classes()) throw ArgumentError("precision_recall_f1: class out of range");
  std::uint64_t col = 0, row = 0;
  for (std::size_t j = 0; j < cm.classes(); ++j) {
    col += cm(j, cls);
    row += cm(cls, j);
  }
  const auto tp = static_cast<double>(cm(cls, cls));
  ClassScores s;
  s.precision = ratio(tp, static_cast<double>(col));
  s.recall = ratio(tp, static_cast<double>(row));
  s.f1 = ratio(2 * s.precision * s.recall, s.precision + s.recall);
  return s;
}

double macro_f1(const ConfusionMatrix& cm) {
  if (cm.classes() == 0) return 0;
  double sum = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) sum += precision_recall_f1(cm, c).f1;
  return sum / static_cast<double>(cm.classes());
}

}  // namespace sma
