#include "rnmrf/metrics.hpp"

namespace rnmrf {

double image_l1(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw UsageError("image_l1 requires images of equal shape");
  return (a - b).cwiseAbs().sum();
}

double image_l2(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw UsageError("image_l2 requires images of equal shape");
  return (a - b).squaredNorm();
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw UsageError("accuracy requires non-empty label vectors of equal length");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double f1_score(const std::vector<int>& pred, const std::vector<int>& truth, int cls) {
  if (pred.size() != truth.size())
    throw UsageError("f1_score requires label vectors of equal length");
  int tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == cls, t = truth[i] == cls;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * tp / (2.0 * tp + fp + fn);
}

double macro_f1(const std::vector<int>& pred, const std::vector<int>& truth, int num_classes) {
  if (num_classes < 1) throw UsageError("macro_f1 requires at least one class");
  double sum = 0.0;
  for (int c = 0; c < num_classes; ++c) sum += f1_score(pred, truth, c);
  return sum / num_classes;
}

double mse(ConstVecRef pred, ConstVecRef truth) {
  if (pred.size() != truth.size() || pred.size() == 0)
    throw UsageError("mse requires non-empty vectors of equal length");
  return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

}  // namespace rnmrf
