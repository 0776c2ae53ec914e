#include "topohead/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "topohead/error.hpp"

namespace topohead::clf {

double accuracy(std::span<const std::string> y_true, std::span<const std::string> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorCode::SizeMismatch, "accuracy inputs differ in length");
  }
  if (y_true.empty()) throw Error(ErrorCode::InvalidArgument, "accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i];
  return 100.0 * static_cast<double>(hits) / static_cast<double>(y_true.size());
}

double eer(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::SizeMismatch, "eer inputs differ in length");
  }
  std::size_t positives = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw Error(ErrorCode::InvalidArgument, "eer labels must be 0 or 1");
    positives += l == 1;
  }
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorCode::SingleClass, "eer needs both classes present");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Threshold at the k-th distinct score: everything below it is rejected.
  const double pos = static_cast<double>(positives);
  const double neg = static_cast<double>(negatives);
  std::size_t rejected_pos = 0, rejected_neg = 0;
  double prev_fpr = 1.0, prev_fnr = 0.0;
  std::size_t idx = 0;
  while (true) {
    const double fpr = static_cast<double>(negatives - rejected_neg) / neg;
    const double fnr = static_cast<double>(rejected_pos) / pos;
    const double gap = fnr - fpr;
    if (gap >= 0.0) {
      if (gap == 0.0) return 100.0 * fpr;
      const double prev_gap = prev_fnr - prev_fpr;
      const double alpha = prev_gap / (prev_gap - gap);
      return 100.0 * (prev_fpr + alpha * (fpr - prev_fpr));
    }
    prev_fpr = fpr;
    prev_fnr = fnr;
    if (idx == order.size()) break;
    const double s = scores[order[idx]];
    while (idx < order.size() && scores[order[idx]] == s) {
      (labels[order[idx]] == 1 ? rejected_pos : rejected_neg) += 1;
      ++idx;
    }
  }
  // Unreachable: at +inf every sample is rejected, so fnr = 1 > 0 = fpr.
  return 100.0 * prev_fpr;
}

}  // namespace topohead::clf
