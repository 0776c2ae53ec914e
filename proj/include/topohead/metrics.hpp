#pragma once

#include <span>
#include <string>

namespace topohead::clf {

/// Percentage of positions where the labels agree.
double accuracy(std::span<const std::string> y_true, std::span<const std::string> y_pred);

/// Equal error rate in percent. Higher scores mean "positive"; a sample is
/// accepted when score >= threshold. The operating points are swept over
/// every distinct score (plus +inf) and the FPR == FNR crossing is linearly
/// interpolated between its two bracketing points.
double eer(std::span<const double> scores, std::span<const int> labels);

}  // namespace topohead::clf
