#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tsattr {

struct PRPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct PRCurve {
  std::vector<PRPoint> points;  // thresholds strictly descending
  double prevalence = 0.0;      // P / N
};

// Where the curve starts at recall 0.
enum class RecallAnchor {
  FirstPrecision,  // (0, precision of the first threshold)
  None,            // integrate from the first observed recall only
};

// One point per unique score, thresholds in descending order. Every index
// with r_i >= t is predicted positive at threshold t.
PRCurve pr_curve(std::span<const double> scores, std::span<const std::uint8_t> mask);

// Trapezoidal area over unique recall values. Each recall keeps the point
// reached first in threshold order.
double auc_pr(const PRCurve& curve, RecallAnchor anchor = RecallAnchor::FirstPrecision);

// (auc - prevalence) / (1 - prevalence); 0 is the random baseline.
double normalize_auc(double auc, double prevalence);

// pr_curve -> auc_pr -> normalize_auc.
double normalized_auc_pr(std::span<const double> scores, std::span<const std::uint8_t> mask,
                         RecallAnchor anchor = RecallAnchor::FirstPrecision);

}  // namespace tsattr
