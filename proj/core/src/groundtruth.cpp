#include "tsattr/groundtruth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsattr/errors.hpp"

namespace tsattr {

PRCurve pr_curve(std::span<const double> scores, std::span<const std::uint8_t> mask) {
  if (scores.size() != mask.size()) throw InvalidInput("pr_curve: scores and mask differ in length");
  std::size_t positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw InvalidInput("pr_curve: non-finite score");
    if (mask[i] > 1) throw InvalidInput("pr_curve: mask must be binary");
    positives += mask[i];
  }
  if (positives == 0 || positives == mask.size()) {
    throw InvalidInput("pr_curve: mask must contain both positives and negatives");
  }

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  PRCurve curve;
  const double p = static_cast<double>(positives);
  curve.prevalence = p / static_cast<double>(scores.size());
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < idx.size();) {
    const double t = scores[idx[k]];
    // Admit the whole tie group at once.
    while (k < idx.size() && scores[idx[k]] == t) {
      if (mask[idx[k]]) {
        ++tp;
      } else {
        ++fp;
      }
      ++k;
    }
    const double tpd = static_cast<double>(tp);
    curve.points.push_back({t, tpd / static_cast<double>(tp + fp), tpd / p});
  }
  return curve;
}

double auc_pr(const PRCurve& curve, RecallAnchor anchor) {
  if (curve.points.empty()) throw InvalidInput("auc_pr: empty curve");
  std::vector<std::pair<double, double>> pts;  // (recall, precision)
  pts.reserve(curve.points.size() + 1);
  if (anchor == RecallAnchor::FirstPrecision) pts.emplace_back(0.0, curve.points.front().precision);
  for (const auto& pt : curve.points) {
    if (!pts.empty() && pts.back().first == pt.recall) continue;
    pts.emplace_back(pt.recall, pt.precision);
  }
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    area += (pts[i].first - pts[i - 1].first) * (pts[i].second + pts[i - 1].second) / 2.0;
  }
  return area;
}

double normalize_auc(double auc, double prevalence) {
  if (!(prevalence > 0.0 && prevalence < 1.0)) throw InvalidInput("normalize_auc: prevalence must be in (0, 1)");
  return (auc - prevalence) / (1.0 - prevalence);
}

double normalized_auc_pr(std::span<const double> scores, std::span<const std::uint8_t> mask, RecallAnchor anchor) {
  const auto curve = pr_curve(scores, mask);
  return normalize_auc(auc_pr(curve, anchor), curve.prevalence);
}

}  // namespace tsattr
