#pragma once

// Segmentation and chaptering evaluation. AP is the non-interpolated
// step sum over descending distinct thresholds; best-F1 is an exhaustive
// sweep with ties broken toward the larger threshold.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sceneseg/errors.hpp"
#include "sceneseg/model.hpp"

namespace sceneseg {

struct PRPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
  double ap = 0.0;
  double best_f1 = 0.0;
  double best_threshold = 0.0;
  std::vector<PRPoint> pr_points;  // ascending threshold
};

namespace detail {

inline double f1_of(double precision, double recall) {
  if (precision + recall <= 0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

// One PRPoint per distinct confidence, descending threshold order.
inline std::vector<PRPoint> pr_points_desc(const std::vector<double>& confidences,
                                           const std::vector<bool>& labels) {
  if (confidences.size() != labels.size())
    fail(ErrorKind::LengthMismatch, "confidences and labels differ in length");
  long total_pos = 0;
  for (bool b : labels) total_pos += b;
  if (total_pos == 0) fail(ErrorKind::NoPositives, "no positive labels");

  std::vector<size_t> order(confidences.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return confidences[a] > confidences[b]; });

  std::vector<PRPoint> points;
  long tp = 0, fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    const double t = confidences[order[i]];
    // absorb the whole tie group: prediction is positive iff conf >= t
    while (i < order.size() && confidences[order[i]] == t) {
      if (labels[order[i]]) ++tp; else ++fp;
      ++i;
    }
    PRPoint p;
    p.threshold = t;
    p.tp = tp;
    p.fp = fp;
    p.fn = total_pos - tp;
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    p.recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    p.f1 = f1_of(p.precision, p.recall);
    points.push_back(p);
  }
  return points;
}

}  // namespace detail

inline std::vector<PRPoint> pr_curve(const std::vector<double>& confidences,
                                     const std::vector<bool>& labels) {
  std::vector<PRPoint> points = detail::pr_points_desc(confidences, labels);
  std::reverse(points.begin(), points.end());
  return points;
}

inline double average_precision(const std::vector<double>& confidences,
                                const std::vector<bool>& labels) {
  double ap = 0.0;
  double prev_recall = 0.0;
  for (const PRPoint& p : detail::pr_points_desc(confidences, labels)) {
    ap += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return ap;
}

// (f1, threshold); ties go to the larger threshold.
inline std::pair<double, double> best_f1(const std::vector<double>& confidences,
                                         const std::vector<bool>& labels) {
  double best = -1.0, best_t = 0.0;
  for (const PRPoint& p : pr_curve(confidences, labels)) {
    if (p.f1 >= best) {
      best = p.f1;
      best_t = p.threshold;
    }
  }
  return {best, best_t};
}

inline EvalReport evaluate_confidences(const std::vector<double>& confidences,
                                       const std::vector<bool>& labels) {
  EvalReport r;
  r.pr_points = pr_curve(confidences, labels);
  r.ap = average_precision(confidences, labels);
  auto [f1, t] = best_f1(confidences, labels);
  r.best_f1 = f1;
  r.best_threshold = t;
  return r;
}

struct PositionSample {
  int position = 0;  // position within the focus window
  double confidence = 0.0;
  bool label = false;
};

// Per-focus-position F1 at a fixed threshold, with outlier flagging.
//
// Outliers use a robust z-score (median / scaled MAD, cutoff 3.0) rather
// than a literal mean/stddev rule: over F values the classical z-score is
// bounded by (F-1)/sqrt(F) < 3 for F = 10, so a mean-based rule can never
// fire there. The robust score preserves the intent — flag positions far
// outside the bulk — and reduces to it for well-behaved data. When MAD is
// 0 (all but a few values identical), any deviation beyond 1e-9 flags.
inline std::pair<std::vector<double>, std::vector<int>> per_position_f1(
    const std::vector<PositionSample>& samples, int num_positions,
    double threshold = 0.5) {
  if (num_positions < 1) fail(ErrorKind::Config, "num_positions must be >= 1");
  std::vector<long> tp(num_positions, 0), fp(num_positions, 0), fn(num_positions, 0);
  std::vector<long> count(num_positions, 0);
  for (const PositionSample& s : samples) {
    if (s.position < 0 || s.position >= num_positions)
      fail(ErrorKind::Config, "sample position out of range");
    ++count[s.position];
    const bool pred = s.confidence >= threshold;
    if (pred && s.label) ++tp[s.position];
    else if (pred && !s.label) ++fp[s.position];
    else if (!pred && s.label) ++fn[s.position];
  }
  std::vector<double> f1(num_positions, 0.0);
  for (int p = 0; p < num_positions; ++p) {
    if (count[p] == 0)
      fail(ErrorKind::EmptyPosition, "no samples at position " + std::to_string(p));
    if (tp[p] + fp[p] + fn[p] == 0) {
      f1[p] = 1.0;  // vacuously perfect: nothing to find, nothing claimed
      continue;
    }
    const double precision = tp[p] + fp[p] > 0
                                 ? static_cast<double>(tp[p]) / (tp[p] + fp[p])
                                 : 0.0;
    const double recall =
        tp[p] + fn[p] > 0 ? static_cast<double>(tp[p]) / (tp[p] + fn[p]) : 0.0;
    f1[p] = detail::f1_of(precision, recall);
  }

  std::vector<double> sorted = f1;
  std::sort(sorted.begin(), sorted.end());
  auto median_of = [](const std::vector<double>& v) {
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const double med = median_of(sorted);
  std::vector<double> dev;
  dev.reserve(f1.size());
  for (double x : f1) dev.push_back(std::fabs(x - med));
  std::sort(dev.begin(), dev.end());
  const double mad = median_of(dev);

  std::vector<int> outliers;
  for (int p = 0; p < num_positions; ++p) {
    const double d = std::fabs(f1[p] - med);
    if (mad > 0 ? d / (1.4826 * mad) > 3.0 : d > 1e-9) outliers.push_back(p);
  }
  return {std::move(f1), std::move(outliers)};
}

// Mean over tolerances of boundary F1 under greedy one-to-one matching
// (closest pairs first, each boundary used once, |diff| <= tolerance).
inline double chapter_f1(const std::vector<Chapter>& pred, const std::vector<Chapter>& gt,
                         const std::vector<double>& tolerances_s) {
  if (gt.empty()) fail(ErrorKind::EmptyGroundTruth, "no ground-truth chapters");
  if (tolerances_s.empty()) fail(ErrorKind::Config, "need at least one tolerance");
  struct Pair {
    double diff;
    size_t pi, gi;
  };
  std::vector<Pair> pairs;
  for (size_t i = 0; i < pred.size(); ++i)
    for (size_t j = 0; j < gt.size(); ++j)
      pairs.push_back({std::fabs(pred[i].start_s - gt[j].start_s), i, j});
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.diff != b.diff) return a.diff < b.diff;
    if (a.pi != b.pi) return a.pi < b.pi;
    return a.gi < b.gi;
  });

  double total = 0.0;
  for (double tol : tolerances_s) {
    std::vector<bool> pused(pred.size(), false), gused(gt.size(), false);
    long matches = 0;
    for (const Pair& p : pairs) {
      if (p.diff > tol) break;
      if (pused[p.pi] || gused[p.gi]) continue;
      pused[p.pi] = gused[p.gi] = true;
      ++matches;
    }
    if (matches == 0 || pred.empty()) {
      total += 0.0;
      continue;
    }
    const double precision = static_cast<double>(matches) / pred.size();
    const double recall = static_cast<double>(matches) / gt.size();
    total += detail::f1_of(precision, recall);
  }
  return total / static_cast<double>(tolerances_s.size());
}

namespace detail {

inline std::vector<std::pair<double, double>> chapter_intervals(
    const std::vector<Chapter>& chapters, double video_end_s) {
  std::vector<std::pair<double, double>> out;
  for (size_t i = 0; i < chapters.size(); ++i) {
    const double end = i + 1 < chapters.size() ? chapters[i + 1].start_s : video_end_s;
    out.emplace_back(chapters[i].start_s, end);
  }
  return out;
}

}  // namespace detail

// Mean over ground-truth chapters of the best temporal IoU against any
// predicted chapter. Intervals run from each start to the next (the last
// closes at video_end_s).
inline double tiou(const std::vector<Chapter>& pred, const std::vector<Chapter>& gt,
                   double video_end_s) {
  if (gt.empty()) fail(ErrorKind::EmptyGroundTruth, "no ground-truth chapters");
  const auto pi = detail::chapter_intervals(pred, video_end_s);
  const auto gi = detail::chapter_intervals(gt, video_end_s);
  double total = 0.0;
  for (const auto& g : gi) {
    double best = 0.0;
    for (const auto& p : pi) {
      const double inter =
          std::max(0.0, std::min(g.second, p.second) - std::max(g.first, p.first));
      const double uni =
          std::max(g.second, p.second) - std::min(g.first, p.first);
      const double iou = uni > 0 ? inter / uni : 0.0;
      if (iou > best) best = iou;
    }
    total += best;
  }
  return total / static_cast<double>(gi.size());
}

}  // namespace sceneseg
