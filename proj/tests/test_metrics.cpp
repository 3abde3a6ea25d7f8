#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "sceneseg/metrics.hpp"
#include "sceneseg/rng.hpp"

using namespace sceneseg;

namespace {

struct BruteEval {
  double ap = 0.0;
  double best_f1 = -1.0;
  double best_threshold = 0.0;
};

// Independent recount: for every distinct threshold, classify the whole
// set from scratch. Shares only f1_of so ties in F1 compare bit-for-bit.
BruteEval brute_eval(const std::vector<double>& conf, const std::vector<bool>& labels) {
  std::vector<double> ts = conf;
  std::sort(ts.begin(), ts.end(), std::greater<>());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  long total_pos = 0;
  for (bool b : labels) total_pos += b;

  auto counts_at = [&](double t, long& tp, long& fp) {
    tp = fp = 0;
    for (size_t i = 0; i < conf.size(); ++i) {
      if (conf[i] < t) continue;
      if (labels[i]) ++tp; else ++fp;
    }
  };

  BruteEval out;
  double prev_recall = 0.0;
  for (double t : ts) {
    long tp, fp;
    counts_at(t, tp, fp);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    out.ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  for (auto it = ts.rbegin(); it != ts.rend(); ++it) {  // ascending, ties to larger t
    long tp, fp;
    counts_at(*it, tp, fp);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    const double f1 = detail::f1_of(precision, recall);
    if (f1 >= out.best_f1) {
      out.best_f1 = f1;
      out.best_threshold = *it;
    }
  }
  return out;
}

// Samples realizing a target per-position F1 via tp=1000 and a matched
// miss budget; achieved value lands within ~3e-4 of the target.
void add_position(std::vector<PositionSample>& samples, int pos, double target_f1) {
  const int tp = 1000;
  const int m = static_cast<int>(std::lround(2.0 * tp * (1.0 - target_f1) / target_f1));
  const int fp = m / 2;
  const int fn = m - fp;
  for (int i = 0; i < tp; ++i) samples.push_back({pos, 0.9, true});
  for (int i = 0; i < fp; ++i) samples.push_back({pos, 0.9, false});
  for (int i = 0; i < fn; ++i) samples.push_back({pos, 0.1, true});
  samples.push_back({pos, 0.1, false});
}

}  // namespace

TEST_CASE("ranking metrics match a brute-force recount", "[metrics]") {
  DetRng rng(2024);
  for (int iter = 0; iter < 1000; ++iter) {
    const int n = 1 + static_cast<int>(rng.uniform_int(12));
    std::vector<double> conf;
    std::vector<bool> labels;
    bool any_pos = false;
    for (int i = 0; i < n; ++i) {
      conf.push_back(rng.uniform_int(0, 10) / 10.0);  // heavy ties
      labels.push_back(rng.bernoulli(0.4));
      any_pos = any_pos || labels.back();
    }
    if (!any_pos) labels[rng.uniform_int(labels.size())] = true;

    const BruteEval expect = brute_eval(conf, labels);
    const EvalReport got = evaluate_confidences(conf, labels);
    CHECK(got.ap == Catch::Approx(expect.ap).margin(1e-9));
    CHECK(got.best_f1 == expect.best_f1);  // bit-for-bit
    CHECK(got.best_threshold == expect.best_threshold);
    CHECK(got.ap == average_precision(conf, labels));
    const auto [f1, t] = best_f1(conf, labels);
    CHECK(got.best_f1 == f1);
    CHECK(got.best_threshold == t);
  }
}

TEST_CASE("worked ranking examples", "[metrics]") {
  const std::vector<double> conf = {0.9, 0.8, 0.4, 0.3};
  const std::vector<bool> labels = {true, true, false, true};
  const EvalReport r = evaluate_confidences(conf, labels);
  CHECK(r.best_f1 == 6.0 / 7.0);
  CHECK(r.best_threshold == 0.3);
  CHECK(r.ap == Catch::Approx(1.0 / 3 + 1.0 / 3 + 0.75 / 3).margin(1e-12));
  REQUIRE(r.pr_points.size() == 4);
  CHECK(r.pr_points.front().threshold == 0.3);  // ascending
  CHECK(r.pr_points.front().recall == 1.0);
  CHECK(r.pr_points.back().threshold == 0.9);
  CHECK(r.pr_points.back().tp == 1);
  CHECK(r.pr_points.back().fn == 2);

  CHECK(average_precision({0.9, 0.1}, {false, true}) == 0.5);

  // fully tied confidences collapse to a single operating point
  const auto points = pr_curve({0.7, 0.7, 0.7}, {true, false, true});
  REQUIRE(points.size() == 1);
  CHECK(points[0].recall == 1.0);
  CHECK(points[0].precision == 2.0 / 3.0);
  CHECK(points[0].tp == 2);
  CHECK(points[0].fp == 1);
}

TEST_CASE("perfect rankings score exactly one", "[metrics]") {
  DetRng rng(7191);
  for (int iter = 0; iter < 200; ++iter) {
    const int n = 2 + static_cast<int>(rng.uniform_int(200));
    std::vector<double> conf;
    std::vector<bool> labels;
    for (int i = 0; i < n; ++i) {
      const bool pos = rng.bernoulli(0.3);
      labels.push_back(pos);
      conf.push_back(pos ? rng.uniform(0.5 + 1e-9, 1.0) : rng.uniform(0.0, 0.4));
    }
    if (std::none_of(labels.begin(), labels.end(), [](bool b) { return b; }))
      labels[0] = (conf[0] = 0.9, true);
    CHECK(average_precision(conf, labels) == 1.0);  // no epsilon
    CHECK(best_f1(conf, labels).first == 1.0);
  }
}

TEST_CASE("metrics depend on ranks, not values", "[metrics]") {
  DetRng rng(31337);
  for (int iter = 0; iter < 200; ++iter) {
    const int n = 2 + static_cast<int>(rng.uniform_int(30));
    std::vector<double> conf;
    std::vector<bool> labels;
    for (int i = 0; i < n; ++i) {
      conf.push_back(rng.uniform_int(0, 10) / 10.0);
      labels.push_back(rng.bernoulli(0.5));
    }
    if (std::none_of(labels.begin(), labels.end(), [](bool b) { return b; }))
      labels[0] = true;
    std::vector<double> squeezed;
    for (double c : conf) squeezed.push_back(0.5 * c + 0.25);
    CHECK(average_precision(conf, labels) == average_precision(squeezed, labels));
    CHECK(best_f1(conf, labels).first == best_f1(squeezed, labels).first);
  }
}

TEST_CASE("pr curve shape invariants", "[metrics]") {
  DetRng rng(555);
  std::vector<double> conf;
  std::vector<bool> labels;
  long total_pos = 0;
  for (int i = 0; i < 500; ++i) {
    conf.push_back(rng.uniform_int(0, 20) / 20.0);
    labels.push_back(rng.bernoulli(0.25));
    total_pos += labels.back();
  }
  const auto points = pr_curve(conf, labels);
  for (size_t i = 0; i < points.size(); ++i) {
    const PRPoint& p = points[i];
    CHECK(p.tp + p.fn == total_pos);
    CHECK(p.precision >= 0.0);
    CHECK(p.precision <= 1.0);
    CHECK(p.recall == static_cast<double>(p.tp) / total_pos);
    if (i > 0) {
      CHECK(p.threshold > points[i - 1].threshold);
      CHECK(p.recall <= points[i - 1].recall);  // raising t never finds more
      CHECK(p.tp <= points[i - 1].tp);
    }
  }
}

TEST_CASE("ranking metrics reject bad inputs", "[metrics]") {
  require_error(ErrorKind::LengthMismatch,
                [] { average_precision({0.5, 0.5}, {true}); });
  require_error(ErrorKind::NoPositives,
                [] { average_precision({0.5, 0.5}, {false, false}); });
  require_error(ErrorKind::NoPositives, [] { pr_curve({}, {}); });
  require_error(ErrorKind::LengthMismatch,
                [] { evaluate_confidences({0.1}, {true, false}); });
}

TEST_CASE("per-position f1 basics", "[metrics]") {
  std::vector<PositionSample> samples;
  for (int p = 0; p < 10; ++p) {
    samples.push_back({p, 0.9, true});
    samples.push_back({p, 0.1, false});
  }
  auto [f1, outliers] = per_position_f1(samples, 10);
  CHECK(f1 == std::vector<double>(10, 1.0));
  CHECK(outliers.empty());

  // vacuous position: nothing to find, nothing claimed
  auto [vf1, vout] = per_position_f1({{0, 0.9, true}, {1, 0.1, false}}, 2);
  CHECK(vf1[1] == 1.0);
  CHECK(vout.empty());

  // threshold is inclusive on the confidence side
  auto [tf1, tout] = per_position_f1({{0, 0.5, true}}, 1, 0.5);
  CHECK(tf1[0] == 1.0);

  require_error(ErrorKind::EmptyPosition,
                [] { per_position_f1({{0, 0.9, true}}, 2); });
  require_error(ErrorKind::Config, [] { per_position_f1({{3, 0.9, true}}, 2); });
  require_error(ErrorKind::Config, [] { per_position_f1({}, 0); });
}

TEST_CASE("outlier flagging finds collapsed edge positions", "[metrics]") {
  // profile measured without context margins: both window edges collapse
  const std::vector<double> no_margin = {0.237, 0.418, 0.587, 0.597, 0.650,
                                         0.568, 0.612, 0.516, 0.591, 0.112};
  std::vector<PositionSample> samples;
  for (int p = 0; p < 10; ++p) add_position(samples, p, no_margin[p]);
  auto [f1, outliers] = per_position_f1(samples, 10);
  for (int p = 0; p < 10; ++p)
    CHECK(f1[p] == Catch::Approx(no_margin[p]).margin(5e-4));
  CHECK(outliers == std::vector<int>{0, 9});

  // profile measured with margins: flat, nothing flagged
  const std::vector<double> with_margin = {0.629, 0.612, 0.593, 0.620, 0.628,
                                           0.583, 0.593, 0.607, 0.616, 0.614};
  samples.clear();
  for (int p = 0; p < 10; ++p) add_position(samples, p, with_margin[p]);
  auto [mf1, mout] = per_position_f1(samples, 10);
  CHECK(mout.empty());
}

TEST_CASE("zero spread flags any deviation", "[metrics]") {
  std::vector<PositionSample> samples;
  for (int p = 0; p < 9; ++p) {
    samples.push_back({p, 0.9, true});
    samples.push_back({p, 0.1, false});
  }
  for (int i = 0; i < 999; ++i) samples.push_back({9, 0.9, true});
  samples.push_back({9, 0.1, true});  // one miss in a thousand
  auto [f1, outliers] = per_position_f1(samples, 10);
  CHECK(f1[9] == Catch::Approx(1998.0 / 1999.0).margin(1e-12));
  CHECK(outliers == std::vector<int>{9});
}

TEST_CASE("chapter f1 averages greedy matching over tolerances", "[metrics]") {
  const std::vector<Chapter> gt = {{0, "a"}, {100, "b"}, {200, "c"}};
  CHECK(chapter_f1(gt, gt, {3.0, 5.0, 10.0}) == 1.0);

  std::vector<Chapter> shifted;
  for (const Chapter& c : gt) shifted.push_back({c.start_s + 4.0, c.title});
  CHECK(chapter_f1(shifted, gt, {3.0, 5.0, 10.0}) == 2.0 / 3.0);

  // one-to-one: two predictions cannot both claim one truth
  CHECK(chapter_f1({{10, "x"}, {12, "y"}}, {{11, "t"}}, {2.0}) == 2.0 / 3.0);

  CHECK(chapter_f1({{900, "x"}}, gt, {3.0, 5.0, 10.0}) == 0.0);
  CHECK(chapter_f1({}, gt, {3.0}) == 0.0);

  require_error(ErrorKind::EmptyGroundTruth, [&] { chapter_f1(gt, {}, {3.0}); });
  require_error(ErrorKind::Config, [&] { chapter_f1(gt, gt, {}); });
}

TEST_CASE("tiou scores interval overlap per truth chapter", "[metrics]") {
  const std::vector<Chapter> gt = {{0, "a"}, {40, "b"}, {90, "c"}};
  CHECK(tiou(gt, gt, 120.0) == 1.0);

  CHECK(tiou({{0, "p"}, {5, "q"}}, {{0, "g"}}, 10.0) == 0.5);
  CHECK(tiou({{0, "p"}, {8, "q"}}, {{0, "g"}}, 12.0) == 2.0 / 3.0);

  // asymmetric: the max runs over predictions, the mean over truths
  const double a = tiou({{0, "p"}, {9, "q"}}, {{0, "g"}, {5, "h"}}, 10.0);
  const double b = tiou({{0, "p"}, {5, "q"}}, {{0, "g"}, {9, "h"}}, 10.0);
  CHECK(a == Catch::Approx((5.0 / 9.0 + 0.4) / 2).margin(1e-12));
  CHECK(b == Catch::Approx((5.0 / 9.0 + 0.2) / 2).margin(1e-12));
  CHECK(a != b);

  CHECK(tiou({}, gt, 120.0) == 0.0);
  require_error(ErrorKind::EmptyGroundTruth, [&] { tiou(gt, {}, 120.0); });
}
