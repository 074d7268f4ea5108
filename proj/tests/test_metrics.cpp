#include <doctest.h>

#include <cmath>

#include "gifl/metrics.hpp"
#include "testutil.hpp"

using namespace gifl;

namespace {

// Pair-counting AUC oracle: every (positive, negative) pair scored directly.
double brute_force_auc(const ProbMask& scores, const BinaryMask& gt) {
  double wins = 0.0;
  std::int64_t pairs = 0;
  const std::int64_t n = scores.pixels();
  for (std::int64_t i = 0; i < n; ++i) {
    if (!gt.data[static_cast<std::size_t>(i)]) continue;
    for (std::int64_t j = 0; j < n; ++j) {
      if (gt.data[static_cast<std::size_t>(j)]) continue;
      ++pairs;
      const double sp = scores.data[static_cast<std::size_t>(i)];
      const double sn = scores.data[static_cast<std::size_t>(j)];
      if (sp > sn) {
        wins += 1.0;
      } else if (sp == sn) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

// Per-pixel counting oracle for the confusion-derived metrics.
LocalizationMetrics brute_force_metrics(const BinaryMask& pred, const BinaryMask& gt) {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::int64_t i = 0; i < pred.pixels(); ++i) {
    const bool p = pred.data[static_cast<std::size_t>(i)] != 0;
    const bool g = gt.data[static_cast<std::size_t>(i)] != 0;
    if (p && g) ++tp;
    if (p && !g) ++fp;
    if (!p && !g) ++tn;
    if (!p && g) ++fn;
  }
  LocalizationMetrics m;
  if (tp + fp + fn == 0) {
    m.f1 = 1.0;
    m.iou = 1.0;
  } else {
    m.f1 = tp > 0 ? 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn) : 0.0;
    m.iou = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
  }
  m.acc = static_cast<double>(tp + tn) / static_cast<double>(pred.pixels());
  return m;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("confusion counts for exact and inverted predictions") {
  Rng rng(41);
  BinaryMask gt(8, 8);
  for (auto& v : gt.data) v = rng.next_bool() ? 1 : 0;

  ConfusionCounts same = confusion_counts(gt, gt);
  CHECK(same.fp == 0);
  CHECK(same.fn == 0);
  CHECK(same.total() == 64);

  BinaryMask inv(8, 8);
  for (std::size_t i = 0; i < inv.data.size(); ++i) inv.data[i] = gt.data[i] ? 0 : 1;
  ConfusionCounts opposite = confusion_counts(inv, gt);
  CHECK(opposite.tp == 0);
  CHECK(opposite.tn == 0);
}

TEST_CASE("hand-enumerated 4x4 case: tp=6 fp=2 fn=2 tn=6") {
  BinaryMask gt(4, 4), pred(4, 4);
  // 8 forged pixels in the ground truth: rows 0-1.
  for (int x = 0; x < 4; ++x) {
    gt.at(0, x) = 1;
    gt.at(1, x) = 1;
  }
  // Prediction overlaps 6 of them and adds 2 false positives in row 2.
  for (int x = 0; x < 4; ++x) pred.at(0, x) = 1;
  pred.at(1, 0) = pred.at(1, 1) = 1;
  pred.at(2, 0) = pred.at(2, 1) = 1;

  ConfusionCounts c = confusion_counts(pred, gt);
  CHECK(c.tp == 6);
  CHECK(c.fp == 2);
  CHECK(c.fn == 2);
  CHECK(c.tn == 6);

  LocalizationMetrics m = localization_metrics(c);
  CHECK(m.f1 == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(m.iou == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(m.acc == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("degenerate conventions: perfect, empty and all-negative cases") {
  LocalizationMetrics perfect = localization_metrics({10, 0, 20, 0});
  CHECK(perfect.f1 == 1.0);
  CHECK(perfect.iou == 1.0);
  CHECK(perfect.acc == 1.0);

  // All-negative prediction on an all-negative ground truth.
  LocalizationMetrics empty = localization_metrics({0, 0, 16, 0});
  CHECK(empty.f1 == 1.0);
  CHECK(empty.iou == 1.0);
  CHECK(empty.acc == 1.0);

  // No true positives but false calls exist.
  LocalizationMetrics zero = localization_metrics({0, 3, 10, 3});
  CHECK(zero.f1 == 0.0);
  CHECK(zero.iou == 0.0);
}

TEST_CASE("swapping pred and gt keeps iou and swaps precision with recall") {
  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    BinaryMask a(8, 8), b(8, 8);
    for (auto& v : a.data) v = rng.next_bool() ? 1 : 0;
    for (auto& v : b.data) v = rng.next_bool() ? 1 : 0;
    ConfusionCounts ab = confusion_counts(a, b);
    ConfusionCounts ba = confusion_counts(b, a);
    CHECK(ab.tp == ba.tp);
    CHECK(ab.fp == ba.fn);
    CHECK(ab.fn == ba.fp);
    CHECK(localization_metrics(ab).iou == localization_metrics(ba).iou);
    CHECK(localization_metrics(ab).f1 == localization_metrics(ba).f1);
  }
}

TEST_CASE("auc closed cases") {
  // Perfect separation.
  ProbMask s(1, 4);
  BinaryMask g(1, 4);
  s.data = {0.9, 0.8, 0.2, 0.1};
  g.data = {1, 1, 0, 0};
  CHECK(*auc(s, g) == 1.0);

  // Constant scores tie everything.
  s.data = {0.4, 0.4, 0.4, 0.4};
  CHECK(*auc(s, g) == 0.5);

  // Worked example: labels (0,0,1,1), scores (0.1,0.4,0.35,0.8) -> 0.75.
  s.data = {0.1, 0.4, 0.35, 0.8};
  g.data = {0, 0, 1, 1};
  CHECK(*auc(s, g) == doctest::Approx(0.75).epsilon(1e-12));

  // Single-class ground truth is undefined.
  g.data = {1, 1, 1, 1};
  CHECK(!auc(s, g).has_value());
}

TEST_CASE("auc equals the brute-force pair oracle on 200 random instances") {
  Rng rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    ProbMask s(16, 16);
    BinaryMask g(16, 16);
    const bool with_ties = trial % 2 == 0;
    bool has_pos = false, has_neg = false;
    for (std::int64_t i = 0; i < 256; ++i) {
      s.data[static_cast<std::size_t>(i)] =
          with_ties ? static_cast<double>(rng.next_below(8)) / 8.0 : rng.next_double();
      const bool forged = rng.next_below(4) == 0;
      g.data[static_cast<std::size_t>(i)] = forged ? 1 : 0;
      has_pos |= forged;
      has_neg |= !forged;
    }
    if (!has_pos || !has_neg) continue;
    CHECK(*auc(s, g) == brute_force_auc(s, g));
  }
}

TEST_CASE("vectorized metrics equal the per-pixel oracle on 200 random instances") {
  Rng rng(44);
  for (int trial = 0; trial < 200; ++trial) {
    BinaryMask pred(16, 16), gt(16, 16);
    for (auto& v : pred.data) v = rng.next_below(3) == 0 ? 1 : 0;
    for (auto& v : gt.data) v = rng.next_below(3) == 0 ? 1 : 0;
    if (trial == 0) {
      pred.data.assign(pred.data.size(), 0);
      gt.data.assign(gt.data.size(), 0);
    }
    LocalizationMetrics got = localization_metrics(confusion_counts(pred, gt));
    LocalizationMetrics want = brute_force_metrics(pred, gt);
    CHECK(got.f1 == want.f1);
    CHECK(got.iou == want.iou);
    CHECK(got.acc == want.acc);
  }
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
  Rng rng(45);
  ProbMask s(8, 8);
  BinaryMask g(8, 8);
  for (std::int64_t i = 0; i < 64; ++i) {
    s.data[static_cast<std::size_t>(i)] = rng.next_double();
    g.data[static_cast<std::size_t>(i)] = rng.next_below(3) == 0 ? 1 : 0;
  }
  g.data[0] = 1;
  g.data[1] = 0;
  const double base = *auc(s, g);
  ProbMask cubed = s;
  for (double& v : cubed.data) v = v * v * v;
  CHECK(*auc(cubed, g) == base);
  ProbMask squashed = s;
  for (double& v : squashed.data) v = 1.0 / (1.0 + std::exp(-(4.0 * v - 2.0)));
  CHECK(*auc(squashed, g) == base);
}

TEST_CASE("authenticity metrics closed cases") {
  ProbMask zero(8, 8);
  AuthenticityMetrics a = authenticity_metrics(zero, 0.0);
  CHECK(a.p_acc == 1.0);
  CHECK(!a.pred_forged);

  ProbMask mixed(10, 10);
  for (int i = 0; i < 100; ++i) mixed.data[static_cast<std::size_t>(i)] = i < 10 ? 0.9 : 0.1;
  AuthenticityMetrics b = authenticity_metrics(mixed, 0.9);
  CHECK(b.p_acc == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(b.pred_forged);

  ProbMask boundary(4, 4);
  for (double& v : boundary.data) v = 0.49;
  AuthenticityMetrics c = authenticity_metrics(boundary, 0.49);
  CHECK(c.p_acc == 1.0);
  CHECK(!c.pred_forged);
}

TEST_CASE("report CSV layout is stable and 4-decimal") {
  MetricReport rep;
  rep.items.push_back({"a.png", "noise_fill", {0.75, 0.6, 0.75}, 0.8125});
  rep.items.push_back({"b.png", "splice", {1.0, 1.0, 1.0}, std::nullopt});
  rep.per_method.push_back({"noise_fill", 1, {0.75, 0.6, 0.75}, 0.8125, 0});
  rep.per_method.push_back({"splice", 1, {1.0, 1.0, 1.0}, std::nullopt, 1});
  rep.per_method.push_back({"overall", 2, {0.875, 0.8, 0.875}, 0.8125, 1});
  rep.authentic.push_back({"c.png", 0.999, false});
  rep.p_acc_mean = 0.999;
  rep.i_acc = 1.0;
  rep.failed.emplace_back("missing.png", "cannot open file: missing.png");

  const std::string csv = report_to_csv(rep);
  CHECK(csv ==
        "item,method,f1,iou,acc,auc\n"
        "a.png,noise_fill,0.7500,0.6000,0.7500,0.8125\n"
        "b.png,splice,1.0000,1.0000,1.0000,undef\n"
        "AGG:noise_fill,n=1,0.7500,0.6000,0.7500,0.8125\n"
        "AGG:splice,n=1,1.0000,1.0000,1.0000,undef,auc_excluded=1\n"
        "AGG:overall,n=2,0.8750,0.8000,0.8750,0.8125,auc_excluded=1\n"
        "authentic\n"
        "item,p_acc,i_pred\n"
        "c.png,0.9990,authentic\n"
        "AGG:authentic,0.9990,1.0000\n"
        "failed\n"
        "missing.png,cannot open file: missing.png\n");
}

TEST_SUITE_END();
