#include "gifl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "gifl/error.hpp"

namespace gifl {

ConfusionCounts confusion_counts(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw_shape("confusion_counts: dims differ");
  }
  ConfusionCounts c;
  const std::int64_t n = pred.pixels();
  std::int64_t tp = 0, fp = 0, fn = 0;
#pragma omp parallel for schedule(static) reduction(+ : tp, fp, fn)
  for (std::int64_t i = 0; i < n; ++i) {
    const bool p = pred.data[static_cast<std::size_t>(i)] != 0;
    const bool g = gt.data[static_cast<std::size_t>(i)] != 0;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  c.tp = tp;
  c.fp = fp;
  c.fn = fn;
  c.tn = n - tp - fp - fn;
  return c;
}

LocalizationMetrics localization_metrics(const ConfusionCounts& c) {
  LocalizationMetrics m;
  const std::int64_t denom = 2 * c.tp + c.fp + c.fn;
  if (c.tp + c.fp + c.fn == 0) {
    // Both masks empty.
    m.f1 = 1.0;
    m.iou = 1.0;
  } else {
    m.f1 = denom > 0 && c.tp > 0 ? 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom) : 0.0;
    m.iou = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp + c.fn);
  }
  m.acc = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  return m;
}

std::optional<double> auc(const ProbMask& scores, const BinaryMask& gt) {
  if (scores.height != gt.height || scores.width != gt.width) {
    throw_shape("auc: dims differ");
  }
  const std::int64_t n = scores.pixels();
  std::int64_t npos = 0;
  for (std::int64_t i = 0; i < n; ++i) npos += gt.data[static_cast<std::size_t>(i)] != 0;
  const std::int64_t nneg = n - npos;
  if (npos == 0 || nneg == 0) return std::nullopt;

  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    return scores.data[static_cast<std::size_t>(a)] < scores.data[static_cast<std::size_t>(b)];
  });

  // Midranks over ties, summed for the positive class.
  double rank_sum_pos = 0.0;
  std::int64_t i = 0;
  while (i < n) {
    std::int64_t j = i;
    const double v = scores.data[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    while (j < n && scores.data[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] == v) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
    for (std::int64_t k = i; k < j; ++k) {
      if (gt.data[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] != 0) {
        rank_sum_pos += midrank;
      }
    }
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(npos) * static_cast<double>(npos + 1);
  return u / (static_cast<double>(npos) * static_cast<double>(nneg));
}

AuthenticityMetrics authenticity_metrics(const ProbMask& prob, double image_score) {
  AuthenticityMetrics m;
  std::int64_t clean = 0;
  for (double v : prob.data) clean += v < 0.5;
  m.p_acc = prob.data.empty() ? 1.0 : static_cast<double>(clean) / static_cast<double>(prob.data.size());
  m.pred_forged = image_score >= 0.5;
  return m;
}

MetricReport evaluate(const DatasetManifest& manifest, const Model& model, int image_size) {
  MetricReport rep;
  for (const auto& rec : manifest) {
    try {
      Image img = load_image(rec.image_path, image_size);
      Prediction pred = predict(img, model);
      if (rec.forged) {
        BinaryMask gt = rec.mask_path.empty() ? BinaryMask(image_size, image_size)
                                              : load_mask(rec.mask_path, image_size);
        ItemMetrics it;
        it.item = rec.image_path;
        it.method = rec.method_tag;
        it.loc = localization_metrics(confusion_counts(pred.mask, gt));
        it.auc_value = auc(pred.prob, gt);
        rep.items.push_back(std::move(it));
      } else {
        const AuthenticityMetrics am = authenticity_metrics(pred.prob, pred.image_score);
        rep.authentic.push_back({rec.image_path, am.p_acc, am.pred_forged});
      }
    } catch (const Error& e) {
      rep.failed.emplace_back(rec.image_path, e.what());
    }
  }

  // Aggregates in first-appearance order, then an overall row.
  std::vector<std::string> methods;
  for (const auto& it : rep.items) {
    if (std::find(methods.begin(), methods.end(), it.method) == methods.end()) {
      methods.push_back(it.method);
    }
  }
  methods.push_back("overall");
  for (const auto& m : methods) {
    MethodAggregate agg;
    agg.method = m;
    double auc_sum = 0.0;
    int auc_n = 0;
    for (const auto& it : rep.items) {
      if (m != "overall" && it.method != m) continue;
      ++agg.count;
      agg.loc.f1 += it.loc.f1;
      agg.loc.iou += it.loc.iou;
      agg.loc.acc += it.loc.acc;
      if (it.auc_value) {
        auc_sum += *it.auc_value;
        ++auc_n;
      } else {
        ++agg.auc_excluded;
      }
    }
    if (agg.count == 0) continue;
    agg.loc.f1 /= agg.count;
    agg.loc.iou /= agg.count;
    agg.loc.acc /= agg.count;
    if (auc_n > 0) agg.auc_mean = auc_sum / auc_n;
    rep.per_method.push_back(std::move(agg));
  }

  if (!rep.authentic.empty()) {
    double p_sum = 0.0;
    std::int64_t n_auth_ok = 0;
    for (const auto& a : rep.authentic) {
      p_sum += a.p_acc;
      n_auth_ok += a.pred_forged ? 0 : 1;
    }
    rep.p_acc_mean = p_sum / static_cast<double>(rep.authentic.size());
    rep.i_acc = static_cast<double>(n_auth_ok) / static_cast<double>(rep.authentic.size());
  }
  return rep;
}

namespace {

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt_auc(const std::optional<double>& v) { return v ? fmt4(*v) : "undef"; }

}  // namespace

std::string report_to_csv(const MetricReport& report) {
  std::string out = "item,method,f1,iou,acc,auc\n";
  for (const auto& it : report.items) {
    out += it.item + "," + it.method + "," + fmt4(it.loc.f1) + "," + fmt4(it.loc.iou) + "," +
           fmt4(it.loc.acc) + "," + fmt_auc(it.auc_value) + "\n";
  }
  for (const auto& agg : report.per_method) {
    out += "AGG:" + agg.method + ",n=" + std::to_string(agg.count) + "," + fmt4(agg.loc.f1) + "," +
           fmt4(agg.loc.iou) + "," + fmt4(agg.loc.acc) + "," + fmt_auc(agg.auc_mean);
    if (agg.auc_excluded > 0) out += ",auc_excluded=" + std::to_string(agg.auc_excluded);
    out += "\n";
  }
  if (!report.authentic.empty()) {
    out += "authentic\nitem,p_acc,i_pred\n";
    for (const auto& a : report.authentic) {
      out += a.item + "," + fmt4(a.p_acc) + "," + (a.pred_forged ? "forged" : "authentic") + "\n";
    }
    out += "AGG:authentic," + fmt4(report.p_acc_mean) + "," + fmt4(report.i_acc) + "\n";
  }
  if (!report.failed.empty()) {
    out += "failed\n";
    for (const auto& [item, reason] : report.failed) out += item + "," + reason + "\n";
  }
  return out;
}

void write_report(const MetricReport& report, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_io("cannot write report: " + path);
  f << report_to_csv(report);
}

}  // namespace gifl
