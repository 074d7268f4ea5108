#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gifl/dataset.hpp"
#include "gifl/image.hpp"
#include "gifl/model.hpp"

namespace gifl {

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
};

// Positive class = forged.
ConfusionCounts confusion_counts(const BinaryMask& pred, const BinaryMask& gt);

struct LocalizationMetrics {
  double f1 = 0.0;
  double iou = 0.0;
  double acc = 0.0;
};

// Degenerate conventions: with tp=fp=fn=0 (both masks empty) f1 = iou = 1;
// otherwise f1 = 0 when precision+recall = 0.
LocalizationMetrics localization_metrics(const ConfusionCounts& c);

// Exact rank-based ROC AUC with midrank tie handling. nullopt when the ground
// truth has a single class.
std::optional<double> auc(const ProbMask& scores, const BinaryMask& gt);

struct AuthenticityMetrics {
  double p_acc = 0.0;      // fraction of pixels with prob < 0.5
  bool pred_forged = false;  // image_score >= 0.5
};

AuthenticityMetrics authenticity_metrics(const ProbMask& prob, double image_score);

struct ItemMetrics {
  std::string item;
  std::string method;
  LocalizationMetrics loc;
  std::optional<double> auc_value;
};

struct AuthenticItem {
  std::string item;
  double p_acc = 0.0;
  bool pred_forged = false;
};

struct MethodAggregate {
  std::string method;
  int count = 0;
  LocalizationMetrics loc;
  std::optional<double> auc_mean;
  int auc_excluded = 0;
};

struct MetricReport {
  std::vector<ItemMetrics> items;
  std::vector<AuthenticItem> authentic;
  std::vector<MethodAggregate> per_method;  // plus a trailing "overall" row
  double p_acc_mean = 0.0;
  double i_acc = 0.0;
  std::vector<std::pair<std::string, std::string>> failed;  // item, reason
};

// Runs predict on every manifest record, in manifest order; forged records
// get localization metrics, authentic records p-ACC / i-ACC. Missing files
// are recorded as failures and the run continues.
MetricReport evaluate(const DatasetManifest& manifest, const Model& model, int image_size);

// CSV layout documented in the README; 4-decimal fixed point throughout.
std::string report_to_csv(const MetricReport& report);
void write_report(const MetricReport& report, const std::string& path);

}  // namespace gifl
