#ifndef TEV_METRICS_H_
#define TEV_METRICS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tev/types.h"

namespace tev {

// Precision, recall and F1 with their raw counts. Zero denominators give 0.
struct PrfScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int64_t true_positives = 0;
  int64_t false_positives = 0;
  int64_t false_negatives = 0;

  static PrfScore from_counts(int64_t tp, int64_t fp, int64_t fn);
};

// Binary P/R/F1 with `positive` as the positive class. Throws
// std::invalid_argument on length mismatch or empty input.
PrfScore classification_f1(const std::vector<ClassLabel> &preds,
                           const std::vector<ClassLabel> &golds,
                           ClassLabel positive = ClassLabel::kTraffic);

// Unweighted mean of the per-class F1 scores.
double classification_macro_f1(const std::vector<ClassLabel> &preds,
                               const std::vector<ClassLabel> &golds);

using SpanSets = std::vector<std::vector<SlotSpan>>;

// Micro-averaged exact-match span F1: type, start and end must all agree,
// and each gold span absorbs at most one prediction.
PrfScore span_f1(const SpanSets &pred, const SpanSets &gold);

// The same computation restricted to one slot type at a time.
std::array<PrfScore, kNumSlotTypes> span_f1_by_type(const SpanSets &pred,
                                                    const SpanSets &gold);

// Fraction of sentences whose class and whole span set are both exactly right.
double sentence_accuracy(const std::vector<ClassLabel> &pred_classes,
                         const SpanSets &pred_spans,
                         const std::vector<ClassLabel> &gold_classes,
                         const SpanSets &gold_spans);

struct MetricSupport {
  int64_t sentences = 0;
  int64_t gold_traffic = 0;
  int64_t pred_traffic = 0;
  int64_t gold_spans = 0;
  int64_t pred_spans = 0;

  bool operator==(const MetricSupport &) const = default;
};

struct MetricReport {
  std::string architecture;
  std::string corpus;
  std::optional<PrfScore> classification;
  std::optional<double> f1c_macro;
  std::optional<PrfScore> slots;
  std::optional<std::array<PrfScore, kNumSlotTypes>> slots_by_type;
  std::optional<double> sen_acc;
  MetricSupport support;

  // Fixed key names: f1c, precision_c, recall_c, f1c_macro, f1s,
  // precision_s, recall_s, per_type, sen_acc, support.
  nlohmann::ordered_json to_json() const;
  static MetricReport from_json(const nlohmann::json &j);
  // Percentages in the layout of a results table row.
  std::string table() const;

  bool operator==(const MetricReport &other) const;
};

}  // namespace tev

#endif  // TEV_METRICS_H_
