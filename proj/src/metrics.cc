#include "tev/metrics.h"

#include <algorithm>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace tev {

namespace {

void require_parallel(size_t a, size_t b, const char *what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(a) +
                                " predictions vs " + std::to_string(b) + " golds");
  }
}

double ratio(int64_t num, int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

// Size of the multiset intersection of two span lists.
int64_t matched(std::vector<SlotSpan> pred, std::vector<SlotSpan> gold) {
  std::sort(pred.begin(), pred.end());
  std::sort(gold.begin(), gold.end());
  std::vector<SlotSpan> both;
  std::set_intersection(pred.begin(), pred.end(), gold.begin(), gold.end(),
                        std::back_inserter(both));
  return static_cast<int64_t>(both.size());
}

nlohmann::ordered_json prf_json(const PrfScore &s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
          {"tp", s.true_positives},   {"fp", s.false_positives},
          {"fn", s.false_negatives}};
}

PrfScore prf_from_json(const nlohmann::json &j) {
  PrfScore s = PrfScore::from_counts(j.at("tp").get<int64_t>(), j.at("fp").get<int64_t>(),
                                     j.at("fn").get<int64_t>());
  s.precision = j.at("precision").get<double>();
  s.recall = j.at("recall").get<double>();
  s.f1 = j.at("f1").get<double>();
  return s;
}

bool same(const PrfScore &a, const PrfScore &b) {
  return a.precision == b.precision && a.recall == b.recall && a.f1 == b.f1 &&
         a.true_positives == b.true_positives && a.false_positives == b.false_positives &&
         a.false_negatives == b.false_negatives;
}

}  // namespace

PrfScore PrfScore::from_counts(int64_t tp, int64_t fp, int64_t fn) {
  PrfScore s;
  s.true_positives = tp;
  s.false_positives = fp;
  s.false_negatives = fn;
  s.precision = ratio(tp, tp + fp);
  s.recall = ratio(tp, tp + fn);
  s.f1 = s.precision + s.recall > 0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

PrfScore classification_f1(const std::vector<ClassLabel> &preds,
                           const std::vector<ClassLabel> &golds, ClassLabel positive) {
  require_parallel(preds.size(), golds.size(), "classification_f1");
  if (preds.empty()) throw std::invalid_argument("classification_f1: no sentences");
  int64_t tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == positive;
    const bool g = golds[i] == positive;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  return PrfScore::from_counts(tp, fp, fn);
}

double classification_macro_f1(const std::vector<ClassLabel> &preds,
                               const std::vector<ClassLabel> &golds) {
  return 0.5 * (classification_f1(preds, golds, ClassLabel::kTraffic).f1 +
                classification_f1(preds, golds, ClassLabel::kNonTraffic).f1);
}

PrfScore span_f1(const SpanSets &pred, const SpanSets &gold) {
  require_parallel(pred.size(), gold.size(), "span_f1");
  int64_t tp = 0, n_pred = 0, n_gold = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    tp += matched(pred[i], gold[i]);
    n_pred += static_cast<int64_t>(pred[i].size());
    n_gold += static_cast<int64_t>(gold[i].size());
  }
  return PrfScore::from_counts(tp, n_pred - tp, n_gold - tp);
}

std::array<PrfScore, kNumSlotTypes> span_f1_by_type(const SpanSets &pred,
                                                    const SpanSets &gold) {
  require_parallel(pred.size(), gold.size(), "span_f1_by_type");
  std::array<PrfScore, kNumSlotTypes> out;
  for (SlotType type : kAllSlotTypes) {
    auto only = [type](const SpanSets &sets) {
      SpanSets filtered(sets.size());
      for (size_t i = 0; i < sets.size(); ++i) {
        for (const SlotSpan &s : sets[i]) {
          if (s.type == type) filtered[i].push_back(s);
        }
      }
      return filtered;
    };
    out[static_cast<int>(type)] = span_f1(only(pred), only(gold));
  }
  return out;
}

double sentence_accuracy(const std::vector<ClassLabel> &pred_classes,
                         const SpanSets &pred_spans,
                         const std::vector<ClassLabel> &gold_classes,
                         const SpanSets &gold_spans) {
  require_parallel(pred_classes.size(), gold_classes.size(), "sentence_accuracy");
  require_parallel(pred_spans.size(), gold_spans.size(), "sentence_accuracy");
  require_parallel(pred_classes.size(), pred_spans.size(), "sentence_accuracy");
  if (pred_classes.empty()) return 0.0;
  int64_t correct = 0;
  for (size_t i = 0; i < pred_classes.size(); ++i) {
    if (pred_classes[i] != gold_classes[i]) continue;
    const std::set<SlotSpan> p(pred_spans[i].begin(), pred_spans[i].end());
    const std::set<SlotSpan> g(gold_spans[i].begin(), gold_spans[i].end());
    correct += p == g;
  }
  return ratio(correct, static_cast<int64_t>(pred_classes.size()));
}

nlohmann::ordered_json MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["architecture"] = architecture;
  j["corpus"] = corpus;
  if (classification) {
    j["f1c"] = classification->f1;
    j["precision_c"] = classification->precision;
    j["recall_c"] = classification->recall;
  }
  if (f1c_macro) j["f1c_macro"] = *f1c_macro;
  if (slots) {
    j["f1s"] = slots->f1;
    j["precision_s"] = slots->precision;
    j["recall_s"] = slots->recall;
  }
  if (slots_by_type) {
    nlohmann::ordered_json per_type;
    for (SlotType t : kAllSlotTypes) {
      per_type[std::string(slot_type_name(t))] = prf_json((*slots_by_type)[static_cast<int>(t)]);
    }
    j["per_type"] = per_type;
  }
  if (sen_acc) j["sen_acc"] = *sen_acc;
  nlohmann::ordered_json counts;
  if (classification) counts["classification"] = prf_json(*classification);
  if (slots) counts["slots"] = prf_json(*slots);
  j["support"] = {{"sentences", support.sentences},
                  {"gold_traffic", support.gold_traffic},
                  {"pred_traffic", support.pred_traffic},
                  {"gold_spans", support.gold_spans},
                  {"pred_spans", support.pred_spans}};
  if (!counts.empty()) j["counts"] = counts;
  return j;
}

MetricReport MetricReport::from_json(const nlohmann::json &j) {
  MetricReport r;
  r.architecture = j.at("architecture").get<std::string>();
  r.corpus = j.value("corpus", std::string());
  if (j.contains("counts") && j["counts"].contains("classification")) {
    r.classification = prf_from_json(j["counts"]["classification"]);
  }
  if (j.contains("f1c_macro")) r.f1c_macro = j["f1c_macro"].get<double>();
  if (j.contains("counts") && j["counts"].contains("slots")) {
    r.slots = prf_from_json(j["counts"]["slots"]);
  }
  if (j.contains("per_type")) {
    std::array<PrfScore, kNumSlotTypes> by_type;
    for (SlotType t : kAllSlotTypes) {
      by_type[static_cast<int>(t)] = prf_from_json(j["per_type"].at(std::string(slot_type_name(t))));
    }
    r.slots_by_type = by_type;
  }
  if (j.contains("sen_acc")) r.sen_acc = j["sen_acc"].get<double>();
  const auto &s = j.at("support");
  r.support = {s.at("sentences").get<int64_t>(), s.at("gold_traffic").get<int64_t>(),
               s.at("pred_traffic").get<int64_t>(), s.at("gold_spans").get<int64_t>(),
               s.at("pred_spans").get<int64_t>()};
  return r;
}

std::string MetricReport::table() const {
  auto cell = [](const std::optional<double> &v) {
    if (!v) return std::string("      -");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%7.2f", 100.0 * *v);
    return std::string(buf);
  };
  std::optional<double> f1c, f1s;
  if (classification) f1c = classification->f1;
  if (slots) f1s = slots->f1;
  char head[160];
  std::snprintf(head, sizeof(head), "%-18s %-24s %7s %7s %7s\n", "Model", "Corpus", "F1c",
                "F1s", "SenAcc");
  char row[160];
  std::snprintf(row, sizeof(row), "%-18s %-24s %s %s %s\n", architecture.c_str(),
                corpus.c_str(), cell(f1c).c_str(), cell(f1s).c_str(), cell(sen_acc).c_str());
  std::string out = std::string(head) + row;
  if (slots_by_type) {
    for (SlotType t : kAllSlotTypes) {
      const PrfScore &s = (*slots_by_type)[static_cast<int>(t)];
      char line[128];
      std::snprintf(line, sizeof(line), "  %-12s P %6.2f  R %6.2f  F1 %6.2f  (gold %lld)\n",
                    std::string(slot_type_name(t)).c_str(), 100 * s.precision,
                    100 * s.recall, 100 * s.f1,
                    static_cast<long long>(s.true_positives + s.false_negatives));
      out += line;
    }
  }
  return out;
}

bool MetricReport::operator==(const MetricReport &o) const {
  auto same_opt = [](const std::optional<PrfScore> &a, const std::optional<PrfScore> &b) {
    return a.has_value() == b.has_value() && (!a || same(*a, *b));
  };
  if (architecture != o.architecture || corpus != o.corpus || f1c_macro != o.f1c_macro ||
      sen_acc != o.sen_acc || !(support == o.support) ||
      !same_opt(classification, o.classification) || !same_opt(slots, o.slots) ||
      slots_by_type.has_value() != o.slots_by_type.has_value()) {
    return false;
  }
  if (slots_by_type) {
    for (int i = 0; i < kNumSlotTypes; ++i) {
      if (!same((*slots_by_type)[i], (*o.slots_by_type)[i])) return false;
    }
  }
  return true;
}

}  // namespace tev
