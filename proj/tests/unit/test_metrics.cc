#include <doctest.h>

#include "support/schema_check.h"
#include "support/testkit.h"
#include "tev/metrics.h"

using namespace tev;

namespace {

constexpr ClassLabel T = ClassLabel::kTraffic;
constexpr ClassLabel N = ClassLabel::kNonTraffic;

SlotSpan where(int s, int e) { return {SlotType::kWhere, s, e}; }
SlotSpan when(int s, int e) { return {SlotType::kWhen, s, e}; }
SlotSpan what(int s, int e) { return {SlotType::kWhat, s, e}; }

testkit::SchemaCheck schema() {
  return testkit::SchemaCheck::load(std::string(TEV_SOURCE_DIR) +
                                    "/schemas/metric_report.schema.json");
}

}  // namespace

TEST_CASE("classification_f1 examples") {
  const auto perfect = classification_f1({T, N, N, T, N}, {T, N, N, T, N});
  CHECK(perfect.f1 == 1.0);
  const auto half = classification_f1({T, N, T, N}, {T, T, N, N});
  CHECK(half.precision == 0.5);
  CHECK(half.recall == 0.5);
  CHECK(half.f1 == 0.5);
  CHECK(half.true_positives == 1);
  CHECK(half.false_positives == 1);
  CHECK(half.false_negatives == 1);
  const auto none = classification_f1({N, N, N}, {T, N, T});
  CHECK(none.f1 == 0.0);
  CHECK(none.precision == 0.0);
  CHECK_THROWS_AS(classification_f1({T}, {T, N}), std::invalid_argument);
  CHECK_THROWS_AS(classification_f1({}, {}), std::invalid_argument);
}

TEST_CASE("macro F1 averages both classes") {
  // traffic: P=1/2 R=1/2; non_traffic: P=1/2 R=1/2.
  CHECK(classification_macro_f1({T, N, T, N}, {T, T, N, N}) == doctest::Approx(0.5));
  // traffic F1 = 2/3, non_traffic F1 = 0.
  CHECK(classification_macro_f1({T, T}, {T, N}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("span_f1 examples") {
  const auto r = span_f1({{where(2, 4), what(0, 1)}}, {{where(2, 4), when(5, 6)}});
  CHECK(r.precision == 0.5);
  CHECK(r.recall == 0.5);
  CHECK(r.f1 == 0.5);
  CHECK(span_f1({{where(2, 3)}}, {{where(2, 4)}}).true_positives == 0);
  const SpanSets gold = {{where(0, 2), when(3, 4)}, {}, {what(1, 2)}};
  CHECK(span_f1(gold, gold).f1 == 1.0);
  CHECK(span_f1({{}}, {{}}).f1 == 0.0);
  CHECK_THROWS_AS(span_f1({{}}, {{}, {}}), std::invalid_argument);
}

TEST_CASE("each gold span absorbs at most one prediction") {
  const auto r = span_f1({{where(0, 2), where(0, 2)}}, {{where(0, 2)}});
  CHECK(r.true_positives == 1);
  CHECK(r.false_positives == 1);
  CHECK(r.false_negatives == 0);
}

TEST_CASE("per-type breakdown sums to the micro counts") {
  const SpanSets gold = {{where(0, 2), when(3, 4)}, {what(1, 2)}};
  const SpanSets pred = {{where(0, 2), when(2, 4)}, {what(1, 2), when(0, 1)}};
  const auto micro = span_f1(pred, gold);
  const auto by_type = span_f1_by_type(pred, gold);
  int64_t tp = 0, fp = 0, fn = 0;
  for (const auto &s : by_type) {
    tp += s.true_positives;
    fp += s.false_positives;
    fn += s.false_negatives;
  }
  CHECK(tp == micro.true_positives);
  CHECK(fp == micro.false_positives);
  CHECK(fn == micro.false_negatives);
  CHECK(by_type[static_cast<int>(SlotType::kWhen)].f1 == 0.0);
  CHECK(by_type[static_cast<int>(SlotType::kWhere)].f1 == 1.0);
}

TEST_CASE("sentence_accuracy examples") {
  CHECK(sentence_accuracy({T, N}, {{where(0, 1)}, {}}, {T, T}, {{where(0, 1)}, {}}) == 0.5);
  CHECK(sentence_accuracy({T}, {{where(0, 1), when(2, 3)}}, {T}, {{where(0, 1)}}) == 0.0);
  CHECK(sentence_accuracy({N}, {{}}, {N}, {{}}) == 1.0);
  CHECK(sentence_accuracy({T}, {{when(2, 3), where(0, 1)}}, {T}, {{where(0, 1), when(2, 3)}}) ==
        1.0);
  CHECK_THROWS_AS(sentence_accuracy({T}, {{}, {}}, {T}, {{}}), std::invalid_argument);
}

TEST_CASE("property: metrics agree with brute-force recounts") {
  Rng rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 1 + static_cast<int>(rng.index(20));
    std::vector<ClassLabel> gc, pc;
    SpanSets gs, ps;
    for (int i = 0; i < m; ++i) {
      const int n = 1 + static_cast<int>(rng.index(12));
      gc.push_back(testkit::random_label(rng));
      pc.push_back(rng.bernoulli(0.7) ? gc.back() : testkit::random_label(rng));
      gs.push_back(gc.back() == T ? testkit::random_spans(n, rng) : std::vector<SlotSpan>{});
      ps.push_back(testkit::perturb(gs.back(), n, rng));
    }
    const auto cc = testkit::recount_classes(pc, gc, T);
    CHECK(classification_f1(pc, gc).f1 == doctest::Approx(testkit::f1_of(cc)).epsilon(1e-15));
    const auto sc = testkit::recount_spans(ps, gs);
    const auto s = span_f1(ps, gs);
    CHECK(s.true_positives == sc.tp);
    CHECK(s.false_positives == sc.fp);
    CHECK(s.false_negatives == sc.fn);
    CHECK(s.f1 == doctest::Approx(testkit::f1_of(sc)).epsilon(1e-15));
    const double acc = sentence_accuracy(pc, ps, gc, gs);
    CHECK(acc == doctest::Approx(testkit::recount_sen_acc(pc, ps, gc, gs)).epsilon(1e-15));

    // SenAcc is bounded by class accuracy and by all-slots accuracy.
    double class_ok = 0, slots_ok = 0;
    for (int i = 0; i < m; ++i) {
      class_ok += pc[i] == gc[i];
      slots_ok += testkit::same_span_set(ps[i], gs[i]);
    }
    CHECK(acc <= std::min(class_ok, slots_ok) / m + 1e-15);

    // Shuffling spans inside each sentence changes nothing.
    SpanSets shuffled = ps;
    for (auto &spans : shuffled) rng.shuffle(spans);
    CHECK(span_f1(shuffled, gs).f1 == s.f1);
  }
}

TEST_CASE("report JSON keys, schema and round trip") {
  MetricReport r;
  r.architecture = "joint";
  r.corpus = "dev";
  r.classification = classification_f1({T, N, T}, {T, N, N});
  r.f1c_macro = classification_macro_f1({T, N, T}, {T, N, N});
  r.slots = span_f1({{where(0, 1)}, {}, {}}, {{where(0, 1)}, {}, {}});
  r.slots_by_type = span_f1_by_type({{where(0, 1)}, {}, {}}, {{where(0, 1)}, {}, {}});
  r.sen_acc = 2.0 / 3.0;
  r.support = {3, 1, 2, 1, 1};
  const auto j = r.to_json();
  for (const char *key : {"f1c", "precision_c", "recall_c", "f1s", "precision_s", "recall_s",
                          "sen_acc", "per_type", "support"}) {
    CHECK(j.contains(key));
  }
  CHECK(schema().errors(j).empty());
  CHECK(MetricReport::from_json(nlohmann::json::parse(j.dump())) == r);

  MetricReport classifier;
  classifier.architecture = "cnn_classifier";
  classifier.classification = r.classification;
  const auto jc = classifier.to_json();
  CHECK_FALSE(jc.contains("f1s"));
  CHECK_FALSE(jc.contains("sen_acc"));
  CHECK(schema().errors(jc).empty());
  CHECK(r.table().find("SenAcc") != std::string::npos);
}

TEST_CASE("the schema check rejects bad reports") {
  nlohmann::json j = MetricReport{}.to_json();
  j["architecture"] = "joint";
  CHECK(schema().errors(j).empty());
  j["f1c"] = 1.5;
  CHECK_FALSE(schema().errors(j).empty());
  j.erase("f1c");
  j["mystery"] = 1;
  CHECK_FALSE(schema().errors(j).empty());
  j.erase("mystery");
  j.erase("support");
  CHECK_FALSE(schema().errors(j).empty());
}
