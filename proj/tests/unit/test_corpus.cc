#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "support/testkit.h"
#include "tev/bio.h"
#include "tev/corpus.h"
#include "tev/errors.h"

using namespace tev;
namespace fs = std::filesystem;

namespace {

using Tokens = std::vector<std::string>;

Tweet make(std::string id, Tokens tokens, ClassLabel label = ClassLabel::kNonTraffic,
           std::vector<SlotSpan> spans = {}) {
  Tweet t;
  t.id = std::move(id);
  for (const auto &tok : tokens) t.raw_text += (t.raw_text.empty() ? "" : " ") + tok;
  t.tokens = std::move(tokens);
  t.label = label;
  t.spans = std::move(spans);
  return t;
}

Corpus numbered(int n) {
  Corpus c;
  c.name = "n";
  for (int i = 0; i < n; ++i) c.tweets.push_back(make("t" + std::to_string(i), {"w"}));
  return c;
}

std::set<std::string> ids(const Corpus &c) {
  std::set<std::string> out;
  for (const Tweet &t : c.tweets) out.insert(t.id);
  return out;
}

fs::path temp_dir(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("tev_corpus_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("normalize_tweet examples") {
  CHECK(normalize_tweet("File op E40 https://t.co/x") == Tokens{"file", "op", "e40"});
  CHECK(normalize_tweet("Ongeval, rijstrook dicht") ==
        Tokens{"ongeval", ",", "rijstrook", "dicht"});
  CHECK_THROWS_AS(normalize_tweet("https://t.co/abc"), DegenerateTweet);
  CHECK_THROWS_AS(normalize_tweet("   "), DegenerateTweet);
}

TEST_CASE("normalize_tweet removes www links and lowercases accented capitals") {
  CHECK(normalize_tweet("Zie www.verkeer.be/info NU!") == Tokens{"zie", "nu", "!"});
  CHECK(normalize_tweet("ÉVÉNEMENT à Liège") == Tokens{"événement", "à", "liège"});
  CHECK(normalize_tweet("HTTP://EXAMPLE.COM/A b") == Tokens{"b"});
  CHECK(normalize_tweet("#file @wegen") == Tokens{"#", "file", "@", "wegen"});
}

TEST_CASE("property: normalization is idempotent on generated tweets") {
  GeneratorConfig g;
  g.size = 300;
  const Corpus c = generate_synthetic(g, 5);
  for (const Tweet &t : c.tweets) {
    CHECK(normalize_tweet(t.raw_text) == t.tokens);
    std::string joined;
    for (const auto &tok : t.tokens) joined += tok + " ";
    CHECK(normalize_tweet(joined) == t.tokens);
  }
}

TEST_CASE("keyword_filter examples") {
  Corpus c;
  c.tweets = {make("a", {"file", "op", "e40"}), make("b", {"mooi", "weer"}),
              make("c", {"nieuw", "profiel"})};
  const Corpus hit = keyword_filter(c, {"file"});
  REQUIRE(hit.size() == 1);
  CHECK(hit.tweets[0].id == "a");
  CHECK(keyword_filter(c, {"sneeuw"}).size() == 0);
  // "file" is not a substring match for "profiel" or anything else.
  CHECK(ids(keyword_filter(c, {"file"})).count("c") == 0);
}

TEST_CASE("keyword_filter is case-insensitive on tokens and order-preserving") {
  Corpus c;
  c.tweets = {make("x", {"FILE"}), make("y", {"weer"}), make("z", {"file"})};
  const Corpus hit = keyword_filter(c, {"file"});
  REQUIRE(hit.size() == 2);
  CHECK(hit.tweets[0].id == "x");
  CHECK(hit.tweets[1].id == "z");
}

TEST_CASE("property: keyword_filter is a monotone subset") {
  GeneratorConfig g;
  g.size = 200;
  const Corpus c = generate_synthetic(g, 9);
  const std::vector<std::string> pool(default_traffic_keywords().begin(),
                                      default_traffic_keywords().end());
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::set<std::string> small, large;
    for (const auto &k : pool) {
      if (rng.bernoulli(0.2)) small.insert(k);
    }
    large = small;
    for (const auto &k : pool) {
      if (rng.bernoulli(0.3)) large.insert(k);
    }
    const auto a = ids(keyword_filter(c, small));
    const auto b = ids(keyword_filter(c, large));
    const auto all = ids(c);
    CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
    CHECK(std::includes(all.begin(), all.end(), b.begin(), b.end()));
  }
}

TEST_CASE("split_corpus sizes") {
  auto sizes = [](const CorpusSplit &s) {
    return std::vector<size_t>{s.train.size(), s.dev.size(), s.test.size()};
  };
  CHECK(sizes(split_corpus(numbered(100), 7)) == std::vector<size_t>{60, 20, 20});
  CHECK(sizes(split_corpus(numbered(10), 7)) == std::vector<size_t>{6, 2, 2});
  CHECK(sizes(split_corpus(numbered(5), 7)) == std::vector<size_t>{3, 1, 1});
  CHECK(sizes(split_corpus(numbered(9), 7)) == std::vector<size_t>{7, 1, 1});
  CHECK_THROWS_AS(split_corpus(numbered(4), 7), DataError);
}

TEST_CASE("split_corpus is deterministic, disjoint and covering") {
  const Corpus c = numbered(57);
  const CorpusSplit a = split_corpus(c, 7);
  const CorpusSplit b = split_corpus(c, 7);
  CHECK(a.train == b.train);
  CHECK(a.dev == b.dev);
  CHECK(a.test == b.test);
  std::set<std::string> all;
  for (const Corpus *part : {&a.train, &a.dev, &a.test}) {
    for (const Tweet &t : part->tweets) CHECK(all.insert(t.id).second);
  }
  CHECK(all == ids(c));
  CHECK(split_corpus(c, 8).train != a.train);
}

TEST_CASE("generate_synthetic basics") {
  GeneratorConfig g;
  g.size = 1000;
  g.traffic_fraction = 0.5;
  const Corpus c = generate_synthetic(g, 1);
  CHECK(c.size() == 1000);
  CHECK(c.provenance == Provenance::kSynthetic);
  const CorpusStats stats = corpus_stats(c);
  CHECK(stats.count(ClassLabel::kTraffic) > 450);
  CHECK(stats.count(ClassLabel::kTraffic) < 550);
  CHECK_NOTHROW(validate_corpus(c));
  for (const Tweet &t : c.tweets) {
    if (t.label == ClassLabel::kNonTraffic) CHECK(t.spans.empty());
    if (t.label == ClassLabel::kTraffic) CHECK_FALSE(t.spans.empty());
  }
}

TEST_CASE("generate_synthetic is deterministic") {
  GeneratorConfig g;
  g.size = 300;
  const Corpus a = generate_synthetic(g, 42);
  const Corpus b = generate_synthetic(g, 42);
  CHECK(serialize_corpus(a, CorpusFormat::kJsonl) == serialize_corpus(b, CorpusFormat::kJsonl));
  CHECK(serialize_corpus(a, CorpusFormat::kConll) == serialize_corpus(b, CorpusFormat::kConll));
  CHECK(serialize_corpus(generate_synthetic(g, 43), CorpusFormat::kJsonl) !=
        serialize_corpus(a, CorpusFormat::kJsonl));
}

TEST_CASE("generate_synthetic rejects bad settings") {
  GeneratorConfig g;
  g.traffic_fraction = 1.5;
  CHECK_THROWS_AS(generate_synthetic(g, 1), DataError);
  g.traffic_fraction = 0.5;
  g.location_overlap = -0.1;
  CHECK_THROWS_AS(generate_synthetic(g, 1), DataError);
  g.location_overlap = 0.7;
  g.size = 0;
  CHECK_THROWS_AS(generate_synthetic(g, 1), DataError);
}

TEST_CASE("region location vocabularies overlap by the configured ratio") {
  GeneratorConfig bru, be;
  bru.region = Region::kBru;
  be.region = Region::kBe;
  bru.size = be.size = 1500;
  bru.traffic_fraction = be.traffic_fraction = 1.0;

  // Measured on the generated corpora, not on the configuration.
  auto used = [](const Corpus &c) {
    std::set<std::string> out;
    for (const Tweet &t : c.tweets) {
      for (const SlotSpan &s : t.spans) {
        if (s.type != SlotType::kWhere) continue;
        for (int i = s.start; i < s.end; ++i) out.insert(t.tokens[i]);
      }
    }
    return out;
  };
  const auto a = used(generate_synthetic(bru, 1));
  const auto b = used(generate_synthetic(be, 2));
  std::vector<std::string> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  CHECK(a.size() == 20);
  CHECK(b.size() == 20);
  CHECK(static_cast<double>(both.size()) / static_cast<double>(a.size()) ==
        doctest::Approx(0.7));

  be.location_overlap = 0.0;
  bru.location_overlap = 0.0;
  const auto ra = region_locations(bru);
  const auto rb = region_locations(be);
  for (const auto &loc : ra) CHECK(std::find(rb.begin(), rb.end(), loc) == rb.end());
}

TEST_CASE("corpus_stats") {
  const CorpusStats empty = corpus_stats(Corpus{});
  CHECK(empty.count(ClassLabel::kTraffic) == 0);
  CHECK(empty.count(ClassLabel::kNonTraffic) == 0);
  for (SlotType t : kAllSlotTypes) CHECK(empty.count(t) == 0);
  CHECK(empty.length_histogram.empty());

  GeneratorConfig g;
  const Corpus c = generate_synthetic(g, 1);
  const CorpusStats s = corpus_stats(c);
  int64_t traffic = 0, where = 0;
  for (const Tweet &t : c.tweets) {
    traffic += t.label == ClassLabel::kTraffic;
    for (const SlotSpan &sp : t.spans) where += sp.type == SlotType::kWhere;
  }
  CHECK(s.count(ClassLabel::kTraffic) == traffic);
  CHECK(s.count(SlotType::kWhere) == where);
  CHECK(s.count(ClassLabel::kTraffic) + s.count(ClassLabel::kNonTraffic) ==
        static_cast<int64_t>(c.size()));
  int64_t hist = 0;
  for (const auto &[len, n] : s.length_histogram) hist += n;
  CHECK(hist == static_cast<int64_t>(c.size()));
}

TEST_CASE("save and load round trip in both formats") {
  GeneratorConfig g;
  g.size = 200;
  const Corpus c = generate_synthetic(g, 77);
  const fs::path dir = temp_dir("roundtrip");
  for (CorpusFormat f : {CorpusFormat::kJsonl, CorpusFormat::kConll}) {
    const fs::path p = dir / (std::string("c.") + std::string(format_name(f)));
    save_corpus(c, p, f);
    const Corpus back = load_corpus(p, f);
    CHECK(back.tweets == c.tweets);
    save_corpus(back, dir / "again", f);
    CHECK(load_corpus(dir / "again", f).tweets == back.tweets);
    CHECK(format_for_path(p) == f);
  }
  fs::remove_all(dir);
}

TEST_CASE("CoNLL tags decode to the JSONL spans of the same tweet") {
  GeneratorConfig g;
  g.size = 100;
  const Corpus c = generate_synthetic(g, 78);
  const std::string conll = serialize_corpus(c, CorpusFormat::kConll);
  std::istringstream in(conll);
  std::string line;
  size_t tweet = 0;
  TagSequence tags;
  auto flush = [&] {
    if (tags.empty()) return;
    REQUIRE(tweet < c.size());
    CHECK(decode_tags(tags) == c.tweets[tweet].spans);
    ++tweet;
    tags.clear();
  };
  while (std::getline(in, line)) {
    if (line.empty()) {
      flush();
      continue;
    }
    if (line.rfind("# ", 0) == 0) continue;
    const auto tab = line.find('\t');
    REQUIRE(tab != std::string::npos);
    const auto tag = parse_tag(line.substr(tab + 1));
    REQUIRE(tag.has_value());
    tags.push_back(*tag);
  }
  flush();
  CHECK(tweet == c.size());
}

TEST_CASE("CoNLL tag policy: lenient repairs, strict rejects with a line number") {
  const std::string text =
      "# id=a\n# label=traffic\nfile\tO\nnu\tI-when\n\n";
  const Corpus lenient = parse_corpus(text, CorpusFormat::kConll, TagPolicy::kLenient);
  REQUIRE(lenient.size() == 1);
  CHECK(lenient.tweets[0].spans == std::vector<SlotSpan>{{SlotType::kWhen, 1, 2}});
  try {
    parse_corpus(text, CorpusFormat::kConll, TagPolicy::kStrict);
    FAIL("strict mode accepted a stray I tag");
  } catch (const DataError &e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("malformed records carry line numbers") {
  const std::string good =
      R"({"id":"a","text":"file op e40","label":"traffic","spans":[{"type":"where","start":2,"end":3}]})";
  try {
    parse_corpus(good + "\n{not json\n", CorpusFormat::kJsonl);
    FAIL("malformed JSON accepted");
  } catch (const DataError &e) {
    CHECK(e.line() == 2);
  }
  const std::string overlap =
      R"({"id":"b","text":"file op e40","label":"traffic","spans":[{"type":"where","start":0,"end":2},{"type":"what","start":1,"end":3}]})";
  CHECK_THROWS_AS(parse_corpus(overlap, CorpusFormat::kJsonl), DataError);
  const std::string spans_on_non_traffic =
      R"({"id":"c","text":"mooi weer","label":"non_traffic","spans":[{"type":"when","start":0,"end":1}]})";
  CHECK_THROWS_AS(parse_corpus(spans_on_non_traffic, CorpusFormat::kJsonl), DataError);
  CHECK_THROWS_AS(parse_corpus(good + "\n" + good + "\n", CorpusFormat::kJsonl), DataError);
  CHECK_THROWS_AS(parse_corpus("# id=a\n# label=traffic\nfile\tB-who\n\n", CorpusFormat::kConll),
                  DataError);
}

TEST_CASE("JSONL tokens default to the normalized text") {
  const Corpus c = parse_corpus(R"({"id":"a","text":"File op E40 https://t.co/x","label":"traffic","spans":[]})",
                                CorpusFormat::kJsonl);
  REQUIRE(c.size() == 1);
  CHECK(c.tweets[0].tokens == Tokens{"file", "op", "e40"});
}
