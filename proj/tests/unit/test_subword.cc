#include <doctest.h>

#include "support/testkit.h"
#include "tev/errors.h"
#include "tev/subword.h"

using namespace tev;

namespace {

using Pieces = std::vector<std::string>;

// Every character of `chars` as an initial and a continuation piece.
Pieces with_chars(const std::string &chars, Pieces extra) {
  for (char c : chars) {
    extra.push_back(std::string(1, c));
    extra.push_back("##" + std::string(1, c));
  }
  return extra;
}

Corpus corpus_of(const std::vector<std::vector<std::string>> &sentences) {
  Corpus c;
  int i = 0;
  for (const auto &s : sentences) {
    Tweet t;
    t.id = "s" + std::to_string(i++);
    t.tokens = s;
    c.tweets.push_back(t);
  }
  return c;
}

std::string strip(const Pieces &pieces) {
  std::string out;
  for (const auto &p : pieces) out += p.rfind("##", 0) == 0 ? p.substr(2) : p;
  return out;
}

}  // namespace

TEST_CASE("specials come first and never collide") {
  const SubwordVocab v(Pieces{"a", "##a"});
  CHECK(v.id("[CLS]") == SubwordVocab::kClsId);
  CHECK(v.id("[SEP]") == SubwordVocab::kSepId);
  CHECK(v.id("[UNK]") == SubwordVocab::kUnkId);
  CHECK(v.id("[PAD]") == SubwordVocab::kPadId);
  CHECK(v.id("a") == 4);
  CHECK(v.id("zz") == -1);
  CHECK_THROWS_AS(SubwordVocab(Pieces{"[UNK]"}), DataError);
  CHECK_THROWS_AS(SubwordVocab(Pieces{"a", "a"}), DataError);
  CHECK_THROWS_AS(SubwordVocab(Pieces{""}), DataError);
}

TEST_CASE("tokenize: greedy longest match") {
  const SubwordVocab v(with_chars("trafic", {"traf", "##fic", "tra"}));
  CHECK(tokenize("traffic", v) == Pieces{"traf", "##fic"});
  CHECK(tokenize("tra", v) == Pieces{"tra"});
  CHECK(tokenize("trax", v) == Pieces{"[UNK]"});
  CHECK(tokenize("cat", v) == Pieces{"c", "##a", "##t"});
}

TEST_CASE("tokenize handles multibyte characters as single units") {
  const SubwordVocab v(Pieces{"é", "##é", "t", "##t"});
  CHECK(tokenize("été", v) == Pieces{"é", "##t", "##é"});
  CHECK(utf8_chars("été") == Pieces{"é", "t", "é"});
}

TEST_CASE("build_vocab ranks frequent substrings and keeps every character") {
  const Corpus c = corpus_of({{"file", "filevorming"}, {"filevorming", "file"}, {"file"}});
  const SubwordVocab v = build_vocab(c, 400);
  CHECK(v.contains("file"));
  CHECK(v.contains("##vorming"));
  for (const std::string ch : {"f", "i", "l", "e", "v", "o", "r", "m", "n", "g"}) {
    CHECK(v.contains(ch));
    CHECK(v.contains("##" + ch));
  }
  CHECK(tokenize("file", v) == Pieces{"file"});
  CHECK(build_vocab(c, 400) == v);
}

TEST_CASE("build_vocab respects max_size and rejects sizes below the character set") {
  const Corpus c = corpus_of({{"abc", "abd"}});
  // 4 distinct characters -> 8 character pieces + 4 specials.
  CHECK_THROWS_AS(build_vocab(c, 11), DataError);
  const SubwordVocab v = build_vocab(c, 12);
  CHECK(v.size() == 12);
  CHECK(build_vocab(c, 15).size() == 15);
}

TEST_CASE("align examples") {
  const SubwordVocab v(with_chars("fileop4jamrc", {"file", "op", "e40", "traf", "##fic", "jam"}));
  const AlignedTokens a = align({"file", "op", "e40"}, v);
  CHECK(a.subtokens == Pieces{"[CLS]", "file", "op", "e40", "[SEP]"});
  CHECK(a.alignment.first_subtoken_index == std::vector<int>{1, 2, 3});
  CHECK(a.ids.size() == a.subtokens.size());
  CHECK(a.ids.front() == SubwordVocab::kClsId);
  CHECK(a.ids.back() == SubwordVocab::kSepId);

  const AlignedTokens b = align({"traffic", "jam"}, v);
  CHECK(b.alignment.first_subtoken_index == std::vector<int>{1, 3});
  const AlignedTokens u = align({"zzz", "op"}, v);
  CHECK(u.subtokens == Pieces{"[CLS]", "[UNK]", "op", "[SEP]"});
  CHECK(u.alignment.first_subtoken_index == std::vector<int>{1, 2});
}

TEST_CASE("property: pieces reassemble the word and alignment is well formed") {
  GeneratorConfig g;
  g.size = 200;
  const Corpus c = generate_synthetic(g, 4);
  const SubwordVocab v = build_vocab(c, 300);
  Rng rng(8);
  for (const Tweet &t : c.tweets) {
    for (const auto &w : t.tokens) {
      const Pieces p = tokenize(w, v);
      REQUIRE(p.front() != "[UNK]");
      CHECK(strip(p) == w);
      CHECK(p.front().rfind("##", 0) != 0);
      for (size_t i = 1; i < p.size(); ++i) CHECK(p[i].rfind("##", 0) == 0);
    }
    const AlignedTokens a = align(t.tokens, v);
    const auto &idx = a.alignment.first_subtoken_index;
    REQUIRE(idx.size() == t.tokens.size());
    CHECK(idx.front() == 1);
    for (size_t i = 1; i < idx.size(); ++i) CHECK(idx[i] > idx[i - 1]);
    CHECK(idx.back() < static_cast<int>(a.subtokens.size()) - 1);
  }
}

TEST_CASE("vocab serialization round trips") {
  const Corpus c = corpus_of({{"file", "op", "de", "e40"}});
  const SubwordVocab v = build_vocab(c, 60);
  const std::string text = v.serialize();
  CHECK(text.rfind("[CLS]\n[SEP]\n[UNK]\n[PAD]\n", 0) == 0);
  CHECK(SubwordVocab::parse(text) == v);
}
