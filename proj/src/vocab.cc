#include "tev/vocab.h"

#include <algorithm>
#include <map>

#include "tev/errors.h"

namespace tev {

WordVocab::WordVocab() : WordVocab(std::vector<std::string>{}) {}

WordVocab::WordVocab(const std::vector<std::string> &words) {
  words_ = {std::string(kPad), std::string(kUnk)};
  for (const auto &w : words) {
    if (w == kPad || w == kUnk) throw DataError("word collides with special " + w);
    words_.push_back(w);
  }
  for (size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], static_cast<int>(i)).second) {
      throw DataError("duplicate vocabulary word " + words_[i]);
    }
  }
}

WordVocab WordVocab::build(const Corpus &corpus, int min_count) {
  std::map<std::string, long> counts;
  for (const Tweet &t : corpus.tweets) {
    for (const auto &tok : t.tokens) ++counts[tok];
  }
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  std::vector<std::string> words;
  for (const auto &[w, c] : ranked) {
    if (c >= min_count && w != kPad && w != kUnk) words.push_back(w);
  }
  return WordVocab(words);
}

int WordVocab::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnkId : it->second;
}

bool WordVocab::contains(std::string_view word) const {
  return index_.count(std::string(word)) > 0;
}

std::vector<int> WordVocab::ids(const std::vector<std::string> &tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto &t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> WordVocab::entries() const {
  return {words_.begin() + 2, words_.end()};
}

}  // namespace tev
