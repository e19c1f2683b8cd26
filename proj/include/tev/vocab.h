#ifndef TEV_VOCAB_H_
#define TEV_VOCAB_H_

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tev/corpus.h"

namespace tev {

// Word-level vocabulary. Id 0 is padding, id 1 is the unknown word.
class WordVocab {
 public:
  static constexpr std::string_view kPad = "<pad>";
  static constexpr std::string_view kUnk = "<unk>";
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;

  WordVocab();
  explicit WordVocab(const std::vector<std::string> &words);

  // Words ordered by descending frequency, ties lexicographic.
  static WordVocab build(const Corpus &corpus, int min_count = 1);

  int size() const { return static_cast<int>(words_.size()); }
  // kUnkId for unknown words.
  int id(std::string_view word) const;
  bool contains(std::string_view word) const;
  std::vector<int> ids(const std::vector<std::string> &tokens) const;
  // Words excluding the two specials.
  std::vector<std::string> entries() const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace tev

#endif  // TEV_VOCAB_H_
