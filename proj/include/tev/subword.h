#ifndef TEV_SUBWORD_H_
#define TEV_SUBWORD_H_

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tev/corpus.h"

namespace tev {

// Word-initial pieces are stored bare, continuation pieces with a "##"
// prefix. Ids 0..3 are the special tokens.
class SubwordVocab {
 public:
  static constexpr std::string_view kCls = "[CLS]";
  static constexpr std::string_view kSep = "[SEP]";
  static constexpr std::string_view kUnk = "[UNK]";
  static constexpr std::string_view kPad = "[PAD]";
  static constexpr std::string_view kContinuation = "##";
  static constexpr int kClsId = 0;
  static constexpr int kSepId = 1;
  static constexpr int kUnkId = 2;
  static constexpr int kPadId = 3;

  SubwordVocab();
  // `pieces` excludes the specials; duplicates and special names are
  // rejected with DataError.
  explicit SubwordVocab(const std::vector<std::string> &pieces);

  int size() const { return static_cast<int>(pieces_.size()); }
  // -1 when absent.
  int id(std::string_view piece) const;
  bool contains(std::string_view piece) const { return id(piece) >= 0; }
  const std::string &piece(int id) const { return pieces_.at(id); }
  const std::vector<std::string> &pieces() const { return pieces_; }
  // Longest piece length in code points, continuation marker excluded.
  int max_piece_chars() const { return max_piece_chars_; }

  // One piece per line, specials first.
  std::string serialize() const;
  static SubwordVocab parse(std::string_view text);

  bool operator==(const SubwordVocab &other) const {
    return pieces_ == other.pieces_;
  }

 private:
  void add(const std::string &piece);

  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> index_;
  int max_piece_chars_ = 0;
};

// Splits UTF-8 text into code points (invalid bytes stand alone).
std::vector<std::string> utf8_chars(std::string_view text);

// Every character as initial and continuation piece, then substrings ranked
// by corpus frequency (ties: longer first, then lexicographic) until
// max_size entries. Throws DataError if max_size < 2 * |chars| + 4.
SubwordVocab build_vocab(const Corpus &corpus, int max_size);

// Greedy longest match from the left; [UNK] alone if no decomposition.
std::vector<std::string> tokenize(std::string_view token, const SubwordVocab &vocab);

struct Alignment {
  // For each original token, the index of its first subtoken in the
  // flattened sequence (which starts with [CLS]).
  std::vector<int> first_subtoken_index;
};

struct AlignedTokens {
  std::vector<std::string> subtokens;  // [CLS] ... [SEP]
  std::vector<int> ids;
  Alignment alignment;
};

AlignedTokens align(const std::vector<std::string> &tokens,
                    const SubwordVocab &vocab);

}  // namespace tev

#endif  // TEV_SUBWORD_H_
