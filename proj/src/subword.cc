#include "tev/subword.h"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "tev/errors.h"

namespace tev {

namespace {

int utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

bool is_special(std::string_view piece) {
  return piece == SubwordVocab::kCls || piece == SubwordVocab::kSep ||
         piece == SubwordVocab::kUnk || piece == SubwordVocab::kPad;
}

int piece_chars(std::string_view piece) {
  if (piece.substr(0, 2) == SubwordVocab::kContinuation) piece.remove_prefix(2);
  return static_cast<int>(utf8_chars(piece).size());
}

// Substrings longer than this are never counted as candidate pieces.
constexpr size_t kMaxCandidateChars = 20;

}  // namespace

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    size_t len = utf8_length(static_cast<unsigned char>(text[i]));
    if (i + len > text.size()) len = 1;
    for (size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

SubwordVocab::SubwordVocab() {
  for (auto special : {kCls, kSep, kUnk, kPad}) add(std::string(special));
}

SubwordVocab::SubwordVocab(const std::vector<std::string> &pieces)
    : SubwordVocab() {
  for (const auto &p : pieces) {
    if (p.empty() || p == kContinuation) throw DataError("empty subword piece");
    if (is_special(p)) throw DataError("piece collides with special token " + p);
    if (contains(p)) throw DataError("duplicate subword piece " + p);
    add(p);
  }
}

void SubwordVocab::add(const std::string &piece) {
  index_.emplace(piece, static_cast<int>(pieces_.size()));
  pieces_.push_back(piece);
  if (!is_special(piece)) {
    max_piece_chars_ = std::max(max_piece_chars_, piece_chars(piece));
  }
}

int SubwordVocab::id(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  return it == index_.end() ? -1 : it->second;
}

std::string SubwordVocab::serialize() const {
  std::string out;
  for (const auto &p : pieces_) {
    out += p;
    out += '\n';
  }
  return out;
}

SubwordVocab SubwordVocab::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  const std::vector<std::string_view> specials = {kCls, kSep, kUnk, kPad};
  if (lines.size() < specials.size()) throw DataError("vocabulary too short");
  for (size_t i = 0; i < specials.size(); ++i) {
    if (lines[i] != specials[i]) {
      throw DataError("vocabulary must start with the special tokens",
                      static_cast<long>(i + 1));
    }
  }
  return SubwordVocab(std::vector<std::string>(lines.begin() + 4, lines.end()));
}

SubwordVocab build_vocab(const Corpus &corpus, int max_size) {
  std::map<std::string, long> word_counts;
  for (const Tweet &t : corpus.tweets) {
    for (const auto &tok : t.tokens) ++word_counts[tok];
  }

  std::set<std::string> chars;
  std::map<std::string, long> candidates;
  for (const auto &[word, count] : word_counts) {
    const auto cps = utf8_chars(word);
    for (const auto &c : cps) chars.insert(c);
    for (size_t i = 0; i < cps.size(); ++i) {
      std::string piece = i == 0 ? "" : std::string(SubwordVocab::kContinuation);
      for (size_t j = i; j < cps.size() && j - i < kMaxCandidateChars; ++j) {
        piece += cps[j];
        if (j > i) candidates[piece] += count;
      }
    }
  }

  const size_t required = 2 * chars.size() + 4;
  if (max_size < 0 || static_cast<size_t>(max_size) < required) {
    throw DataError("subword vocabulary size " + std::to_string(max_size) +
                    " is below the required " + std::to_string(required) +
                    " (characters as initial and continuation pieces plus "
                    "specials)");
  }

  std::vector<std::string> pieces;
  for (const auto &c : chars) pieces.push_back(c);
  for (const auto &c : chars) pieces.push_back(std::string(SubwordVocab::kContinuation) + c);

  std::vector<std::pair<std::string, long>> ranked(candidates.begin(), candidates.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto &a, const auto &b) {
    if (a.second != b.second) return a.second > b.second;
    if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
    return a.first < b.first;
  });
  const size_t budget = static_cast<size_t>(max_size) - 4;
  for (const auto &[piece, count] : ranked) {
    if (pieces.size() >= budget) break;
    if (!is_special(piece)) pieces.push_back(piece);
  }
  return SubwordVocab(pieces);
}

std::vector<std::string> tokenize(std::string_view token, const SubwordVocab &vocab) {
  const auto cps = utf8_chars(token);
  std::vector<std::string> out;
  size_t start = 0;
  while (start < cps.size()) {
    const size_t longest =
        std::min(cps.size(), start + static_cast<size_t>(vocab.max_piece_chars()));
    bool found = false;
    for (size_t end = longest; end > start; --end) {
      std::string piece = start == 0 ? "" : std::string(SubwordVocab::kContinuation);
      for (size_t k = start; k < end; ++k) piece += cps[k];
      if (vocab.contains(piece)) {
        out.push_back(std::move(piece));
        start = end;
        found = true;
        break;
      }
    }
    if (!found) return {std::string(SubwordVocab::kUnk)};
  }
  if (out.empty()) return {std::string(SubwordVocab::kUnk)};
  return out;
}

AlignedTokens align(const std::vector<std::string> &tokens,
                    const SubwordVocab &vocab) {
  AlignedTokens out;
  out.subtokens.emplace_back(SubwordVocab::kCls);
  for (const auto &tok : tokens) {
    out.alignment.first_subtoken_index.push_back(
        static_cast<int>(out.subtokens.size()));
    for (auto &piece : tokenize(tok, vocab)) out.subtokens.push_back(std::move(piece));
  }
  out.subtokens.emplace_back(SubwordVocab::kSep);
  out.ids.reserve(out.subtokens.size());
  for (const auto &p : out.subtokens) out.ids.push_back(vocab.id(p));
  return out;
}

}  // namespace tev
