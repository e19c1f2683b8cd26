#ifndef TEV_CORPUS_H_
#define TEV_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tev/types.h"

namespace tev {

struct Tweet {
  std::string id;
  std::string raw_text;
  std::vector<std::string> tokens;
  ClassLabel label = ClassLabel::kNonTraffic;
  std::vector<SlotSpan> spans;

  bool operator==(const Tweet &) const = default;
};

enum class Provenance { kLoaded, kSynthetic };

struct Corpus {
  std::string name;
  std::vector<Tweet> tweets;
  Provenance provenance = Provenance::kLoaded;

  size_t size() const { return tweets.size(); }
  bool operator==(const Corpus &) const = default;
};

struct CorpusStats {
  std::array<int64_t, kNumClasses> class_counts{};
  std::array<int64_t, kNumSlotTypes> slot_counts{};
  // token count -> number of tweets with that many tokens
  std::map<int, int64_t> length_histogram;

  int64_t count(ClassLabel label) const {
    return class_counts[static_cast<int>(label)];
  }
  int64_t count(SlotType type) const {
    return slot_counts[static_cast<int>(type)];
  }
};

// Removes URLs, lowercases, splits on whitespace and detaches ASCII
// punctuation into single-character tokens. Throws DegenerateTweet when
// nothing remains.
std::vector<std::string> normalize_tweet(std::string_view raw_text);

// Lowercases ASCII and the Latin-1 letters of UTF-8 text.
std::string lowercase(std::string_view text);

// Verifies the Tweet invariants (non-empty tokens, legal spans,
// non-traffic implies no spans). Throws DataError.
void validate_tweet(const Tweet &tweet);

// Verifies every tweet plus id uniqueness. Throws DataError.
void validate_corpus(const Corpus &corpus);

// Tweets containing at least one keyword as a whole token (case-insensitive),
// in their original order.
Corpus keyword_filter(const Corpus &corpus, const std::set<std::string> &keywords);

// A small illustrative traffic keyword list (Dutch, French, English).
const std::set<std::string> &default_traffic_keywords();

struct CorpusSplit {
  Corpus train;
  Corpus dev;
  Corpus test;
};

// Seeded shuffle, then floor(20%) dev, floor(20%) test, remainder train.
// Throws DataError when the corpus has fewer than 5 tweets.
CorpusSplit split_corpus(const Corpus &corpus, uint64_t seed);

CorpusStats corpus_stats(const Corpus &corpus);

enum class CorpusFormat { kJsonl, kConll };
enum class TagPolicy { kLenient, kStrict };

std::string_view format_name(CorpusFormat format);
CorpusFormat parse_format(std::string_view name);
// Picks a format from the file extension (.conll -> conll, else jsonl).
CorpusFormat format_for_path(const std::filesystem::path &path);

// Loading validates every tweet. In strict mode a CoNLL tag sequence with
// BIO violations is rejected; lenient mode repairs it.
Corpus load_corpus(const std::filesystem::path &path, CorpusFormat format,
                   TagPolicy policy = TagPolicy::kLenient);
Corpus parse_corpus(std::string_view text, CorpusFormat format,
                    TagPolicy policy = TagPolicy::kLenient,
                    std::string name = "corpus");

void save_corpus(const Corpus &corpus, const std::filesystem::path &path,
                 CorpusFormat format);
std::string serialize_corpus(const Corpus &corpus, CorpusFormat format);

enum class Region { kBru, kBe };

std::string_view region_name(Region region);
Region parse_region(std::string_view name);

struct GeneratorConfig {
  std::string name = "synthetic";
  int size = 1000;
  double traffic_fraction = 0.5;
  Region region = Region::kBru;
  // Fraction of each region's location vocabulary shared with the other
  // region.
  double location_overlap = 0.7;
  // Number of distinct location names available to a region.
  int location_pool_size = 20;
  // Probability that a raw tweet gets a trailing URL (removed again by
  // normalization).
  double url_rate = 0.3;
};

// Template-based corpus with exact gold labels; deterministic given seed.
Corpus generate_synthetic(const GeneratorConfig &config, uint64_t seed);

// The location names a region draws its "where" slots from.
std::vector<std::string> region_locations(const GeneratorConfig &config);

}  // namespace tev

#endif  // TEV_CORPUS_H_
