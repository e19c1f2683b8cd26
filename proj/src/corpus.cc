#include "tev/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "tev/bio.h"
#include "tev/errors.h"
#include "tev/random.h"

namespace tev {

namespace {

using ordered_json = nlohmann::ordered_json;

bool is_ascii_punct(unsigned char c) { return c < 128 && std::ispunct(c); }
bool is_ascii_space(unsigned char c) { return c < 128 && std::isspace(c); }

const std::regex &url_pattern() {
  static const std::regex pattern(R"((?:[a-z][a-z0-9+.\-]*://|www\.)\S*)",
                                  std::regex::icase | std::regex::optimize);
  return pattern;
}

}  // namespace

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (size_t i = 0; i < out.size(); ++i) {
    auto c = static_cast<unsigned char>(out[i]);
    if (c < 128) {
      out[i] = static_cast<char>(std::tolower(c));
    } else if (c == 0xC3 && i + 1 < out.size()) {
      // U+00C0..U+00DE (except the multiplication sign) map to +0x20.
      auto next = static_cast<unsigned char>(out[i + 1]);
      if (next >= 0x80 && next <= 0x9E && next != 0x97) {
        out[i + 1] = static_cast<char>(next + 0x20);
      }
      ++i;
    }
  }
  return out;
}

std::vector<std::string> normalize_tweet(std::string_view raw_text) {
  const std::string stripped =
      std::regex_replace(std::string(raw_text), url_pattern(), " ");
  const std::string text = lowercase(stripped);

  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_ascii_space(c)) {
      flush();
    } else if (is_ascii_punct(c)) {
      flush();
      tokens.emplace_back(1, ch);
    } else {
      current.push_back(ch);
    }
  }
  flush();
  if (tokens.empty()) throw DegenerateTweet(std::string(raw_text));
  return tokens;
}

void validate_tweet(const Tweet &tweet) {
  if (tweet.tokens.empty()) {
    throw DataError("tweet '" + tweet.id + "' has no tokens");
  }
  if (tweet.label == ClassLabel::kNonTraffic && !tweet.spans.empty()) {
    throw DataError("non-traffic tweet '" + tweet.id + "' carries spans");
  }
  try {
    check_spans(static_cast<int>(tweet.tokens.size()), tweet.spans);
  } catch (const DataError &e) {
    throw DataError("tweet '" + tweet.id + "': " + e.what());
  }
}

void validate_corpus(const Corpus &corpus) {
  std::unordered_set<std::string> ids;
  for (const Tweet &t : corpus.tweets) {
    validate_tweet(t);
    if (!ids.insert(t.id).second) {
      throw DataError("duplicate tweet id '" + t.id + "'");
    }
  }
}

Corpus keyword_filter(const Corpus &corpus,
                      const std::set<std::string> &keywords) {
  std::set<std::string> lowered;
  for (const auto &k : keywords) lowered.insert(lowercase(k));

  Corpus out{corpus.name, {}, corpus.provenance};
  for (const Tweet &t : corpus.tweets) {
    const bool hit = std::any_of(
        t.tokens.begin(), t.tokens.end(),
        [&](const std::string &tok) { return lowered.count(lowercase(tok)) > 0; });
    if (hit) out.tweets.push_back(t);
  }
  return out;
}

const std::set<std::string> &default_traffic_keywords() {
  static const std::set<std::string> keywords = {
      // Dutch
      "file", "ongeval", "aanrijding", "verkeer", "rijstrook", "pech",
      "wegenwerken", "omleiding", "kettingbotsing", "vertraging",
      // French
      "bouchon", "accident", "embouteillage", "trafic", "voie", "travaux",
      // English
      "traffic", "jam", "crash", "congestion", "lane", "roadworks"};
  return keywords;
}

CorpusSplit split_corpus(const Corpus &corpus, uint64_t seed) {
  const size_t n = corpus.size();
  if (n < 5) {
    throw DataError("corpus '" + corpus.name + "' has " + std::to_string(n) +
                    " tweets; at least 5 are needed to split");
  }
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const size_t n_dev = n / 5;
  const size_t n_test = n / 5;
  const size_t n_train = n - n_dev - n_test;

  CorpusSplit split;
  split.train = {corpus.name + ".train", {}, corpus.provenance};
  split.dev = {corpus.name + ".dev", {}, corpus.provenance};
  split.test = {corpus.name + ".test", {}, corpus.provenance};
  for (size_t k = 0; k < n; ++k) {
    const Tweet &t = corpus.tweets[order[k]];
    if (k < n_train) {
      split.train.tweets.push_back(t);
    } else if (k < n_train + n_dev) {
      split.dev.tweets.push_back(t);
    } else {
      split.test.tweets.push_back(t);
    }
  }
  return split;
}

CorpusStats corpus_stats(const Corpus &corpus) {
  CorpusStats stats;
  for (const Tweet &t : corpus.tweets) {
    ++stats.class_counts[static_cast<int>(t.label)];
    for (const SlotSpan &s : t.spans) ++stats.slot_counts[static_cast<int>(s.type)];
    ++stats.length_histogram[static_cast<int>(t.tokens.size())];
  }
  return stats;
}

// ---------------------------------------------------------------------------
// File formats

std::string_view format_name(CorpusFormat format) {
  return format == CorpusFormat::kJsonl ? "jsonl" : "conll";
}

CorpusFormat parse_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::kJsonl;
  if (name == "conll") return CorpusFormat::kConll;
  throw UsageError("unknown corpus format '" + std::string(name) + "'");
}

CorpusFormat format_for_path(const std::filesystem::path &path) {
  return path.extension() == ".conll" ? CorpusFormat::kConll
                                      : CorpusFormat::kJsonl;
}

namespace {

Tweet parse_jsonl_record(const std::string &line, long line_no) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error &e) {
    throw DataError(std::string("malformed JSON: ") + e.what(), line_no);
  }
  Tweet t;
  try {
    t.id = j.at("id").get<std::string>();
    t.raw_text = j.value("text", std::string());
    if (j.contains("tokens")) {
      t.tokens = j.at("tokens").get<std::vector<std::string>>();
    } else {
      t.tokens = normalize_tweet(t.raw_text);
    }
    auto label = parse_class_label(j.at("label").get<std::string>());
    if (!label) throw DataError("unknown label", line_no);
    t.label = *label;
    for (const auto &s : j.value("spans", ordered_json::array())) {
      auto type = parse_slot_type(s.at("type").get<std::string>());
      if (!type) throw DataError("unknown slot type", line_no);
      t.spans.push_back({*type, s.at("start").get<int>(), s.at("end").get<int>()});
    }
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("bad record: ") + e.what(), line_no);
  } catch (const DegenerateTweet &e) {
    throw DataError(e.what(), line_no);
  }
  std::sort(t.spans.begin(), t.spans.end(),
            [](const SlotSpan &a, const SlotSpan &b) { return a.start < b.start; });
  try {
    validate_tweet(t);
  } catch (const DataError &e) {
    throw DataError(e.what(), line_no);
  }
  return t;
}

std::string header_safe(const std::string &text) {
  std::string out = text;
  for (char &c : out) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  }
  return out;
}

struct ConllSentence {
  long first_line = 0;
  std::map<std::string, std::string> headers;
  std::vector<std::string> tokens;
  TagSequence tags;
  std::vector<long> tag_lines;
};

Tweet finish_conll(ConllSentence &s, size_t index, const std::string &name,
                   TagPolicy policy) {
  const long line_no = s.first_line;
  if (s.tokens.empty()) throw DataError("sentence without tokens", line_no);
  auto label_it = s.headers.find("label");
  if (label_it == s.headers.end()) {
    throw DataError("sentence missing '# label=' header", line_no);
  }
  auto label = parse_class_label(label_it->second);
  if (!label) throw DataError("unknown label '" + label_it->second + "'", line_no);

  const auto violations = validate(s.tags);
  if (!violations.empty() && policy == TagPolicy::kStrict) {
    const Violation &v = violations.front();
    throw DataError(std::string(violation_name(v.kind)) + " at token " +
                        std::to_string(v.index),
                    s.tag_lines[v.index]);
  }

  Tweet t;
  auto id_it = s.headers.find("id");
  t.id = id_it != s.headers.end() ? id_it->second
                                  : name + "-" + std::to_string(index);
  auto text_it = s.headers.find("text");
  if (text_it != s.headers.end()) {
    t.raw_text = text_it->second;
  } else {
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      if (i) t.raw_text += ' ';
      t.raw_text += s.tokens[i];
    }
  }
  t.tokens = std::move(s.tokens);
  t.label = *label;
  t.spans = decode_tags(s.tags);
  try {
    validate_tweet(t);
  } catch (const DataError &e) {
    throw DataError(e.what(), line_no);
  }
  return t;
}

}  // namespace

Corpus parse_corpus(std::string_view text, CorpusFormat format,
                    TagPolicy policy, std::string name) {
  Corpus corpus{std::move(name), {}, Provenance::kLoaded};
  std::istringstream in{std::string(text)};
  std::string line;
  long line_no = 0;

  if (format == CorpusFormat::kJsonl) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      corpus.tweets.push_back(parse_jsonl_record(line, line_no));
    }
  } else {
    ConllSentence current;
    bool open = false;
    auto close = [&] {
      if (!open) return;
      corpus.tweets.push_back(
          finish_conll(current, corpus.tweets.size(), corpus.name, policy));
      current = ConllSentence{};
      open = false;
    };
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) {
        close();
        continue;
      }
      if (!open) {
        open = true;
        current.first_line = line_no;
      }
      if (line.rfind("# ", 0) == 0) {
        const auto eq = line.find('=');
        if (eq == std::string::npos || !current.tokens.empty()) {
          throw DataError("malformed header line", line_no);
        }
        current.headers[line.substr(2, eq - 2)] = line.substr(eq + 1);
        continue;
      }
      const auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0 ||
          line.find('\t', tab + 1) != std::string::npos) {
        throw DataError("expected 'token<TAB>tag'", line_no);
      }
      auto tag = parse_tag(std::string_view(line).substr(tab + 1));
      if (!tag) {
        throw DataError("unknown tag '" + line.substr(tab + 1) + "'", line_no);
      }
      current.tokens.push_back(line.substr(0, tab));
      current.tags.push_back(*tag);
      current.tag_lines.push_back(line_no);
    }
    close();
  }
  validate_corpus(corpus);
  return corpus;
}

Corpus load_corpus(const std::filesystem::path &path, CorpusFormat format,
                   TagPolicy policy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_corpus(buffer.str(), format, policy, path.stem().string());
}

std::string serialize_corpus(const Corpus &corpus, CorpusFormat format) {
  std::string out;
  if (format == CorpusFormat::kJsonl) {
    for (const Tweet &t : corpus.tweets) {
      ordered_json j;
      j["id"] = t.id;
      j["text"] = t.raw_text;
      j["tokens"] = t.tokens;
      j["label"] = class_label_name(t.label);
      ordered_json spans = ordered_json::array();
      for (const SlotSpan &s : t.spans) {
        spans.push_back(
            {{"type", slot_type_name(s.type)}, {"start", s.start}, {"end", s.end}});
      }
      j["spans"] = std::move(spans);
      out += j.dump();
      out += '\n';
    }
    return out;
  }
  for (size_t k = 0; k < corpus.tweets.size(); ++k) {
    const Tweet &t = corpus.tweets[k];
    if (k) out += '\n';
    out += "# id=" + header_safe(t.id) + "\n";
    out += "# label=" + std::string(class_label_name(t.label)) + "\n";
    out += "# text=" + header_safe(t.raw_text) + "\n";
    const TagSequence tags = encode_spans(static_cast<int>(t.tokens.size()), t.spans);
    for (size_t i = 0; i < t.tokens.size(); ++i) {
      out += t.tokens[i] + "\t" + tag_name(tags[i]) + "\n";
    }
  }
  return out;
}

void save_corpus(const Corpus &corpus, const std::filesystem::path &path,
                 CorpusFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  out << serialize_corpus(corpus, format);
  if (!out) throw DataError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Synthetic generation

std::string_view region_name(Region region) {
  return region == Region::kBru ? "BRU" : "BE";
}

Region parse_region(std::string_view name) {
  const std::string lowered = lowercase(name);
  if (lowered == "bru") return Region::kBru;
  if (lowered == "be") return Region::kBe;
  throw UsageError("unknown region '" + std::string(name) + "'");
}

namespace {

using Phrase = std::vector<std::string>;

// Location names drawn by both regions.
const std::vector<std::string> kSharedLocations = {
    "e40",       "r0",        "e19",      "a12",        "e411",
    "leuven",    "zaventem",  "vilvoorde", "halle",     "mechelen",
    "kraainem",  "wemmel",    "bijgaarden", "ternat", "machelen",
    "diegem",    "sterrebeek", "wezembeek", "dilbeek",  "asse",
    "grimbergen", "overijse", "tervuren", "waterloo",   "wavre",
    "nivelles",  "aalst",     "lennik",   "drogenbos",  "beersel"};

// Region-specific location names.
const std::vector<std::string> kBruLocations = {
    "schuman",   "montgomery", "louiza",   "rogier",     "meiser",
    "delta",     "kunstwet",   "madou",    "flagey",     "bockstael",
    "reyers",    "leopold",    "stefania", "heizel",     "basiliek",
    "simonis",   "ninove",     "boileau",  "debroux", "demey",
    "vorst",     "jette",      "evere",    "etterbeek",  "anderlecht",
    "molenbeek", "schaarbeek", "ukkel",    "elsene",     "laken"};

const std::vector<std::string> kBeLocations = {
    "e17",       "e313",      "e34",      "e42",        "e403",
    "antwerpen", "gent",      "brugge",   "kortrijk",   "hasselt",
    "genk",      "luik",      "namen",    "bergen",     "charleroi",
    "oostende",  "turnhout",  "lier",     "ranst",      "kennedytunnel",
    "lummen",    "zwijnaarde", "jabbeke", "aarschot",   "herentals",
    "geel",      "tienen",    "temse", "lokeren", "wetteren"};

const std::vector<Phrase> kWhatPhrases = {
    {"ongeval"}, {"file"}, {"aanrijding"}, {"kettingbotsing"}, {"pech"},
    {"wegenwerken"}, {"zware", "file"}, {"stilstaand", "verkeer"},
    {"ongeval", "met", "vrachtwagen"}, {"brand"}, {"omgevallen", "vrachtwagen"},
    {"accident"}, {"traffic", "jam"}, {"bouchon"}, {"files"}, {"incident"},
    {"defect", "voertuig"}, {"spookrijder"}};

const std::vector<Phrase> kWhenPhrases = {
    {"vanochtend"}, {"vanavond"}, {"deze", "ochtend"}, {"om", "8u30"},
    {"sinds", "17u"}, {"tot", "19u"}, {"morgen"}, {"nu"}, {"momenteel"},
    {"this", "morning"}, {"ce", "matin"}, {"vannacht"}, {"tijdens", "de", "spits"},
    {"rond", "7u"}, {"sinds", "een", "uur"}};

const std::vector<Phrase> kConsequencePhrases = {
    {"rijstrook", "dicht"}, {"twee", "rijstroken", "versperd"},
    {"weg", "afgesloten"}, {"vertraging"}, {"30", "minuten", "vertraging"},
    {"lane", "blocked"}, {"voie", "fermée"}, {"verkeer", "staat", "stil"},
    {"omleiding"}, {"linkerrijstrook", "versperd"}, {"pechstrook", "bezet"},
    {"tunnel", "dicht"}};

const std::vector<Phrase> kWherePrefixes = {
    {"op", "de"}, {"in"}, {"ter", "hoogte", "van"}, {"aan"}, {"richting"},
    {"op"}, {"bij"}, {}};

const std::vector<Phrase> kTrafficOpeners = {
    {"opgelet", ":"}, {"let", "op", "!"}, {"update", ":"}, {"info"},
    {"#", "verkeer"}, {}, {}, {}};

const std::vector<Phrase> kTrafficClosers = {
    {"!"}, {"."}, {"#", "verkeersinfo"}, {"rij", "voorzichtig"},
    {"@", "verkeerscentrum"}, {}, {}, {}};

const std::vector<std::string> kGeneralWords = {
    "mooi",   "weer",    "vandaag", "concert", "voetbal", "match",  "lekker",
    "eten",   "nieuwe",  "film",    "gezien",  "met",     "vrienden", "zomer",
    "wat",    "een",     "dag",     "koffie",  "boek",    "gelezen", "de",
    "het",    "is",      "was",    "leuk",    "super",   "feest",   "verjaardag",
    "muziek", "festival", "winkel", "markt",   "zon",     "regen",   "beter",
    "genieten", "weekend", "school", "werk",   "vergadering", "pizza", "wandeling",
    "park",   "museum",  "tentoonstelling", "ticket", "thuis", "familie", "fiets",
    "beautiful", "day", "great", "soirée", "belle", "journée", "merci"};

const std::vector<Phrase> kGeneralClosers = {
    {"!"}, {"."}, {"?"}, {"#", "zomer"}, {"@", "vriend"}, {}, {}};

std::string capitalize(const std::string &word) {
  std::string out = word;
  if (!out.empty() && std::islower(static_cast<unsigned char>(out[0]))) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out;
}

bool attaches_left(const std::string &tok) {
  return tok == "," || tok == "." || tok == "!" || tok == "?" || tok == ":";
}

bool attaches_right(const std::string &tok) { return tok == "#" || tok == "@"; }

// Renders tokens as tweet text that normalizes back to the same tokens.
std::string render(const std::vector<std::string> &tokens, Rng &rng) {
  std::string text;
  bool glue_next = true;
  for (size_t i = 0; i < tokens.size(); ++i) {
    std::string word = tokens[i];
    const bool sentence_start =
        i == 0 || tokens[i - 1] == "." || tokens[i - 1] == "!";
    if ((sentence_start && rng.bernoulli(0.7)) || rng.bernoulli(0.05)) {
      word = capitalize(word);
    }
    if (!glue_next && !attaches_left(tokens[i])) text += ' ';
    text += word;
    glue_next = attaches_right(tokens[i]);
  }
  return text;
}

void append(std::vector<std::string> &tokens, const Phrase &phrase) {
  tokens.insert(tokens.end(), phrase.begin(), phrase.end());
}

struct Part {
  std::optional<SlotType> slot;
  Phrase prefix;
  Phrase body;
};

Tweet make_traffic(const std::vector<std::string> &locations, Rng &rng) {
  std::vector<Part> parts;
  // At least one of what/where is always present.
  const bool has_what = rng.bernoulli(0.9);
  const bool has_where = !has_what || rng.bernoulli(0.9);
  if (has_what) parts.push_back({SlotType::kWhat, {}, rng.pick(kWhatPhrases)});
  if (has_where) {
    Phrase body = {rng.pick(locations)};
    if (rng.bernoulli(0.3)) {
      std::string second = rng.pick(locations);
      if (second != body[0]) body.push_back(second);
    }
    parts.push_back({SlotType::kWhere, rng.pick(kWherePrefixes), body});
  }
  if (rng.bernoulli(0.7)) {
    parts.push_back({SlotType::kWhen, {}, rng.pick(kWhenPhrases)});
  }
  if (rng.bernoulli(0.6)) {
    parts.push_back({SlotType::kConsequence, {}, rng.pick(kConsequencePhrases)});
  }
  rng.shuffle(parts);

  Tweet t;
  t.label = ClassLabel::kTraffic;
  append(t.tokens, rng.pick(kTrafficOpeners));
  for (size_t k = 0; k < parts.size(); ++k) {
    if (k > 0 && rng.bernoulli(0.3)) t.tokens.push_back(",");
    append(t.tokens, parts[k].prefix);
    const int start = static_cast<int>(t.tokens.size());
    append(t.tokens, parts[k].body);
    t.spans.push_back({*parts[k].slot, start, static_cast<int>(t.tokens.size())});
  }
  append(t.tokens, rng.pick(kTrafficClosers));
  return t;
}

Tweet make_non_traffic(const std::vector<std::string> &locations, Rng &rng) {
  Tweet t;
  t.label = ClassLabel::kNonTraffic;
  const int length = 4 + static_cast<int>(rng.index(9));
  for (int i = 0; i < length; ++i) t.tokens.push_back(rng.pick(kGeneralWords));
  // Occasionally mention a place outside any traffic context.
  if (rng.bernoulli(0.15)) {
    const auto pos = static_cast<long>(rng.index(t.tokens.size() + 1));
    t.tokens.insert(t.tokens.begin() + pos, {"in", rng.pick(locations)});
  }
  append(t.tokens, rng.pick(kGeneralClosers));
  return t;
}

}  // namespace

std::vector<std::string> region_locations(const GeneratorConfig &config) {
  const int pool = config.location_pool_size;
  const int max_pool = static_cast<int>(
      std::min({kSharedLocations.size(), kBruLocations.size(), kBeLocations.size()}));
  if (pool < 1 || pool > max_pool) {
    throw DataError("location_pool_size must be in [1, " +
                    std::to_string(max_pool) + "]");
  }
  const int shared = static_cast<int>(std::lround(config.location_overlap * pool));
  const auto &own = config.region == Region::kBru ? kBruLocations : kBeLocations;
  std::vector<std::string> names(kSharedLocations.begin(),
                                 kSharedLocations.begin() + shared);
  names.insert(names.end(), own.begin(), own.begin() + (pool - shared));
  return names;
}

Corpus generate_synthetic(const GeneratorConfig &config, uint64_t seed) {
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(config.traffic_fraction) || !in_unit(config.location_overlap) ||
      !in_unit(config.url_rate)) {
    throw DataError("generator proportions must lie in [0, 1]");
  }
  if (config.size <= 0) throw DataError("generator size must be positive");

  const std::vector<std::string> locations = region_locations(config);
  Rng rng(seed);
  Corpus corpus{config.name, {}, Provenance::kSynthetic};
  corpus.tweets.reserve(config.size);
  const std::string prefix = lowercase(region_name(config.region));
  for (int i = 0; i < config.size; ++i) {
    Tweet t = rng.bernoulli(config.traffic_fraction) ? make_traffic(locations, rng)
                                                     : make_non_traffic(locations, rng);
    char id[32];
    std::snprintf(id, sizeof(id), "%s-%06d", prefix.c_str(), i);
    t.id = id;
    t.raw_text = render(t.tokens, rng);
    if (rng.bernoulli(config.url_rate)) {
      t.raw_text += " https://t.co/" + std::to_string(rng.index(1000000));
    }
    if (normalize_tweet(t.raw_text) != t.tokens) {
      throw std::logic_error("generator produced text that does not normalize "
                             "to its tokens: " + t.raw_text);
    }
    corpus.tweets.push_back(std::move(t));
  }
  validate_corpus(corpus);
  return corpus;
}

}  // namespace tev
