#include "tev/config.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tev/errors.h"

namespace tev {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void bad_value(const std::string &key, const std::string &value,
                            const char *expected) {
  throw UsageError("config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

int to_int(const std::string &key, const std::string &v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

uint64_t to_u64(const std::string &key, const std::string &v) {
  uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "an unsigned integer");
  return out;
}

double to_double(const std::string &key, const std::string &v) {
  size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception &) {
    bad_value(key, v, "a number");
  }
  if (used != v.size()) bad_value(key, v, "a number");
  return out;
}

bool to_bool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

std::vector<int> to_int_list(const std::string &key, const std::string &v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_int(key, trim(item)));
  if (out.empty()) bad_value(key, v, "a comma-separated list");
  return out;
}

std::string join(const std::vector<int> &xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

// Shortest text that reads back to the same double.
std::string fmt(double x) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
    if (std::stod(buf) == x) break;
  }
  return buf;
}

template <typename T>
std::optional<T> pop(std::map<std::string, std::string> &kv, const std::string &key,
                     T (*conv)(const std::string &, const std::string &)) {
  auto it = kv.find(key);
  if (it == kv.end()) return std::nullopt;
  T out = conv(key, it->second);
  kv.erase(it);
  return out;
}

std::optional<std::string> pop_str(std::map<std::string, std::string> &kv,
                                   const std::string &key) {
  auto it = kv.find(key);
  if (it == kv.end()) return std::nullopt;
  std::string out = it->second;
  kv.erase(it);
  return out;
}

template <typename F>
auto wrap(const std::string &key, const std::string &value, F &&f) {
  try {
    return f(value);
  } catch (const UsageError &) {
    throw;
  } catch (const std::exception &) {
    bad_value(key, value, "a known name");
  }
}

}  // namespace

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw UsageError("unknown optimizer '" + std::string(name) + "'");
}

OptimizerDefaults optimizer_defaults(Architecture arch) {
  switch (arch) {
    case Architecture::kCnnClassifier:
    case Architecture::kLstmClassifier:
      return {OptimizerKind::kAdam, 1e-3, 32};
    case Architecture::kLstmTagger:
    case Architecture::kLstmCrfTagger:
      return {OptimizerKind::kSgd, 0.015, 1};
    case Architecture::kJoint:
    case Architecture::kEnhancedJoint:
      return {OptimizerKind::kAdam, 1e-4, 32};
  }
  throw std::logic_error("unreachable architecture");
}

const std::vector<int> &default_epoch_candidates() {
  static const std::vector<int> kEpochs = {10, 15, 20, 25, 30, 40};
  return kEpochs;
}

ExperimentConfig ExperimentConfig::for_architecture(Architecture arch) {
  ExperimentConfig c;
  c.model = ModelConfig::defaults(arch);
  const OptimizerDefaults d = optimizer_defaults(arch);
  c.optimizer = d.kind;
  c.learning_rate = d.learning_rate;
  c.batch_size = d.batch_size;
  c.out_dir = std::filesystem::path("runs") / std::string(architecture_name(arch));
  return c;
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw UsageError("config line " + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, value).second) {
      throw UsageError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }

  // The architecture fixes every other default, so it is read first.
  Architecture arch = Architecture::kEnhancedJoint;
  if (auto a = pop_str(kv, "architecture")) {
    arch = wrap("architecture", *a, [](const std::string &v) { return parse_architecture(v); });
  }
  ExperimentConfig c = for_architecture(arch);

  if (auto v = pop_str(kv, "name")) c.name = *v;
  if (auto v = pop_str(kv, "train")) c.data.train = *v;
  if (auto v = pop_str(kv, "dev")) c.data.dev = *v;
  if (auto v = pop_str(kv, "test")) c.data.test = *v;
  if (auto v = pop_str(kv, "corpus")) c.data.corpus = *v;
  if (auto v = pop_str(kv, "tag_policy")) {
    if (*v == "strict") c.data.tag_policy = TagPolicy::kStrict;
    else if (*v == "lenient") c.data.tag_policy = TagPolicy::kLenient;
    else bad_value("tag_policy", *v, "strict or lenient");
  }

  const bool any_generator = std::any_of(kv.begin(), kv.end(), [](const auto &p) {
    return p.first.rfind("generator.", 0) == 0;
  });
  if (any_generator) {
    GeneratorConfig g;
    if (auto v = pop_str(kv, "generator.name")) g.name = *v;
    if (auto v = pop<int>(kv, "generator.size", to_int)) g.size = *v;
    if (auto v = pop<double>(kv, "generator.traffic_fraction", to_double)) g.traffic_fraction = *v;
    if (auto v = pop_str(kv, "generator.region")) {
      g.region = wrap("generator.region", *v, [](const std::string &s) { return parse_region(s); });
    }
    if (auto v = pop<double>(kv, "generator.location_overlap", to_double)) g.location_overlap = *v;
    if (auto v = pop<int>(kv, "generator.location_pool_size", to_int)) g.location_pool_size = *v;
    if (auto v = pop<double>(kv, "generator.url_rate", to_double)) g.url_rate = *v;
    c.data.generator = g;
  }

  ModelConfig &m = c.model;
  if (auto v = pop<int>(kv, "embedding_dim", to_int)) m.embedding_dim = *v;
  if (auto v = pop<int>(kv, "hidden", to_int)) m.hidden = *v;
  if (auto v = pop<std::vector<int>>(kv, "filter_widths", to_int_list)) m.filter_widths = *v;
  if (auto v = pop<int>(kv, "filters_per_width", to_int)) m.filters_per_width = *v;
  if (auto v = pop<double>(kv, "dropout", to_double)) m.dropout = *v;
  if (auto v = pop_str(kv, "encoder")) {
    m.encoder = wrap("encoder", *v, [](const std::string &s) { return parse_encoder(s); });
  }
  if (auto v = pop<int>(kv, "subword_vocab_size", to_int)) m.subword_vocab_size = *v;
  if (auto v = pop<double>(kv, "class_loss_weight", to_double)) m.class_loss_weight = *v;
  if (auto v = pop<double>(kv, "slot_loss_weight", to_double)) m.slot_loss_weight = *v;

  if (auto v = pop_str(kv, "optimizer")) c.optimizer = parse_optimizer(*v);
  if (auto v = pop<double>(kv, "learning_rate", to_double)) c.learning_rate = *v;
  if (auto v = pop<int>(kv, "batch_size", to_int)) c.batch_size = *v;
  if (auto v = pop<std::vector<int>>(kv, "epochs", to_int_list)) c.epochs = *v;
  if (auto v = pop<double>(kv, "clip_norm", to_double)) c.clip_norm = *v;
  if (auto v = pop<uint64_t>(kv, "seed", to_u64)) c.seed = *v;
  if (auto v = pop_str(kv, "out_dir")) c.out_dir = *v;
  if (auto v = pop<bool>(kv, "constrained_decode", to_bool)) c.constrained_decode = *v;
  if (auto v = pop<bool>(kv, "suppress_spans_if_non_traffic", to_bool)) {
    c.suppress_spans_if_non_traffic = *v;
  }
  if (auto v = pop<int>(kv, "threads", to_int)) c.threads = *v;

  if (!kv.empty()) throw UsageError("unknown config key '" + kv.begin()->first + "'");
  c.model.architecture = arch;
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::map<std::string, std::string> ExperimentConfig::to_kv() const {
  std::map<std::string, std::string> kv;
  kv["name"] = name;
  if (data.train) kv["train"] = data.train->string();
  if (data.dev) kv["dev"] = data.dev->string();
  if (data.test) kv["test"] = data.test->string();
  if (data.corpus) kv["corpus"] = data.corpus->string();
  kv["tag_policy"] = data.tag_policy == TagPolicy::kStrict ? "strict" : "lenient";
  if (data.generator) {
    const GeneratorConfig &g = *data.generator;
    kv["generator.name"] = g.name;
    kv["generator.size"] = std::to_string(g.size);
    kv["generator.traffic_fraction"] = fmt(g.traffic_fraction);
    kv["generator.region"] = std::string(region_name(g.region));
    kv["generator.location_overlap"] = fmt(g.location_overlap);
    kv["generator.location_pool_size"] = std::to_string(g.location_pool_size);
    kv["generator.url_rate"] = fmt(g.url_rate);
  }
  kv["architecture"] = std::string(architecture_name(model.architecture));
  kv["embedding_dim"] = std::to_string(model.embedding_dim);
  kv["hidden"] = std::to_string(model.hidden);
  kv["filter_widths"] = join(model.filter_widths);
  kv["filters_per_width"] = std::to_string(model.filters_per_width);
  kv["dropout"] = fmt(model.dropout);
  kv["encoder"] = std::string(encoder_name(model.encoder));
  kv["subword_vocab_size"] = std::to_string(model.subword_vocab_size);
  kv["class_loss_weight"] = fmt(model.class_loss_weight);
  kv["slot_loss_weight"] = fmt(model.slot_loss_weight);
  kv["optimizer"] = std::string(optimizer_name(optimizer));
  kv["learning_rate"] = fmt(learning_rate);
  kv["batch_size"] = std::to_string(batch_size);
  kv["epochs"] = join(epochs);
  kv["clip_norm"] = fmt(clip_norm);
  if (seed) kv["seed"] = std::to_string(*seed);
  kv["out_dir"] = out_dir.string();
  kv["constrained_decode"] = constrained_decode ? "true" : "false";
  kv["suppress_spans_if_non_traffic"] = suppress_spans_if_non_traffic ? "true" : "false";
  kv["threads"] = std::to_string(threads);
  return kv;
}

std::string ExperimentConfig::serialize() const {
  std::string out;
  for (const auto &[k, v] : to_kv()) out += k + " = " + v + "\n";
  return out;
}

void ExperimentConfig::validate() const {
  if (!seed) throw UsageError("config: seed is mandatory");
  model.validate();
  const int sources = (data.corpus ? 1 : 0) + (data.generator ? 1 : 0) +
                      ((data.train || data.dev || data.test) ? 1 : 0);
  if (sources == 0) throw UsageError("config: no data source (train/dev/test, corpus or generator.*)");
  if (sources > 1) throw UsageError("config: more than one data source given");
  if ((data.train || data.dev || data.test) && !(data.train && data.dev && data.test)) {
    throw UsageError("config: train, dev and test must be given together");
  }
  if (data.generator && data.generator->size < 5) {
    throw UsageError("config: generator.size must be at least 5");
  }
  if (learning_rate <= 0) throw UsageError("config: learning_rate must be positive");
  if (batch_size < 1) throw UsageError("config: batch_size must be at least 1");
  if (clip_norm < 0) throw UsageError("config: clip_norm must be non-negative");
  if (threads < 1) throw UsageError("config: threads must be at least 1");
  if (epochs.empty()) throw UsageError("config: epochs must not be empty");
  for (int e : epochs) {
    if (e < 1) throw UsageError("config: epoch candidates must be positive");
  }
}

void ExperimentConfig::check_paths() const {
  for (const auto *p : {&data.train, &data.dev, &data.test, &data.corpus}) {
    if (*p && !std::filesystem::exists(**p)) {
      throw DataError("corpus file not found: " + (*p)->string());
    }
  }
}

std::string ExperimentConfig::hash() const {
  auto kv = to_kv();
  kv.erase("out_dir");
  kv.erase("threads");
  std::string canonical;
  for (const auto &[k, v] : kv) canonical += k + "=" + v + "\n";
  return fnv1a_hex(canonical);
}

uint64_t ExperimentConfig::require_seed() const {
  if (!seed) throw UsageError("config: seed is mandatory");
  return *seed;
}

std::string fnv1a_hex(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace tev
