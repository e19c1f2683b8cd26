#ifndef TEV_CONFIG_H_
#define TEV_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tev/corpus.h"
#include "tev/models.h"

namespace tev {

enum class OptimizerKind { kSgd, kAdam };

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerDefaults {
  OptimizerKind kind;
  double learning_rate;
  int batch_size;
};

// Adam 1e-3 for the classifiers, SGD 0.015 with per-tweet updates for the
// taggers, Adam 1e-4 for the joint models. Batches of 32 elsewhere.
OptimizerDefaults optimizer_defaults(Architecture arch);

const std::vector<int> &default_epoch_candidates();

// Where the data comes from. Exactly one of: a train/dev/test triple, a
// single corpus split 60/20/20, or the synthetic generator.
struct DataSource {
  std::optional<std::filesystem::path> train, dev, test;
  std::optional<std::filesystem::path> corpus;
  std::optional<GeneratorConfig> generator;
  TagPolicy tag_policy = TagPolicy::kLenient;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DataSource data;
  ModelConfig model;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-4;
  int batch_size = 32;
  std::vector<int> epochs = default_epoch_candidates();
  // Global gradient-norm cap; 0 disables clipping.
  double clip_norm = 5.0;
  std::optional<uint64_t> seed;
  std::filesystem::path out_dir = "runs/experiment";
  bool constrained_decode = false;
  bool suppress_spans_if_non_traffic = false;
  int threads = 1;

  // A config for `arch` with every architecture-specific default applied.
  static ExperimentConfig for_architecture(Architecture arch);

  // Flat "key = value" text; '#' starts a comment. Unknown keys, malformed
  // values and conflicting data sources throw UsageError.
  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path &path);

  // Canonical key/value view; serialize() writes it back in parse() syntax.
  std::map<std::string, std::string> to_kv() const;
  std::string serialize() const;

  // Throws UsageError (missing seed, bad values, no data source).
  void validate() const;
  // Throws DataError when a referenced corpus file does not exist.
  void check_paths() const;

  // FNV-1a over the canonical form, excluding keys that cannot change
  // results (out_dir, threads). Hex string.
  std::string hash() const;

  uint64_t require_seed() const;
};

std::string fnv1a_hex(std::string_view bytes);

}  // namespace tev

#endif  // TEV_CONFIG_H_
