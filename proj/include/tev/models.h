#ifndef TEV_MODELS_H_
#define TEV_MODELS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tev/bio.h"
#include "tev/corpus.h"
#include "tev/crf.h"
#include "tev/ops.h"
#include "tev/optim.h"
#include "tev/subword.h"
#include "tev/vocab.h"

namespace tev {

enum class Architecture {
  kCnnClassifier,
  kLstmClassifier,
  kLstmTagger,
  kLstmCrfTagger,
  kJoint,
  kEnhancedJoint,
};

std::string_view architecture_name(Architecture arch);
Architecture parse_architecture(std::string_view name);
std::vector<Architecture> all_architectures();

bool has_class_head(Architecture arch);
bool has_slot_head(Architecture arch);
bool is_joint(Architecture arch);
bool is_recurrent(Architecture arch);

enum class EncoderKind { kWord, kSubword };

std::string_view encoder_name(EncoderKind kind);
EncoderKind parse_encoder(std::string_view name);

struct ModelConfig {
  Architecture architecture = Architecture::kEnhancedJoint;
  int embedding_dim = 160;
  int hidden = 128;
  std::vector<int> filter_widths = {3, 4, 5};
  int filters_per_width = 100;
  double dropout = 0.5;
  EncoderKind encoder = EncoderKind::kSubword;
  int subword_vocab_size = 600;
  double class_loss_weight = 1.0;
  double slot_loss_weight = 1.0;

  // Settings for each architecture: BiLSTM width 256 for the classifier,
  // 100 for the taggers; the joint models use the subword encoder.
  static ModelConfig defaults(Architecture arch);
  // Throws UsageError.
  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json &j);
};

struct EncoderOutput {
  Tensor token_states;    // [n x d_tok], one row per original token
  Tensor sentence_state;  // [d_sent], final forward + final backward state
};

struct JointOutput {
  std::vector<double> class_probs;  // [2], traffic first
  std::vector<double> tag_probs;    // [n x 9]
  int num_tokens = 0;
  Tensor class_logits;
  Tensor tag_logits;

  std::span<const double> tag_row(int i) const {
    return std::span<const double>(tag_probs).subspan(static_cast<size_t>(i) * kNumTags,
                                                      kNumTags);
  }
};

struct PredictOptions {
  // Forbid BIO-illegal transitions when decoding tags.
  bool constrained_decode = false;
  // Drop spans when the model's own class head says non_traffic.
  bool suppress_spans_if_non_traffic = false;
};

struct Prediction {
  std::optional<ClassLabel> label;  // absent for tagger-only models
  std::vector<double> class_probs;
  std::optional<TagSequence> tags;  // absent for classifier-only models
  std::vector<SlotSpan> spans;
};

class Model {
 public:
  // Builds vocabularies from the training corpus and initializes weights.
  Model(ModelConfig config, const Corpus &train, uint64_t seed);
  Model(ModelConfig config, WordVocab words, SubwordVocab subwords, uint64_t seed);

  // Parameters are shared handles, so copies would alias; moves only.
  Model(const Model &) = delete;
  Model &operator=(const Model &) = delete;
  Model(Model &&) = default;
  Model &operator=(Model &&) = default;

  const ModelConfig &config() const { return config_; }
  Architecture architecture() const { return config_.architecture; }
  ParamStore &params() { return params_; }
  const ParamStore &params() const { return params_; }
  const WordVocab &word_vocab() const { return words_; }
  const SubwordVocab &subword_vocab() const { return subwords_; }
  uint64_t seed() const { return seed_; }

  int token_state_dim() const;
  int sentence_state_dim() const;

  // Shared BiLSTM encoder. With the subword encoder the BiLSTM runs over
  // [CLS] pieces [SEP] and token rows are gathered at first subtokens.
  EncoderOutput encode(const std::vector<std::string> &tokens, bool training,
                       Rng *rng) const;

  // Logits for every head the architecture has (class [2], tags [n x 9]).
  JointOutput forward(const std::vector<std::string> &tokens, bool training,
                      Rng *rng) const;

  // Architecture-specific training loss for one tweet.
  Tensor loss(const Tweet &tweet, bool training, Rng *rng) const;

  Prediction predict(const std::vector<std::string> &tokens,
                     const PredictOptions &options = {}) const;

  CrfWeights crf_weights() const;

  // Checkpoint body: architecture, config, vocabularies, tag order, seed,
  // parameters.
  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json &j);

 private:
  void init_params();
  Tensor class_logits_from(const Tensor &sentence_state) const;

  ModelConfig config_;
  WordVocab words_;
  SubwordVocab subwords_;
  uint64_t seed_;
  ParamStore params_;
  BiLstmWeights encoder_;
  std::optional<CrfParams> crf_;
};

// Architecture-specific entry points. Each throws std::invalid_argument
// when handed a model of another architecture.
std::vector<double> cnn_classify(const Model &model, const std::vector<std::string> &tokens);
std::vector<double> lstm_classify(const Model &model, const std::vector<std::string> &tokens);
std::vector<double> lstm_tag(const Model &model, const std::vector<std::string> &tokens);
TagSequence lstm_crf_tag(const Model &model, const std::vector<std::string> &tokens,
                         bool constrained_decode = false);
JointOutput joint_forward(const Model &model, const std::vector<std::string> &tokens);
JointOutput enhanced_joint_forward(const Model &model,
                                   const std::vector<std::string> &tokens);

// Class cross-entropy plus the sum of per-token tag cross-entropies,
// weighted by the given factors.
Tensor joint_loss(const JointOutput &output, ClassLabel gold_class,
                  const std::vector<int> &gold_tags, double class_weight = 1.0,
                  double slot_weight = 1.0);

Prediction predict(const Model &model, const Tweet &tweet,
                   const PredictOptions &options = {});

// Gold tag indices for a tweet.
std::vector<int> gold_tag_ids(const Tweet &tweet);

// Argmax over two class probabilities; exact ties go to non_traffic.
ClassLabel class_from_probs(std::span<const double> probs);

}  // namespace tev

#endif  // TEV_MODELS_H_
