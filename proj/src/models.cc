#include "tev/models.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tev/errors.h"

namespace tev {

namespace {

constexpr std::array<std::string_view, 6> kArchNames = {
    "cnn_classifier", "lstm_classifier", "lstm_tagger",
    "lstm_crf_tagger", "joint", "enhanced_joint"};

// The CNN pads short sentences up to its widest filter.
int min_cnn_length(const ModelConfig &config) {
  return *std::max_element(config.filter_widths.begin(), config.filter_widths.end());
}

void require_arch(const Model &model, Architecture arch, const char *op) {
  if (model.architecture() != arch) {
    throw std::invalid_argument(std::string(op) + " needs a " +
                                std::string(architecture_name(arch)) + " model, got " +
                                std::string(architecture_name(model.architecture())));
  }
}

void require_tokens(const std::vector<std::string> &tokens) {
  if (tokens.empty()) throw std::invalid_argument("model input has no tokens");
}

LstmWeights make_lstm(ParamStore &store, const std::string &prefix, int input_dim,
                      int hidden, Rng &rng) {
  LstmWeights w;
  w.input = store.add(prefix + ".input", {input_dim, 4 * hidden}, Init::kUniformFanIn,
                      rng, input_dim);
  w.recurrent = store.add(prefix + ".recurrent", {hidden, 4 * hidden},
                          Init::kUniformFanIn, rng, hidden);
  w.bias = store.add(prefix + ".bias", {4 * hidden}, Init::kZeros, rng);
  return w;
}

}  // namespace

std::string_view architecture_name(Architecture arch) {
  return kArchNames[static_cast<int>(arch)];
}

Architecture parse_architecture(std::string_view name) {
  for (size_t i = 0; i < kArchNames.size(); ++i) {
    if (kArchNames[i] == name) return static_cast<Architecture>(i);
  }
  throw UsageError("unknown architecture '" + std::string(name) + "'");
}

std::vector<Architecture> all_architectures() {
  return {Architecture::kCnnClassifier, Architecture::kLstmClassifier,
          Architecture::kLstmTagger,    Architecture::kLstmCrfTagger,
          Architecture::kJoint,         Architecture::kEnhancedJoint};
}

bool has_class_head(Architecture arch) {
  return arch == Architecture::kCnnClassifier || arch == Architecture::kLstmClassifier ||
         is_joint(arch);
}

bool has_slot_head(Architecture arch) {
  return arch == Architecture::kLstmTagger || arch == Architecture::kLstmCrfTagger ||
         is_joint(arch);
}

bool is_joint(Architecture arch) {
  return arch == Architecture::kJoint || arch == Architecture::kEnhancedJoint;
}

bool is_recurrent(Architecture arch) { return arch != Architecture::kCnnClassifier; }

std::string_view encoder_name(EncoderKind kind) {
  return kind == EncoderKind::kWord ? "word" : "subword";
}

EncoderKind parse_encoder(std::string_view name) {
  if (name == "word") return EncoderKind::kWord;
  if (name == "subword") return EncoderKind::kSubword;
  throw UsageError("unknown encoder '" + std::string(name) + "'");
}

ModelConfig ModelConfig::defaults(Architecture arch) {
  ModelConfig c;
  c.architecture = arch;
  switch (arch) {
    case Architecture::kCnnClassifier:
      c.encoder = EncoderKind::kWord;
      break;
    case Architecture::kLstmClassifier:
      c.hidden = 256;
      c.encoder = EncoderKind::kWord;
      break;
    case Architecture::kLstmTagger:
    case Architecture::kLstmCrfTagger:
      c.hidden = 100;
      c.encoder = EncoderKind::kWord;
      break;
    case Architecture::kJoint:
    case Architecture::kEnhancedJoint:
      c.hidden = 128;
      c.encoder = EncoderKind::kSubword;
      break;
  }
  return c;
}

void ModelConfig::validate() const {
  if (embedding_dim <= 0) throw UsageError("embedding_dim must be positive");
  if (is_recurrent(architecture) && hidden <= 0) throw UsageError("hidden must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw UsageError("dropout must be in [0, 1)");
  if (architecture == Architecture::kCnnClassifier) {
    if (filter_widths.empty() || filters_per_width <= 0) {
      throw UsageError("the CNN needs filter widths and a positive filter count");
    }
    for (int w : filter_widths) {
      if (w <= 0) throw UsageError("filter widths must be positive");
    }
    if (encoder != EncoderKind::kWord) throw UsageError("the CNN uses the word encoder");
  }
  if (encoder == EncoderKind::kSubword && subword_vocab_size <= 4) {
    throw UsageError("subword_vocab_size too small");
  }
  if (class_loss_weight < 0 || slot_loss_weight < 0) {
    throw UsageError("loss weights must be non-negative");
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"architecture", architecture_name(architecture)},
          {"embedding_dim", embedding_dim},
          {"hidden", hidden},
          {"filter_widths", filter_widths},
          {"filters_per_width", filters_per_width},
          {"dropout", dropout},
          {"encoder", encoder_name(encoder)},
          {"subword_vocab_size", subword_vocab_size},
          {"class_loss_weight", class_loss_weight},
          {"slot_loss_weight", slot_loss_weight}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json &j) {
  ModelConfig c = defaults(parse_architecture(j.at("architecture").get<std::string>()));
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.filter_widths = j.value("filter_widths", c.filter_widths);
  c.filters_per_width = j.value("filters_per_width", c.filters_per_width);
  c.dropout = j.value("dropout", c.dropout);
  c.encoder = parse_encoder(j.value("encoder", std::string(encoder_name(c.encoder))));
  c.subword_vocab_size = j.value("subword_vocab_size", c.subword_vocab_size);
  c.class_loss_weight = j.value("class_loss_weight", c.class_loss_weight);
  c.slot_loss_weight = j.value("slot_loss_weight", c.slot_loss_weight);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

Model::Model(ModelConfig config, const Corpus &train, uint64_t seed)
    : config_(std::move(config)), seed_(seed) {
  config_.validate();
  words_ = WordVocab::build(train);
  if (config_.encoder == EncoderKind::kSubword) {
    subwords_ = build_vocab(train, config_.subword_vocab_size);
  }
  init_params();
}

Model::Model(ModelConfig config, WordVocab words, SubwordVocab subwords, uint64_t seed)
    : config_(std::move(config)), words_(std::move(words)),
      subwords_(std::move(subwords)), seed_(seed) {
  config_.validate();
  init_params();
}

int Model::token_state_dim() const { return 2 * config_.hidden; }
int Model::sentence_state_dim() const { return 2 * config_.hidden; }

void Model::init_params() {
  Rng rng(derive_seed(seed_, 0x1417));
  const int vocab = config_.encoder == EncoderKind::kSubword ? subwords_.size()
                                                             : words_.size();
  const int e = config_.embedding_dim;
  params_.add("embedding", {vocab, e}, Init::kNormalEmbedding, rng);

  const Architecture arch = config_.architecture;
  if (arch == Architecture::kCnnClassifier) {
    for (int w : config_.filter_widths) {
      const std::string prefix = "conv" + std::to_string(w);
      params_.add(prefix + ".filters", {config_.filters_per_width, w * e},
                  Init::kUniformFanIn, rng, w * e);
      params_.add(prefix + ".bias", {config_.filters_per_width}, Init::kZeros, rng);
    }
    const int pooled = config_.filters_per_width * static_cast<int>(config_.filter_widths.size());
    params_.add("class_head.weight", {kNumClasses, pooled}, Init::kUniformFanIn, rng);
    params_.add("class_head.bias", {kNumClasses}, Init::kZeros, rng);
    return;
  }

  encoder_.forward = make_lstm(params_, "encoder.fwd", e, config_.hidden, rng);
  encoder_.backward = make_lstm(params_, "encoder.bwd", e, config_.hidden, rng);
  if (has_class_head(arch)) {
    params_.add("class_head.weight", {kNumClasses, sentence_state_dim()},
                Init::kUniformFanIn, rng);
    params_.add("class_head.bias", {kNumClasses}, Init::kZeros, rng);
  }
  if (has_slot_head(arch)) {
    const int width = arch == Architecture::kEnhancedJoint
                          ? token_state_dim() + sentence_state_dim()
                          : token_state_dim();
    params_.add("slot_head.weight", {kNumTags, width}, Init::kUniformFanIn, rng);
    params_.add("slot_head.bias", {kNumTags}, Init::kZeros, rng);
  }
  if (arch == Architecture::kLstmCrfTagger) {
    crf_ = CrfParams::create(params_, "crf", kNumTags, rng);
  }
}

EncoderOutput Model::encode(const std::vector<std::string> &tokens, bool training,
                            Rng *rng) const {
  require_tokens(tokens);
  if (config_.architecture == Architecture::kCnnClassifier) {
    throw std::invalid_argument("the CNN classifier has no recurrent encoder");
  }
  const Tensor table = params_.get("embedding");
  EncoderOutput out;
  if (config_.encoder == EncoderKind::kWord) {
    const BiLstmOutput lstm = bilstm(embedding_lookup(words_.ids(tokens), table), encoder_);
    out.token_states = lstm.states;
    out.sentence_state = concat(lstm.final_forward, lstm.final_backward);
  } else {
    const AlignedTokens aligned = align(tokens, subwords_);
    const BiLstmOutput lstm = bilstm(embedding_lookup(aligned.ids, table), encoder_);
    out.token_states = gather_rows(lstm.states, aligned.alignment.first_subtoken_index);
    out.sentence_state = concat(lstm.final_forward, lstm.final_backward);
  }
  out.token_states = dropout(out.token_states, config_.dropout, training, rng);
  out.sentence_state = dropout(out.sentence_state, config_.dropout, training, rng);
  return out;
}

Tensor Model::class_logits_from(const Tensor &sentence_state) const {
  return affine(sentence_state, params_.get("class_head.weight"),
                params_.get("class_head.bias"));
}

JointOutput Model::forward(const std::vector<std::string> &tokens, bool training,
                           Rng *rng) const {
  require_tokens(tokens);
  JointOutput out;
  out.num_tokens = static_cast<int>(tokens.size());
  const Architecture arch = config_.architecture;

  if (arch == Architecture::kCnnClassifier) {
    std::vector<int> ids = words_.ids(tokens);
    const int min_len = min_cnn_length(config_);
    if (static_cast<int>(ids.size()) < min_len) ids.resize(min_len, WordVocab::kPadId);
    const Tensor x = embedding_lookup(ids, params_.get("embedding"));
    Tensor pooled;
    for (int w : config_.filter_widths) {
      const std::string prefix = "conv" + std::to_string(w);
      const Tensor maps = relu(conv_window(x, params_.get(prefix + ".filters"),
                                           params_.get(prefix + ".bias"), w));
      const Tensor p = max_pool_over_time(maps);
      pooled = pooled.defined() ? concat(pooled, p) : p;
    }
    pooled = dropout(pooled, config_.dropout, training, rng);
    out.class_logits = class_logits_from(pooled);
    out.class_probs = softmax(out.class_logits.values());
    return out;
  }

  const EncoderOutput enc = encode(tokens, training, rng);
  if (has_class_head(arch)) {
    out.class_logits = class_logits_from(enc.sentence_state);
    out.class_probs = softmax(out.class_logits.values());
  }
  if (has_slot_head(arch)) {
    const Tensor features = arch == Architecture::kEnhancedJoint
                                ? concat_to_rows(enc.token_states, enc.sentence_state)
                                : enc.token_states;
    out.tag_logits = affine(features, params_.get("slot_head.weight"),
                            params_.get("slot_head.bias"));
    out.tag_probs.resize(static_cast<size_t>(out.num_tokens) * kNumTags);
    for (int i = 0; i < out.num_tokens; ++i) {
      const auto row = softmax(out.tag_logits.values().subspan(
          static_cast<size_t>(i) * kNumTags, kNumTags));
      std::copy(row.begin(), row.end(), out.tag_probs.begin() + static_cast<size_t>(i) * kNumTags);
    }
  }
  return out;
}

Tensor Model::loss(const Tweet &tweet, bool training, Rng *rng) const {
  const JointOutput out = forward(tweet.tokens, training, rng);
  switch (config_.architecture) {
    case Architecture::kCnnClassifier:
    case Architecture::kLstmClassifier:
      return softmax_xent(out.class_logits, static_cast<int>(tweet.label)).loss;
    case Architecture::kLstmTagger:
      return softmax_xent_rows(out.tag_logits, gold_tag_ids(tweet)).loss;
    case Architecture::kLstmCrfTagger:
      return crf_nll(out.tag_logits, *crf_, gold_tag_ids(tweet));
    case Architecture::kJoint:
    case Architecture::kEnhancedJoint:
      return joint_loss(out, tweet.label, gold_tag_ids(tweet), config_.class_loss_weight,
                        config_.slot_loss_weight);
  }
  throw std::logic_error("unhandled architecture");
}

CrfWeights Model::crf_weights() const {
  if (!crf_) throw std::invalid_argument("model has no CRF layer");
  return crf_->weights();
}

Prediction Model::predict(const std::vector<std::string> &tokens,
                          const PredictOptions &options) const {
  const JointOutput out = forward(tokens, false, nullptr);
  Prediction p;
  if (has_class_head(config_.architecture)) {
    p.class_probs = out.class_probs;
    p.label = class_from_probs(out.class_probs);
  }
  if (!has_slot_head(config_.architecture)) return p;

  const TransitionMask mask = TransitionMask::bio();
  const TransitionMask *mask_ptr = options.constrained_decode ? &mask : nullptr;
  std::vector<int> ids;
  if (crf_) {
    ids = viterbi(EmissionMatrix::from_tensor(out.tag_logits), crf_->weights(), mask_ptr).tags;
  } else if (options.constrained_decode) {
    // Best legal sequence under independent per-token log-probabilities.
    EmissionMatrix logp{out.num_tokens, kNumTags, out.tag_probs};
    for (double &v : logp.scores) v = std::log(v);
    ids = viterbi(logp, CrfWeights::zeros(kNumTags), mask_ptr).tags;
  } else {
    for (int i = 0; i < out.num_tokens; ++i) {
      const auto row = out.tag_row(i);
      ids.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
    }
  }
  TagSequence tags;
  for (int id : ids) tags.push_back(tag_from_index(id));
  p.spans = decode_tags(tags);
  p.tags = std::move(tags);
  if (options.suppress_spans_if_non_traffic && p.label == ClassLabel::kNonTraffic) {
    p.spans.clear();
  }
  return p;
}

nlohmann::json Model::to_json() const {
  nlohmann::json j;
  j["architecture"] = architecture_name(config_.architecture);
  j["config"] = config_.to_json();
  j["word_vocab"] = words_.entries();
  std::vector<std::string> pieces(subwords_.pieces().begin() + 4, subwords_.pieces().end());
  j["subword_vocab"] = pieces;
  j["tag_order"] = tag_inventory();
  j["seed"] = seed_;
  j["params"] = params_.to_json();
  return j;
}

Model Model::from_json(const nlohmann::json &j) {
  try {
    if (j.at("tag_order").get<std::vector<std::string>>() != tag_inventory()) {
      throw DataError("checkpoint tag order differs from this build's tag inventory");
    }
    ModelConfig config = ModelConfig::from_json(j.at("config"));
    Model model(config, WordVocab(j.at("word_vocab").get<std::vector<std::string>>()),
                SubwordVocab(j.at("subword_vocab").get<std::vector<std::string>>()),
                j.at("seed").get<uint64_t>());
    model.params_.load_json(j.at("params"));
    return model;
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

std::vector<double> cnn_classify(const Model &model, const std::vector<std::string> &tokens) {
  require_arch(model, Architecture::kCnnClassifier, "cnn_classify");
  return model.forward(tokens, false, nullptr).class_probs;
}

std::vector<double> lstm_classify(const Model &model, const std::vector<std::string> &tokens) {
  require_arch(model, Architecture::kLstmClassifier, "lstm_classify");
  return model.forward(tokens, false, nullptr).class_probs;
}

std::vector<double> lstm_tag(const Model &model, const std::vector<std::string> &tokens) {
  require_arch(model, Architecture::kLstmTagger, "lstm_tag");
  return model.forward(tokens, false, nullptr).tag_probs;
}

TagSequence lstm_crf_tag(const Model &model, const std::vector<std::string> &tokens,
                         bool constrained_decode) {
  require_arch(model, Architecture::kLstmCrfTagger, "lstm_crf_tag");
  return *model.predict(tokens, {constrained_decode, false}).tags;
}

JointOutput joint_forward(const Model &model, const std::vector<std::string> &tokens) {
  require_arch(model, Architecture::kJoint, "joint_forward");
  return model.forward(tokens, false, nullptr);
}

JointOutput enhanced_joint_forward(const Model &model, const std::vector<std::string> &tokens) {
  require_arch(model, Architecture::kEnhancedJoint, "enhanced_joint_forward");
  return model.forward(tokens, false, nullptr);
}

Tensor joint_loss(const JointOutput &output, ClassLabel gold_class,
                  const std::vector<int> &gold_tags, double class_weight,
                  double slot_weight) {
  if (!output.class_logits.defined() || !output.tag_logits.defined()) {
    throw std::invalid_argument("joint_loss needs both class and tag logits");
  }
  const Tensor class_loss = softmax_xent(output.class_logits, static_cast<int>(gold_class)).loss;
  const Tensor slot_loss = softmax_xent_rows(output.tag_logits, gold_tags).loss;
  return add(scale(class_loss, class_weight), scale(slot_loss, slot_weight));
}

Prediction predict(const Model &model, const Tweet &tweet, const PredictOptions &options) {
  return model.predict(tweet.tokens, options);
}

std::vector<int> gold_tag_ids(const Tweet &tweet) {
  const TagSequence tags = encode_spans(static_cast<int>(tweet.tokens.size()), tweet.spans);
  std::vector<int> ids;
  ids.reserve(tags.size());
  for (const BioTag &t : tags) ids.push_back(tag_index(t));
  return ids;
}

ClassLabel class_from_probs(std::span<const double> probs) {
  return probs[static_cast<int>(ClassLabel::kTraffic)] >
                 probs[static_cast<int>(ClassLabel::kNonTraffic)]
             ? ClassLabel::kTraffic
             : ClassLabel::kNonTraffic;
}

}  // namespace tev
