#include "tev/experiment.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "tev/errors.h"

namespace tev {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void step(ParamStore &params, const ExperimentConfig &config) {
  if (config.optimizer == OptimizerKind::kSgd) {
    sgd_step(params, config.learning_rate);
  } else {
    adam_step(params, config.learning_rate);
  }
}

}  // namespace

DataBundle load_data(const ExperimentConfig &config) {
  config.validate();
  config.check_paths();
  const DataSource &src = config.data;
  const uint64_t seed = config.require_seed();
  if (src.train) {
    DataBundle b{load_corpus(*src.train, format_for_path(*src.train), src.tag_policy),
                 load_corpus(*src.dev, format_for_path(*src.dev), src.tag_policy),
                 load_corpus(*src.test, format_for_path(*src.test), src.tag_policy)};
    return b;
  }
  Corpus whole;
  if (src.corpus) {
    whole = load_corpus(*src.corpus, format_for_path(*src.corpus), src.tag_policy);
  } else {
    whole = generate_synthetic(*src.generator, derive_seed(seed, 0x9e4));
  }
  CorpusSplit s = split_corpus(whole, derive_seed(seed, 0x5b1));
  return {std::move(s.train), std::move(s.dev), std::move(s.test)};
}

std::string selection_criterion(Architecture arch) {
  if (is_joint(arch)) return "sen_acc";
  return has_class_head(arch) ? "f1c" : "f1s";
}

double criterion_value(const MetricReport &report, Architecture arch) {
  if (is_joint(arch)) return report.sen_acc.value_or(0.0);
  if (has_class_head(arch)) return report.classification ? report.classification->f1 : 0.0;
  return report.slots ? report.slots->f1 : 0.0;
}

nlohmann::ordered_json RunLog::to_json(bool include_timing) const {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash;
  j["architecture"] = architecture;
  j["seed"] = seed;
  j["criterion"] = criterion;
  j["candidates"] = candidates;
  nlohmann::ordered_json per_epoch = nlohmann::ordered_json::array();
  for (const EpochRecord &e : epochs) {
    nlohmann::ordered_json r;
    r["epoch"] = e.epoch;
    r["train_loss"] = e.train_loss;
    if (e.dev) r["dev"] = e.dev->to_json();
    if (e.dev_score) r["dev_score"] = *e.dev_score;
    per_epoch.push_back(r);
  }
  j["epochs"] = per_epoch;
  j["selected_epoch"] = selected_epoch;
  j["selected_dev_score"] = selected_dev_score;
  if (test) j["test"] = test->to_json();
  if (include_timing) j["timing"] = timing;
  return j;
}

PredictOptions predict_options(const ExperimentConfig &config) {
  return {config.constrained_decode, config.suppress_spans_if_non_traffic};
}

TrainResult train(const ExperimentConfig &config, const DataBundle &data,
                  const EpochCallback &on_epoch) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const std::string started_at = utc_now();
  const uint64_t seed = config.require_seed();
  const Architecture arch = config.model.architecture;
  if (data.train.tweets.empty()) throw DataError("training corpus is empty");

  Model model(config.model, data.train, seed);
  RunLog log;
  log.config_hash = config.hash();
  log.architecture = std::string(architecture_name(arch));
  log.seed = seed;
  log.criterion = selection_criterion(arch);
  log.candidates = config.epochs;
  std::sort(log.candidates.begin(), log.candidates.end());
  log.candidates.erase(std::unique(log.candidates.begin(), log.candidates.end()),
                       log.candidates.end());
  const int max_epoch = log.candidates.back();

  const PredictOptions options = predict_options(config);
  std::vector<size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  ParamStore &params = model.params();
  params.zero_grad();

  std::optional<ParamStore::Snapshot> best;
  double best_score = -1.0;
  int best_epoch = 0;
  double train_seconds = 0.0, eval_seconds = 0.0;

  for (int epoch = 1; epoch <= max_epoch; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    Rng shuffle_rng(derive_seed(seed, 0x10000 + static_cast<uint64_t>(epoch)));
    Rng dropout_rng(derive_seed(seed, 0x20000 + static_cast<uint64_t>(epoch)));
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    for (size_t b = 0; b < order.size(); b += static_cast<size_t>(config.batch_size)) {
      const size_t end = std::min(order.size(), b + static_cast<size_t>(config.batch_size));
      const double inv = 1.0 / static_cast<double>(end - b);
      for (size_t k = b; k < end; ++k) {
        const Tweet &tweet = data.train.tweets[order[k]];
        Tensor loss = model.loss(tweet, true, &dropout_rng);
        const double value = loss.item();
        if (!std::isfinite(value)) {
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) +
                                " on tweet " + tweet.id);
        }
        loss_sum += value;
        backward(scale(loss, inv));
      }
      if (!params.grads_finite()) {
        throw DivergenceError("non-finite gradient at epoch " + std::to_string(epoch));
      }
      if (config.clip_norm > 0) params.clip_grad_norm(config.clip_norm);
      step(params, config);
      params.zero_grad();
    }
    train_seconds += seconds_since(epoch_start);

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(order.size());
    if (std::binary_search(log.candidates.begin(), log.candidates.end(), epoch)) {
      const auto eval_start = std::chrono::steady_clock::now();
      record.dev = evaluate(model, data.dev, options, config.threads);
      record.dev_score = criterion_value(*record.dev, arch);
      eval_seconds += seconds_since(eval_start);
      if (*record.dev_score > best_score) {
        best_score = *record.dev_score;
        best_epoch = epoch;
        best = params.snapshot();
      }
    }
    if (on_epoch) on_epoch(record);
    log.epochs.push_back(std::move(record));
  }

  params.restore(*best);
  log.selected_epoch = best_epoch;
  log.selected_dev_score = best_score;
  const auto test_start = std::chrono::steady_clock::now();
  log.test = evaluate(model, data.test, options, config.threads);
  eval_seconds += seconds_since(test_start);
  log.timing = {{"started_at", started_at},
                {"train_seconds", train_seconds},
                {"eval_seconds", eval_seconds},
                {"wall_seconds", seconds_since(started)}};
  return {std::move(model), std::move(log)};
}

std::vector<Prediction> predict_corpus(const Model &model, const Corpus &corpus,
                                       const PredictOptions &options, int threads) {
  std::vector<Prediction> out(corpus.size());
  const size_t n = corpus.size();
  const size_t workers = std::max<size_t>(1, std::min<size_t>(threads, n));
  auto run = [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) out[i] = model.predict(corpus.tweets[i].tokens, options);
  };
  if (workers == 1) {
    run(0, n);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const size_t chunk = (n + workers - 1) / workers;
  for (size_t w = 0; w < workers; ++w) {
    const size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    pool.emplace_back([&, w, lo, hi] {
      try {
        run(lo, hi);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : pool) t.join();
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

MetricReport build_report(Architecture arch, const std::string &corpus_name,
                          const std::vector<Prediction> &predictions, const Corpus &gold) {
  if (predictions.size() != gold.size()) {
    throw std::invalid_argument("build_report: prediction count does not match corpus");
  }
  MetricReport r;
  r.architecture = std::string(architecture_name(arch));
  r.corpus = corpus_name;
  std::vector<ClassLabel> pred_c, gold_c;
  SpanSets pred_s, gold_s;
  for (size_t i = 0; i < gold.size(); ++i) {
    const Tweet &t = gold.tweets[i];
    const Prediction &p = predictions[i];
    gold_c.push_back(t.label);
    gold_s.push_back(t.spans);
    pred_c.push_back(p.label.value_or(ClassLabel::kNonTraffic));
    pred_s.push_back(p.spans);
    r.support.sentences += 1;
    r.support.gold_traffic += t.label == ClassLabel::kTraffic;
    r.support.pred_traffic += p.label == ClassLabel::kTraffic;
    r.support.gold_spans += static_cast<int64_t>(t.spans.size());
    if (has_slot_head(arch)) r.support.pred_spans += static_cast<int64_t>(p.spans.size());
  }
  if (gold.size() == 0) return r;
  if (has_class_head(arch)) {
    r.classification = classification_f1(pred_c, gold_c);
    r.f1c_macro = classification_macro_f1(pred_c, gold_c);
  }
  if (has_slot_head(arch)) {
    r.slots = span_f1(pred_s, gold_s);
    r.slots_by_type = span_f1_by_type(pred_s, gold_s);
  }
  if (is_joint(arch)) r.sen_acc = sentence_accuracy(pred_c, pred_s, gold_c, gold_s);
  return r;
}

void check_compatible(const Model &model, const Corpus &corpus) {
  const bool subword = model.config().encoder == EncoderKind::kSubword;
  for (const Tweet &t : corpus.tweets) {
    for (const std::string &tok : t.tokens) {
      if (subword ? tokenize(tok, model.subword_vocab()).front() != "[UNK]"
                  : model.word_vocab().contains(tok)) {
        return;
      }
    }
  }
  if (!corpus.tweets.empty()) {
    throw DataError("vocabulary mismatch: no token of corpus '" + corpus.name +
                    "' is known to the model");
  }
}

MetricReport evaluate(const Model &model, const Corpus &corpus, const PredictOptions &options,
                      int threads) {
  check_compatible(model, corpus);
  return build_report(model.architecture(), corpus.name,
                      predict_corpus(model, corpus, options, threads), corpus);
}

nlohmann::json checkpoint_json(const Model &model, const ExperimentConfig &config) {
  nlohmann::json j;
  j["format"] = "tev-checkpoint";
  j["version"] = 1;
  j["config_hash"] = config.hash();
  j["config"] = config.serialize();
  j["model"] = model.to_json();
  return j;
}

void write_text(const std::filesystem::path &path, const std::string &text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

void save_checkpoint(const std::filesystem::path &path, const Model &model,
                     const ExperimentConfig &config) {
  write_text(path, checkpoint_json(model, config).dump() + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw DataError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != "tev-checkpoint" || j.value("version", 0) != 1) {
    throw DataError("checkpoint " + path.string() + " has an unknown format");
  }
  try {
    ExperimentConfig config = ExperimentConfig::parse(j.at("config").get<std::string>());
    Model model = Model::from_json(j.at("model"));
    return {std::move(model), std::move(config), j.at("config_hash").get<std::string>()};
  } catch (const nlohmann::json::exception &e) {
    throw DataError("checkpoint " + path.string() + " is malformed: " + e.what());
  }
}

}  // namespace tev
