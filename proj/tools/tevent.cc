// tevent: generate corpora, train, evaluate, transfer and predict.
//
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 training divergence.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tev/config.h"
#include "tev/corpus.h"
#include "tev/errors.h"
#include "tev/experiment.h"
#include "tev/metrics.h"
#include "tev/models.h"

namespace {

using namespace tev;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

struct GenerateArgs {
  int size = 1000;
  double traffic = 0.5;
  std::string region = "bru";
  double overlap = 0.7;
  int pool = 20;
  double url_rate = 0.3;
  std::optional<uint64_t> seed;
  std::string out = ".";
  std::string name;
};

struct TrainArgs {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
  bool constrained = false;
  std::optional<int> threads;
};

struct EvalArgs {
  std::string checkpoint;
  std::string corpus;
  std::optional<std::string> format;
  std::optional<std::string> out;
  bool constrained = false;
  int threads = 1;
};

struct PredictArgs {
  std::string checkpoint;
  std::string input;
  std::optional<std::string> out;
  bool constrained = false;
};

int cmd_generate(const GenerateArgs &a) {
  if (!a.seed) throw UsageError("generate: --seed is required");
  if (a.size <= 0) throw UsageError("generate: --size must be positive");
  GeneratorConfig g;
  Corpus corpus;
  // Bad generator settings are the caller's mistake, so they map to usage.
  try {
    g.size = a.size;
    g.traffic_fraction = a.traffic;
    g.region = parse_region(a.region);
    g.location_overlap = a.overlap;
    g.location_pool_size = a.pool;
    g.url_rate = a.url_rate;
    g.name = a.name.empty() ? lowercase(region_name(g.region)) : a.name;
    corpus = generate_synthetic(g, *a.seed);
  } catch (const UsageError &) {
    throw;
  } catch (const DataError &e) {
    throw UsageError(std::string("generate: ") + e.what());
  }
  const std::filesystem::path dir(a.out);
  const auto jsonl = dir / (g.name + ".jsonl");
  const auto conll = dir / (g.name + ".conll");
  write_text(jsonl, serialize_corpus(corpus, CorpusFormat::kJsonl));
  write_text(conll, serialize_corpus(corpus, CorpusFormat::kConll));
  const CorpusStats stats = corpus_stats(corpus);
  std::cout << "wrote " << corpus.size() << " tweets (" << stats.count(ClassLabel::kTraffic)
            << " traffic) to " << jsonl.string() << " and " << conll.string() << "\n";
  return 0;
}

int cmd_train(const TrainArgs &a) {
  ExperimentConfig config = ExperimentConfig::load(a.config);
  if (a.seed) config.seed = *a.seed;
  if (a.out) config.out_dir = *a.out;
  if (a.constrained) config.constrained_decode = true;
  if (a.threads) config.threads = *a.threads;
  config.validate();

  const DataBundle data = load_data(config);
  std::cerr << "train " << architecture_name(config.model.architecture) << ": "
            << data.train.size() << " train / " << data.dev.size() << " dev / "
            << data.test.size() << " test, config " << config.hash() << "\n";
  TrainResult result = train(config, data, [](const EpochRecord &e) {
    std::cerr << "epoch " << e.epoch << " loss " << e.train_loss;
    if (e.dev_score) std::cerr << " dev " << *e.dev_score;
    std::cerr << "\n";
  });

  const std::filesystem::path out = config.out_dir;
  save_checkpoint(out / "checkpoint.json", result.model, config);
  write_text(out / "run_log.json", result.log.to_json().dump(2) + "\n");
  write_text(out / "config.txt", config.serialize());
  write_text(out / "test_report.json", result.log.test->to_json().dump(2) + "\n");
  std::cout << "selected epoch " << result.log.selected_epoch << " (dev "
            << result.log.criterion << " " << result.log.selected_dev_score << ")\n"
            << result.log.test->table();
  return 0;
}

Corpus read_corpus(const std::string &path, const std::optional<std::string> &format) {
  if (!std::filesystem::exists(path)) throw DataError("corpus file not found: " + path);
  const CorpusFormat f = format ? parse_format(*format) : format_for_path(path);
  return load_corpus(path, f);
}

int cmd_eval(const EvalArgs &a, const char *verb) {
  Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const Corpus corpus = read_corpus(a.corpus, a.format);
  PredictOptions options = predict_options(ckpt.config);
  if (a.constrained) options.constrained_decode = true;
  const MetricReport report = evaluate(ckpt.model, corpus, options, a.threads);
  if (a.out) write_text(std::filesystem::path(*a.out) / (std::string(verb) + "_report.json"),
                        report.to_json().dump(2) + "\n");
  std::cout << report.table() << report.to_json().dump(2) << "\n";
  return 0;
}

nlohmann::ordered_json prediction_json(const std::string &id, const std::string &text,
                                       const std::vector<std::string> &tokens,
                                       const Prediction &p) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["text"] = text;
  j["tokens"] = tokens;
  if (p.label) {
    j["label"] = std::string(class_label_name(*p.label));
    j["class_probs"] = p.class_probs;
  }
  if (p.tags) {
    std::vector<std::string> names;
    for (const BioTag &t : *p.tags) names.push_back(tag_name(t));
    j["tags"] = names;
  }
  nlohmann::ordered_json spans = nlohmann::ordered_json::array();
  for (const SlotSpan &s : p.spans) {
    std::string words;
    for (int i = s.start; i < s.end; ++i) words += (i > s.start ? " " : "") + tokens[i];
    spans.push_back({{"type", std::string(slot_type_name(s.type))},
                     {"start", s.start},
                     {"end", s.end},
                     {"text", words}});
  }
  j["spans"] = spans;
  return j;
}

int cmd_predict(const PredictArgs &a) {
  Checkpoint ckpt = load_checkpoint(a.checkpoint);
  std::ifstream in(a.input, std::ios::binary);
  if (!in) throw DataError("cannot read input " + a.input);
  PredictOptions options = predict_options(ckpt.config);
  if (a.constrained) options.constrained_decode = true;

  std::ostringstream out;
  std::string line;
  int line_no = 0, written = 0, skipped = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string id = j.at("id").get<std::string>();
      const std::string text = j.at("text").get<std::string>();
      const std::vector<std::string> tokens = normalize_tweet(text);
      out << prediction_json(id, text, tokens, ckpt.model.predict(tokens, options)).dump()
          << "\n";
      ++written;
    } catch (const std::exception &e) {
      std::cerr << "warning: line " << line_no << " skipped: " << e.what() << "\n";
      ++skipped;
    }
  }
  if (a.out) {
    write_text(std::filesystem::path(*a.out) / "predictions.jsonl", out.str());
  } else {
    std::cout << out.str();
  }
  if (skipped > 0) {
    std::cerr << written << " predicted, " << skipped << " malformed lines skipped\n";
    return kExitData;
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Traffic event detection: corpora, training and evaluation"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto *generate = app.add_subcommand("generate", "Write a synthetic corpus as JSONL and CoNLL");
  generate->add_option("--size", gen.size, "Number of tweets");
  generate->add_option("--traffic", gen.traffic, "Fraction of traffic tweets");
  generate->add_option("--region", gen.region, "bru or be");
  generate->add_option("--overlap", gen.overlap, "Location vocabulary shared between regions");
  generate->add_option("--pool", gen.pool, "Location names per region");
  generate->add_option("--url-rate", gen.url_rate, "Probability of a trailing URL");
  generate->add_option("--seed", gen.seed, "Random seed")->required();
  generate->add_option("--out", gen.out, "Output directory");
  generate->add_option("--name", gen.name, "File stem (defaults to the region)");

  TrainArgs tr;
  auto *train_cmd = app.add_subcommand("train", "Train a model from a config file");
  train_cmd->add_option("--config", tr.config, "Flat key = value config")->required();
  train_cmd->add_option("--seed", tr.seed, "Override the config seed");
  train_cmd->add_option("--out", tr.out, "Override the output directory");
  train_cmd->add_flag("--constrained-decode", tr.constrained, "BIO-constrained tag decoding");
  train_cmd->add_option("--threads", tr.threads, "Evaluation worker threads");

  EvalArgs ev, tf;
  auto add_eval = [](CLI::App *cmd, EvalArgs &e) {
    cmd->add_option("--checkpoint", e.checkpoint, "Checkpoint written by train")->required();
    cmd->add_option("--corpus", e.corpus, "Gold corpus")->required();
    cmd->add_option("--format", e.format, "jsonl or conll (default: from extension)")
        ->check(CLI::IsMember({"jsonl", "conll"}));
    cmd->add_option("--out", e.out, "Directory for the JSON report");
    cmd->add_flag("--constrained-decode", e.constrained, "BIO-constrained tag decoding");
    cmd->add_option("--threads", e.threads, "Worker threads");
  };
  auto *eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus");
  add_eval(eval_cmd, ev);
  auto *transfer_cmd =
      app.add_subcommand("transfer", "Evaluate on another region's corpus, no adaptation");
  add_eval(transfer_cmd, tf);

  PredictArgs pr;
  auto *predict_cmd = app.add_subcommand("predict", "Annotate raw tweets (JSONL id + text)");
  predict_cmd->add_option("--checkpoint", pr.checkpoint, "Checkpoint written by train")
      ->required();
  predict_cmd->add_option("--input", pr.input, "Input JSONL")->required();
  predict_cmd->add_option("--out", pr.out, "Output directory (default: stdout)");
  predict_cmd->add_flag("--constrained-decode", pr.constrained, "BIO-constrained tag decoding");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*generate) return cmd_generate(gen);
    if (*train_cmd) return cmd_train(tr);
    if (*eval_cmd) return cmd_eval(ev, "eval");
    if (*transfer_cmd) return cmd_eval(tf, "transfer");
    if (*predict_cmd) return cmd_predict(pr);
  } catch (const UsageError &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DivergenceError &e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const DataError &e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
