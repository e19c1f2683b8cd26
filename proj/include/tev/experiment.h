#ifndef TEV_EXPERIMENT_H_
#define TEV_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tev/config.h"
#include "tev/corpus.h"
#include "tev/metrics.h"
#include "tev/models.h"

namespace tev {

struct DataBundle {
  Corpus train;
  Corpus dev;
  Corpus test;
};

// Loads, splits or generates the corpora named by the config. Paths are
// checked before anything is read.
DataBundle load_data(const ExperimentConfig &config);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-tweet loss over the epoch
  std::optional<MetricReport> dev;  // only at candidate epochs
  std::optional<double> dev_score;
};

struct RunLog {
  std::string config_hash;
  std::string architecture;
  uint64_t seed = 0;
  std::string criterion;
  std::vector<int> candidates;
  std::vector<EpochRecord> epochs;
  int selected_epoch = 0;
  double selected_dev_score = 0.0;
  std::optional<MetricReport> test;
  // Wall-clock data is kept apart so logs from identical runs compare equal
  // once this field is dropped.
  nlohmann::ordered_json timing;

  nlohmann::ordered_json to_json(bool include_timing = true) const;
};

// Name of the dev criterion used for epoch selection: sen_acc for joint
// models, f1c for classifiers, f1s for taggers.
std::string selection_criterion(Architecture arch);
double criterion_value(const MetricReport &report, Architecture arch);

struct TrainResult {
  Model model;
  RunLog log;
};

using EpochCallback = std::function<void(const EpochRecord &)>;

// Trains up to the largest candidate epoch count, evaluating dev at each
// candidate and keeping the best weights (ties go to the earlier epoch).
// Throws DivergenceError on a non-finite loss or gradient.
TrainResult train(const ExperimentConfig &config, const DataBundle &data,
                  const EpochCallback &on_epoch = {});

PredictOptions predict_options(const ExperimentConfig &config);

// Predictions in input order. With threads > 1 the corpus is cut into
// contiguous chunks, one per worker, over the same read-only model.
std::vector<Prediction> predict_corpus(const Model &model, const Corpus &corpus,
                                       const PredictOptions &options, int threads = 1);

// Metrics for the heads the architecture has.
MetricReport build_report(Architecture arch, const std::string &corpus_name,
                          const std::vector<Prediction> &predictions, const Corpus &gold);

// Throws DataError when the corpus shares no token with the model's
// vocabulary.
void check_compatible(const Model &model, const Corpus &corpus);

MetricReport evaluate(const Model &model, const Corpus &corpus,
                      const PredictOptions &options, int threads = 1);

struct Checkpoint {
  Model model;
  ExperimentConfig config;
  std::string config_hash;
};

nlohmann::json checkpoint_json(const Model &model, const ExperimentConfig &config);
void save_checkpoint(const std::filesystem::path &path, const Model &model,
                     const ExperimentConfig &config);
// Throws DataError on a malformed or incompatible checkpoint.
Checkpoint load_checkpoint(const std::filesystem::path &path);

void write_text(const std::filesystem::path &path, const std::string &text);

}  // namespace tev

#endif  // TEV_EXPERIMENT_H_
