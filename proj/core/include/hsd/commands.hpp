#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hsd/ensemble.hpp"
#include "hsd/experiment.hpp"
#include "hsd/features.hpp"
#include "hsd/training.hpp"

namespace hsd {

// Raw rows of either input shape, paired with their cleaned text.
struct PipelineRow {
  std::string id;
  std::string raw_text;
  std::string text_a;
  std::optional<std::string> text_b;
  std::optional<std::size_t> label;
  bool empty_text = false;
};

// Preprocessing, features and encoding as configured for one experiment.
class TextPipeline {
 public:
  explicit TextPipeline(const ExperimentConfig& config);

  // Flat files for the tweet tasks, thread files for the conversational one.
  // With require_labels every row must carry the task's label.
  std::vector<PipelineRow> load(const std::filesystem::path& path, bool require_labels,
                                PreprocessStats* stats = nullptr) const;
  std::vector<TextSample> samples(const std::vector<PipelineRow>& rows) const;
  EncodedDataset encode(const std::vector<TextSample>& samples) const;

  const ExperimentConfig& config() const { return config_; }
  const Preprocessor& preprocessor() const { return preprocessor_; }

 private:
  ExperimentConfig config_;
  Preprocessor preprocessor_;
  ProfanityLexicon lexicon_;
  SentimentProvider sentiment_;
  ToyEncoder encoder_;
};

struct PreprocessReport {
  std::filesystem::path input;
  std::filesystem::path output;
  std::size_t rows_in = 0;
  std::size_t rows_out = 0;
  std::size_t empty_after_cleaning = 0;
  PreprocessStats stats;
};

// Cleans every row of `input` (data.train when empty) and writes the same
// format to `output`. Rows are never dropped.
PreprocessReport cmd_preprocess(const ExperimentConfig& config, const std::filesystem::path& input,
                                const std::filesystem::path& output);

struct TrainReport {
  std::filesystem::path run_dir;
  std::vector<FoldMetrics> folds;
  double mean_accuracy = 0.0;
  double mean_macro_f1 = 0.0;
  std::string config_hash;
};

// Writes into config.run_dir():
//   config.ini, run.json, metrics.json,
//   fold_<i>/checkpoint and fold_<i>/fold.json,
//   predictions.csv when data.test is set.
TrainReport cmd_train(const ExperimentConfig& config);

// The metrics.json text for a set of folds.
std::string format_metrics_json(const ExperimentConfig& config, const std::vector<FoldRun>& runs);

// A trained run loaded back from its directory.
struct TrainedRun {
  std::filesystem::path dir;
  ExperimentConfig config;
  std::vector<FoldRun> folds;
  std::size_t majority_class = 0;

  static TrainedRun load(const std::filesystem::path& dir);
  // Fold-averaged probabilities for every row of `path`.
  ProbMap predict_file(const std::filesystem::path& path, std::vector<PipelineRow>* rows = nullptr) const;
};

struct Prediction {
  std::string id;
  std::string label;
};

// model is a run directory or an ensemble spec file. Output rows follow the
// input order; empty-text rows get the majority class seen in training.
std::vector<Prediction> cmd_predict(const std::filesystem::path& model, const std::filesystem::path& input,
                                    const std::filesystem::path& output);

std::string format_predictions(const std::vector<Prediction>& predictions);
std::vector<Prediction> parse_predictions(std::string_view csv_text);

struct EvaluationReport {
  LabelKind kind = LabelKind::coarse;
  std::size_t count = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_f1;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][pred]
};

// Gold may be a flat dataset or a thread file (.json / .jsonl). The label
// kind follows the predicted labels unless given.
EvaluationReport cmd_evaluate(const std::filesystem::path& predictions, const std::filesystem::path& gold,
                              std::optional<LabelKind> kind = std::nullopt,
                              const std::filesystem::path& output = {});

std::string format_evaluation_json(const EvaluationReport& report);
std::string format_evaluation_text(const EvaluationReport& report);

}  // namespace hsd
