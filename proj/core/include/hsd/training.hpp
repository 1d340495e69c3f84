#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hsd/corpus.hpp"
#include "hsd/encoder.hpp"
#include "hsd/features.hpp"
#include "hsd/heads.hpp"
#include "hsd/losses.hpp"
#include "hsd/optim.hpp"

namespace hsd {

using ProbMap = std::map<std::string, std::vector<double>>;

// --- folds --------------------------------------------------------------------

struct FoldSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
};

// Per class, ids are shuffled with the seed and dealt round-robin across the
// folds, so each validation fold holds floor or ceil of count_c / k examples
// of class c. Ids inside a fold keep their dataset order.
std::vector<FoldSplit> stratified_kfold(const std::vector<std::string>& ids, const std::vector<std::size_t>& labels,
                                        std::size_t k, std::uint64_t seed,
                                        const std::vector<std::string>& class_names);
std::vector<FoldSplit> stratified_kfold(const std::vector<LabeledExample>& examples, std::size_t k,
                                        std::uint64_t seed, LabelKind label_kind);

// --- encoded data -------------------------------------------------------------

// One row of model input after preprocessing, feature extraction and
// encoding. text_b is the context segment for conversational inputs.
struct TextSample {
  std::string id;
  std::string text_a;
  std::optional<std::string> text_b;
  std::vector<double> features;
  std::optional<std::size_t> label;
  bool empty_text = false;
};

struct EncodedExample {
  std::string id;
  Matrix tokens;  // concat_last_k_layers output
  std::vector<double> features;
  std::vector<double> pooled;
  std::optional<std::size_t> label;
  bool empty_text = false;
};

struct EncodedDataset {
  std::vector<EncodedExample> examples;
  std::size_t num_classes = 2;

  void reindex();
  const EncodedExample& get(const std::string& id) const;
  std::size_t index_of(const std::string& id) const;

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

struct EncodingOptions {
  std::size_t layers = 4;  // k in concat_last_k_layers
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

// Results are in input order regardless of thread count. Non-reentrant
// backends are called from a single thread.
EncodedDataset encode_dataset(const std::vector<TextSample>& samples, const EncoderBackend& backend,
                              const EncodingOptions& options, std::size_t num_classes);

// --- training -----------------------------------------------------------------

enum class MonitorMetric { macro_f1, loss };

std::optional<MonitorMetric> parse_monitor(std::string_view s);
std::string_view to_string(MonitorMetric m);

struct TrainConfig {
  std::size_t k_folds = 5;
  OptimizerKind optimizer = OptimizerKind::adam;
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  std::uint64_t seed = 13;
  LossConfig loss;
  MonitorMetric monitor = MonitorMetric::macro_f1;
  bool standardize_features = false;
  std::size_t threads = 1;

  void validate(std::size_t num_classes) const;
};

struct FoldMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double loss = 0.0;
};

struct FoldRun {
  std::size_t fold_index = 0;
  HeadConfig head_config;
  ParameterSet params;  // from the best epoch
  FeatureStandardizer standardizer;
  FoldMetrics val_metrics;
  ProbMap val_probs;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;  // 1-based
  std::vector<double> epoch_scores;
  std::size_t train_size = 0;
};

// Trains one fold with early stopping on the monitored validation metric and
// returns the parameters of the best epoch. Throws NumericError on a
// non-finite loss, naming fold, epoch and batch.
FoldRun train_fold(const FoldSplit& split, std::size_t fold_index, const EncodedDataset& data,
                   const HeadConfig& head_config, const TrainConfig& config);

// All folds; folds run concurrently when config.threads > 1. Output is in
// fold order.
std::vector<FoldRun> train_kfold(const std::vector<FoldSplit>& splits, const EncodedDataset& data,
                                 const HeadConfig& head_config, const TrainConfig& config);

// Class probabilities of one trained fold for one example.
std::vector<double> predict_probs(const FoldRun& run, const Head& head, const EncodedExample& example);
ProbMap predict_dataset(const FoldRun& run, const EncodedDataset& data);

// Element-wise mean across folds. Throws ValidationError when the id sets
// differ, listing the symmetric difference.
ProbMap average_fold_probs(const std::vector<ProbMap>& per_fold);

// Sum of the values after sorting, so the mean does not depend on input order.
std::vector<double> order_free_mean(const std::vector<std::vector<double>>& rows);

}  // namespace hsd
