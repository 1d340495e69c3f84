#include "hsd/training.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "hsd/error.hpp"
#include "hsd/metrics.hpp"
#include "hsd/random.hpp"

namespace hsd {

// --- folds --------------------------------------------------------------------

std::vector<FoldSplit> stratified_kfold(const std::vector<std::string>& ids, const std::vector<std::size_t>& labels,
                                        std::size_t k, std::uint64_t seed,
                                        const std::vector<std::string>& class_names) {
  if (ids.size() != labels.size()) throw ValidationError("stratified_kfold: ids and labels differ in length");
  if (k < 2) throw ValidationError("stratified_kfold: k must be >= 2");
  std::size_t num_classes = class_names.size();
  for (auto l : labels) num_classes = std::max(num_classes, l + 1);
  auto name_of = [&](std::size_t c) { return c < class_names.size() ? class_names[c] : std::to_string(c); };

  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (std::size_t c = 0; c < num_classes; ++c) {
    // Classes that never occur do not constrain k.
    if (!by_class[c].empty() && by_class[c].size() < k) {
      throw ValidationError("k=" + std::to_string(k) + " exceeds the " + std::to_string(by_class[c].size()) +
                            " examples of class " + name_of(c));
    }
  }

  std::vector<std::size_t> fold_of(ids.size());
  Rng rng(seed);
  std::size_t offset = 0;
  for (auto& members : by_class) {
    rng.shuffle(members);
    for (std::size_t j = 0; j < members.size(); ++j) fold_of[members[j]] = (offset + j) % k;
    offset = (offset + members.size()) % k;
  }
  std::vector<FoldSplit> folds(k);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      (fold_of[i] == f ? folds[f].val_ids : folds[f].train_ids).push_back(ids[i]);
    }
  }
  return folds;
}

std::vector<FoldSplit> stratified_kfold(const std::vector<LabeledExample>& examples, std::size_t k,
                                        std::uint64_t seed, LabelKind label_kind) {
  std::vector<std::string> ids;
  std::vector<std::size_t> labels;
  for (const auto& ex : examples) {
    auto l = ex.label_index(label_kind);
    if (!l) throw ValidationError("example '" + ex.id + "' has no " + std::string(to_string(label_kind)) + " label");
    ids.push_back(ex.id);
    labels.push_back(*l);
  }
  return stratified_kfold(ids, labels, k, seed, class_names(label_kind));
}

// --- encoded data -------------------------------------------------------------

void EncodedDataset::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!index_.emplace(examples[i].id, i).second) {
      throw ValidationError("duplicate id '" + examples[i].id + "' in encoded dataset");
    }
  }
}

std::size_t EncodedDataset::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ValidationError("unknown example id '" + id + "'");
  return it->second;
}

const EncodedExample& EncodedDataset::get(const std::string& id) const { return examples[index_of(id)]; }

EncodedDataset encode_dataset(const std::vector<TextSample>& samples, const EncoderBackend& backend,
                              const EncodingOptions& options, std::size_t num_classes) {
  EncodedDataset data;
  data.num_classes = num_classes;
  data.examples.resize(samples.size());
  auto encode_one = [&](std::size_t i) {
    const TextSample& s = samples[i];
    std::optional<std::string_view> b;
    if (s.text_b) b = *s.text_b;
    EncoderOutput out = encode(backend, s.text_a, b, options.seed);
    EncodedExample& e = data.examples[i];
    e.id = s.id;
    e.tokens = concat_last_k_layers(out, options.layers);
    e.features = s.features;
    e.pooled = std::move(out.pooled);
    e.label = s.label;
    e.empty_text = s.empty_text;
  };
  const std::size_t threads = backend.reentrant() ? std::max<std::size_t>(1, options.threads) : 1;
  if (threads == 1 || samples.size() < 2) {
    for (std::size_t i = 0; i < samples.size(); ++i) encode_one(i);
  } else {
    std::vector<std::future<void>> jobs;
    const std::size_t n = std::min(threads, samples.size());
    for (std::size_t t = 0; t < n; ++t) {
      jobs.push_back(std::async(std::launch::async, [&, t] {
        for (std::size_t i = t; i < samples.size(); i += n) encode_one(i);
      }));
    }
    for (auto& j : jobs) j.get();
  }
  data.reindex();
  return data;
}

// --- training -----------------------------------------------------------------

std::optional<MonitorMetric> parse_monitor(std::string_view s) {
  if (s == "macro_f1") return MonitorMetric::macro_f1;
  if (s == "loss") return MonitorMetric::loss;
  return std::nullopt;
}

std::string_view to_string(MonitorMetric m) { return m == MonitorMetric::macro_f1 ? "macro_f1" : "loss"; }

void TrainConfig::validate(std::size_t num_classes) const {
  if (k_folds < 2) throw ConfigError("train.k_folds must be >= 2");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train.learning_rate must be >= 0");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (max_epochs == 0) throw ConfigError("train.max_epochs must be positive");
  if (patience == 0) throw ConfigError("train.patience must be >= 1");
  loss.validate(num_classes);
}

namespace {

struct Prepared {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::vector<double>> features;  // indexed like data.examples, standardized if requested
};

Prepared prepare(const FoldSplit& split, const EncodedDataset& data, const TrainConfig& config,
                 FeatureStandardizer& standardizer) {
  Prepared p;
  auto resolve = [&](const std::vector<std::string>& ids, std::vector<std::size_t>& out) {
    for (const auto& id : ids) {
      const std::size_t i = data.index_of(id);
      if (!data.examples[i].label) throw ValidationError("example '" + id + "' has no label");
      out.push_back(i);
    }
  };
  resolve(split.train_ids, p.train);
  resolve(split.val_ids, p.val);
  if (p.train.empty() || p.val.empty()) throw ValidationError("fold has an empty train or validation set");

  if (config.standardize_features && !data.examples.front().features.empty()) {
    std::vector<std::vector<double>> rows;
    for (auto i : p.train) rows.push_back(data.examples[i].features);
    standardizer = FeatureStandardizer::fit(rows);
  }
  p.features.resize(data.examples.size());
  auto fill = [&](std::size_t i) {
    p.features[i] = data.examples[i].features;
    standardizer.apply(p.features[i]);
  };
  for (auto i : p.train) fill(i);
  for (auto i : p.val) fill(i);
  return p;
}

ClassDistribution train_distribution(const std::vector<std::size_t>& idx, const EncodedDataset& data) {
  ClassDistribution d;
  d.kind = data.num_classes == kNumFine ? LabelKind::fine : LabelKind::coarse;
  d.counts.assign(data.num_classes, 0);
  for (auto i : idx) {
    ++d.counts[*data.examples[i].label];
    ++d.total;
  }
  return d;
}

HeadInput input_for(const EncodedExample& e, const std::vector<double>& features) {
  return HeadInput{&e.tokens, features, e.pooled};
}

struct Evaluation {
  FoldMetrics metrics;
  ProbMap probs;
};

Evaluation evaluate(const Head& head, const EncodedDataset& data, const Prepared& p, const LossConfig& loss) {
  Evaluation ev;
  std::vector<std::size_t> preds;
  std::vector<std::size_t> golds;
  double total_loss = 0.0;
  for (auto i : p.val) {
    const EncodedExample& e = data.examples[i];
    auto probs = head.forward(input_for(e, p.features[i]), false, 0);
    if (!std::all_of(probs.begin(), probs.end(), [](double v) { return std::isfinite(v); })) {
      throw NumericError("non-finite validation output for '" + e.id + "'");
    }
    preds.push_back(argmax(probs));
    golds.push_back(*e.label);
    total_loss += loss_value(probs, *e.label, loss);
    ev.probs.emplace(e.id, std::move(probs));
  }
  ev.metrics.accuracy = accuracy(preds, golds);
  ev.metrics.macro_f1 = macro_f1(preds, golds, data.num_classes);
  ev.metrics.loss = total_loss / static_cast<double>(p.val.size());
  return ev;
}

}  // namespace

FoldRun train_fold(const FoldSplit& split, std::size_t fold_index, const EncodedDataset& data,
                   const HeadConfig& head_config, const TrainConfig& config) {
  config.validate(data.num_classes);
  FoldRun run;
  run.fold_index = fold_index;
  run.head_config = head_config;
  const Prepared p = prepare(split, data, config, run.standardizer);
  run.train_size = p.train.size();
  const LossConfig loss = config.loss.resolved(train_distribution(p.train, data));

  const std::uint64_t fold_seed = hash_combine(config.seed, fold_index);
  std::unique_ptr<Head> head = make_head(head_config, fold_seed);
  OptimizerConfig oc;
  oc.kind = config.optimizer;
  oc.learning_rate = config.learning_rate;
  auto optimizer = make_optimizer(oc, head->params());

  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  Evaluation best;
  ParameterSet best_params = head->params();
  HeadTrace trace;
  std::vector<std::size_t> order = p.train;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng rng(hash_combine(fold_seed, epoch));
    rng.shuffle(order);
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      ParameterSet grads = head->params().zeros_like();
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const EncodedExample& e = data.examples[i];
        const std::uint64_t dropout_seed = hash_combine(hash_combine(fold_seed, epoch), b);
        const auto probs = head->forward(input_for(e, p.features[i]), true, dropout_seed, &trace);
        const bool finite = std::all_of(probs.begin(), probs.end(), [](double v) { return std::isfinite(v); });
        const double l = finite ? loss_value(probs, *e.label, loss) : std::numeric_limits<double>::quiet_NaN();
        if (!std::isfinite(l)) {
          std::ostringstream msg;
          msg << "non-finite loss " << l << " (fold " << fold_index << ", epoch " << epoch << ", batch " << batch_no
              << ", example '" << e.id << "')";
          throw NumericError(msg.str());
        }
        head->accumulate_gradients(trace, loss_gradient_logits(probs, *e.label, loss), grads);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto& s : grads.slices()) {
        for (double& g : s.values) g *= inv;
      }
      optimizer->step(head->mutable_params(), grads);
      if (!head->params().all_finite()) {
        std::ostringstream msg;
        msg << "non-finite parameters (fold " << fold_index << ", epoch " << epoch << ", batch " << batch_no << ")";
        throw NumericError(msg.str());
      }
    }

    Evaluation ev;
    try {
      ev = evaluate(*head, data, p, loss);
    } catch (const NumericError& err) {
      std::ostringstream msg;
      msg << err.what() << " (fold " << fold_index << ", epoch " << epoch << ", validation)";
      throw NumericError(msg.str());
    }
    const double score = config.monitor == MonitorMetric::macro_f1 ? ev.metrics.macro_f1 : -ev.metrics.loss;
    run.epoch_scores.push_back(config.monitor == MonitorMetric::macro_f1 ? ev.metrics.macro_f1 : ev.metrics.loss);
    run.epochs_run = epoch;
    if (score > best_score) {
      best_score = score;
      best = std::move(ev);
      best_params = head->params();
      run.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  run.params = std::move(best_params);
  run.val_metrics = best.metrics;
  run.val_probs = std::move(best.probs);
  return run;
}

std::vector<FoldRun> train_kfold(const std::vector<FoldSplit>& splits, const EncodedDataset& data,
                                 const HeadConfig& head_config, const TrainConfig& config) {
  std::vector<FoldRun> runs(splits.size());
  const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, splits.size()));
  if (threads == 1) {
    for (std::size_t f = 0; f < splits.size(); ++f) runs[f] = train_fold(splits[f], f, data, head_config, config);
    return runs;
  }
  std::vector<std::future<void>> jobs;
  for (std::size_t t = 0; t < threads; ++t) {
    jobs.push_back(std::async(std::launch::async, [&, t] {
      for (std::size_t f = t; f < splits.size(); f += threads) runs[f] = train_fold(splits[f], f, data, head_config, config);
    }));
  }
  for (auto& j : jobs) j.get();
  return runs;
}

std::vector<double> predict_probs(const FoldRun& run, const Head& head, const EncodedExample& example) {
  std::vector<double> features = example.features;
  run.standardizer.apply(features);
  return head.forward(input_for(example, features), false, 0);
}

ProbMap predict_dataset(const FoldRun& run, const EncodedDataset& data) {
  auto head = make_head(run.head_config, run.params);
  ProbMap out;
  for (const auto& e : data.examples) out.emplace(e.id, predict_probs(run, *head, e));
  return out;
}

std::vector<double> order_free_mean(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ValidationError("cannot average zero probability vectors");
  const std::size_t n = rows.front().size();
  std::vector<double> out(n);
  std::vector<double> column(rows.size());
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != n) throw ValidationError("probability vectors differ in length");
      column[r] = rows[r][j];
    }
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double v : column) sum += v;
    out[j] = sum / static_cast<double>(rows.size());
  }
  return out;
}

ProbMap average_fold_probs(const std::vector<ProbMap>& per_fold) {
  if (per_fold.empty()) throw ValidationError("average_fold_probs: no folds");
  const ProbMap& first = per_fold.front();
  for (std::size_t f = 1; f < per_fold.size(); ++f) {
    const ProbMap& other = per_fold[f];
    std::vector<std::string> diff;
    for (const auto& [id, _] : first) {
      if (!other.count(id)) diff.push_back(id);
    }
    for (const auto& [id, _] : other) {
      if (!first.count(id)) diff.push_back(id);
    }
    if (!diff.empty()) {
      std::sort(diff.begin(), diff.end());
      std::string msg = "fold " + std::to_string(f) + " id set differs from fold 0:";
      for (const auto& d : diff) msg += " " + d;
      throw ValidationError(msg);
    }
  }
  ProbMap out;
  std::vector<std::vector<double>> rows(per_fold.size());
  for (const auto& [id, _] : first) {
    for (std::size_t f = 0; f < per_fold.size(); ++f) rows[f] = per_fold[f].at(id);
    out.emplace(id, order_free_mean(rows));
  }
  return out;
}

}  // namespace hsd
