#include "hsd/commands.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hsd/context.hpp"
#include "hsd/csv.hpp"
#include "hsd/error.hpp"
#include "hsd/metrics.hpp"
#include "hsd/unicode.hpp"

namespace hsd {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kSchemaVersion = 1;

bool is_thread_file(const fs::path& path) {
  const std::string ext = path.extension().string();
  return ext == ".json" || ext == ".jsonl";
}

bool blank(std::string_view s) { return unicode::split_whitespace(s).empty(); }

void check_unique_ids(const std::vector<PipelineRow>& rows) {
  std::set<std::string> seen;
  for (const auto& r : rows) {
    if (!seen.insert(r.id).second) throw ValidationError("duplicate id '" + r.id + "'");
  }
}

std::string fold_dir_name(std::size_t i) { return "fold_" + std::to_string(i); }

}  // namespace

// --- pipeline -----------------------------------------------------------------

TextPipeline::TextPipeline(const ExperimentConfig& config)
    : config_(config),
      preprocessor_(config.preprocess, identity_transliteration()),
      lexicon_(config.features.lexicons.empty() ? ProfanityLexicon{} : load_lexicon(config.features.lexicons)),
      sentiment_(uniform_sentiment()),
      encoder_(config.encoder.spec) {}

std::vector<PipelineRow> TextPipeline::load(const fs::path& path, bool require_labels, PreprocessStats* stats) const {
  const LabelKind kind = label_kind(config_.task);
  PreprocessStats local;
  std::vector<PipelineRow> rows;
  if (uses_threads(config_.task)) {
    const auto trees = load_threads(path);
    for (const auto& tree : trees) {
      for (const auto& node : tree.nodes()) {
        preprocessor_.clean(node.text, &local);
        const ContextualInput in = build_contextual_input(node, tree, &preprocessor_, config_.context);
        PipelineRow row;
        row.id = node.id;
        row.raw_text = node.text;
        row.text_a = in.target_text;
        if (!in.context_text.empty()) row.text_b = in.context_text;
        if (node.label) row.label = static_cast<std::size_t>(*node.label);
        row.empty_text = blank(node.text);
        rows.push_back(std::move(row));
      }
    }
  } else {
    std::vector<LabeledExample> examples = load_flat_dataset(path, language(config_.task), config_.data.schema, require_labels);
    for (const auto& ex : examples) {
      PipelineRow row;
      row.id = ex.id;
      row.raw_text = ex.text;
      row.text_a = preprocessor_.clean(ex.text, &local);
      row.label = ex.label_index(kind);
      row.empty_text = ex.empty_text;
      rows.push_back(std::move(row));
    }
  }
  check_unique_ids(rows);
  if (require_labels) {
    for (const auto& r : rows) {
      if (!r.label) throw ValidationError("row '" + r.id + "' in " + path.string() + " has no " +
                                          std::string(to_string(kind)) + " label");
    }
  }
  if (stats) *stats += local;
  return rows;
}

std::vector<TextSample> TextPipeline::samples(const std::vector<PipelineRow>& rows) const {
  std::vector<TextSample> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    TextSample s;
    s.id = r.id;
    s.text_a = r.text_a;
    s.text_b = r.text_b;
    s.label = r.label;
    s.empty_text = r.empty_text;
    if (!config_.features.schema.empty()) {
      s.features = build_feature_vector(r.raw_text, unicode::split_whitespace(r.text_a), lexicon_, sentiment_,
                                        config_.features.schema)
                       .values;
    }
    out.push_back(std::move(s));
  }
  return out;
}

EncodedDataset TextPipeline::encode(const std::vector<TextSample>& samples) const {
  EncodingOptions opts;
  opts.layers = config_.encoder.layers;
  opts.seed = config_.encoder.seed;
  opts.threads = config_.train.threads;
  return encode_dataset(samples, encoder_, opts, num_classes(label_kind(config_.task)));
}

// --- preprocess ---------------------------------------------------------------

PreprocessReport cmd_preprocess(const ExperimentConfig& config, const fs::path& input, const fs::path& output) {
  PreprocessReport report;
  report.input = input.empty() ? config.data.train : input;
  if (report.input.empty()) throw ConfigError("no input: set data.train or pass an input file");
  if (output.empty()) throw ConfigError("no output path given");
  if (fs::exists(output) && fs::exists(report.input) && fs::equivalent(output, report.input)) {
    throw ValidationError("output would overwrite the input file " + report.input.string());
  }
  report.output = output;
  Preprocessor pre(config.preprocess, identity_transliteration());

  if (is_thread_file(report.input)) {
    const auto trees = load_threads(report.input);
    std::vector<Thread> cleaned;
    for (const auto& tree : trees) {
      std::vector<ThreadNode> nodes = tree.nodes();
      for (auto& n : nodes) {
        n.text = pre.clean(n.text, &report.stats);
        if (blank(n.text)) ++report.empty_after_cleaning;
      }
      report.rows_in += nodes.size();
      report.rows_out += nodes.size();
      cleaned.push_back(Thread::build(std::move(nodes)));
    }
    write_file(output, format_threads(cleaned));
    return report;
  }

  auto examples = load_flat_dataset(report.input, language(config.task), config.data.schema, false);
  report.rows_in = examples.size();
  for (auto& ex : examples) {
    ex.text = pre.clean(ex.text, &report.stats);
    if (blank(ex.text)) ++report.empty_after_cleaning;
  }
  report.rows_out = examples.size();
  write_flat_dataset(output, examples, config.data.schema, ',');
  return report;
}

// --- train --------------------------------------------------------------------

namespace {

ojson fold_json(const FoldRun& run, std::size_t val_size) {
  ojson j;
  j["fold"] = run.fold_index;
  j["accuracy"] = run.val_metrics.accuracy;
  j["macro_f1"] = run.val_metrics.macro_f1;
  j["loss"] = run.val_metrics.loss;
  j["best_epoch"] = run.best_epoch;
  j["epochs_run"] = run.epochs_run;
  j["train_size"] = run.train_size;
  j["val_size"] = val_size;
  return j;
}

std::vector<ProbMap> per_fold_predictions(const std::vector<FoldRun>& folds, const EncodedDataset& data) {
  std::vector<ProbMap> out;
  for (const auto& f : folds) out.push_back(predict_dataset(f, data));
  return out;
}

std::vector<Prediction> label_rows(const std::vector<PipelineRow>& rows, const std::map<std::string, std::size_t>& labels,
                                   LabelKind kind, std::size_t majority) {
  const auto names = class_names(kind);
  std::vector<Prediction> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    const std::size_t c = r.empty_text ? majority : labels.at(r.id);
    out.push_back({r.id, names.at(c)});
  }
  return out;
}

std::map<std::string, std::size_t> argmax_labels(const ProbMap& probs) {
  std::map<std::string, std::size_t> out;
  for (const auto& [id, p] : probs) out.emplace(id, argmax(p));
  return out;
}

}  // namespace

std::string format_metrics_json(const ExperimentConfig& config, const std::vector<FoldRun>& runs) {
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = config.name;
  j["task"] = std::string(to_string(config.task));
  j["seed"] = config.train.seed;
  j["config_hash"] = config_hash(config);
  j["k_folds"] = runs.size();
  j["monitor"] = std::string(to_string(config.train.monitor));
  ojson folds = ojson::array();
  double acc = 0.0;
  double f1 = 0.0;
  for (const auto& r : runs) {
    folds.push_back(fold_json(r, r.val_probs.size()));
    acc += r.val_metrics.accuracy;
    f1 += r.val_metrics.macro_f1;
  }
  j["folds"] = folds;
  const double n = runs.empty() ? 1.0 : static_cast<double>(runs.size());
  j["mean"] = {{"accuracy", acc / n}, {"macro_f1", f1 / n}};
  return j.dump(2) + "\n";
}

TrainReport cmd_train(const ExperimentConfig& config) {
  if (config.data.train.empty()) throw ConfigError("data.train is not set");
  const LabelKind kind = label_kind(config.task);
  const TextPipeline pipeline(config);

  std::vector<PipelineRow> rows = pipeline.load(config.data.train, true);
  for (const auto& extra : config.data.extra_train) {
    auto more = pipeline.load(extra, true);
    rows.insert(rows.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  }
  check_unique_ids(rows);

  std::vector<std::string> ids;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> counts(num_classes(kind), 0);
  for (const auto& r : rows) {
    ids.push_back(r.id);
    labels.push_back(*r.label);
    ++counts[*r.label];
  }
  const auto splits = stratified_kfold(ids, labels, config.train.k_folds, config.train.seed, class_names(kind));
  const EncodedDataset data = pipeline.encode(pipeline.samples(rows));
  const std::vector<FoldRun> runs = train_kfold(splits, data, config.head, config.train);

  const fs::path dir = config.run_dir();
  fs::create_directories(dir);
  write_file(dir / "config.ini", format_key_values(to_key_values(config)));

  std::size_t majority = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[majority]) majority = c;
  }
  ojson run;
  run["schema_version"] = kSchemaVersion;
  run["task"] = std::string(to_string(config.task));
  run["label_kind"] = std::string(to_string(kind));
  run["classes"] = class_names(kind);
  run["class_counts"] = counts;
  run["majority_class"] = class_names(kind).at(majority);
  run["folds"] = runs.size();
  run["config_hash"] = config_hash(config);
  write_file(dir / "run.json", run.dump(2) + "\n");

  for (const auto& r : runs) {
    const fs::path fdir = dir / fold_dir_name(r.fold_index);
    fs::create_directories(fdir);
    save_checkpoint(fdir / "checkpoint", Checkpoint{head_config_to_json(r.head_config), r.params});
    ojson f = fold_json(r, r.val_probs.size());
    f["standardizer"] = {{"mean", r.standardizer.mean()}, {"scale", r.standardizer.scale()}};
    f["epoch_scores"] = r.epoch_scores;
    write_file(fdir / "fold.json", f.dump(2) + "\n");
  }

  const std::string metrics = format_metrics_json(config, runs);
  write_file(dir / "metrics.json", metrics);

  if (!config.data.test.empty()) {
    const std::vector<PipelineRow> test_rows = pipeline.load(config.data.test, false);
    const EncodedDataset test = pipeline.encode(pipeline.samples(test_rows));
    const ProbMap probs = average_fold_probs(per_fold_predictions(runs, test));
    write_file(dir / "predictions.csv", format_predictions(label_rows(test_rows, argmax_labels(probs), kind, majority)));
  }

  TrainReport report;
  report.run_dir = dir;
  report.config_hash = config_hash(config);
  for (const auto& r : runs) {
    report.folds.push_back(r.val_metrics);
    report.mean_accuracy += r.val_metrics.accuracy;
    report.mean_macro_f1 += r.val_metrics.macro_f1;
  }
  report.mean_accuracy /= static_cast<double>(runs.size());
  report.mean_macro_f1 /= static_cast<double>(runs.size());
  return report;
}

// --- predict ------------------------------------------------------------------

TrainedRun TrainedRun::load(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw LoadError("run directory not found: " + dir.string());
  TrainedRun out;
  out.dir = dir;
  out.config = load_experiment(dir / "config.ini");
  ojson run;
  try {
    run = ojson::parse(read_file(dir / "run.json"));
    const auto kind = label_kind(out.config.task);
    const auto majority = class_index(kind, run.at("majority_class").get<std::string>());
    if (!majority) throw LoadError("run.json in " + dir.string() + ": unknown majority_class");
    out.majority_class = *majority;
    const std::size_t folds = run.at("folds").get<std::size_t>();
    for (std::size_t i = 0; i < folds; ++i) {
      const fs::path fdir = dir / fold_dir_name(i);
      const Checkpoint ckpt = load_checkpoint(fdir / "checkpoint");
      const ojson f = ojson::parse(read_file(fdir / "fold.json"));
      FoldRun fr;
      fr.fold_index = i;
      fr.head_config = head_config_from_json(ckpt.head_config_json);
      fr.params = ckpt.params;
      const auto& st = f.at("standardizer");
      auto mean = st.at("mean").get<std::vector<double>>();
      if (!mean.empty()) fr.standardizer = FeatureStandardizer(std::move(mean), st.at("scale").get<std::vector<double>>());
      fr.val_metrics.accuracy = f.at("accuracy").get<double>();
      fr.val_metrics.macro_f1 = f.at("macro_f1").get<double>();
      fr.val_metrics.loss = f.at("loss").get<double>();
      make_head(fr.head_config, fr.params);  // validates the layout
      out.folds.push_back(std::move(fr));
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("malformed run files in " + dir.string() + ": " + e.what());
  }
  if (out.folds.empty()) throw LoadError("run " + dir.string() + " has no folds");
  return out;
}

ProbMap TrainedRun::predict_file(const fs::path& path, std::vector<PipelineRow>* rows_out) const {
  const TextPipeline pipeline(config);
  std::vector<PipelineRow> rows = pipeline.load(path, false);
  const EncodedDataset data = pipeline.encode(pipeline.samples(rows));
  ProbMap probs = average_fold_probs(per_fold_predictions(folds, data));
  if (rows_out) *rows_out = std::move(rows);
  return probs;
}

std::vector<Prediction> cmd_predict(const fs::path& model, const fs::path& input, const fs::path& output) {
  std::vector<TrainedRun> members;
  std::optional<EnsembleSpec> spec;
  if (fs::is_directory(model)) {
    members.push_back(TrainedRun::load(model));
  } else {
    spec = load_ensemble_spec(model);
    for (const auto& m : spec->members) members.push_back(TrainedRun::load(m));
  }
  const LabelKind kind = label_kind(members.front().config.task);
  for (const auto& m : members) {
    if (label_kind(m.config.task) != kind || uses_threads(m.config.task) != uses_threads(members.front().config.task)) {
      throw ValidationError("ensemble members " + members.front().dir.string() + " and " + m.dir.string() +
                            " are trained for incompatible tasks");
    }
  }

  std::vector<PipelineRow> rows;
  std::vector<ProbMap> probs;
  for (std::size_t i = 0; i < members.size(); ++i) {
    probs.push_back(members[i].predict_file(input, i == 0 ? &rows : nullptr));
  }
  const auto labels = spec ? ensemble_predict(*spec, probs) : argmax_labels(probs.front());
  auto predictions = label_rows(rows, labels, kind, members.front().majority_class);
  if (!output.empty()) write_file(output, format_predictions(predictions));
  return predictions;
}

std::string format_predictions(const std::vector<Prediction>& predictions) {
  std::string out = csv::format_row({"id", "label"}, ',') + "\n";
  for (const auto& p : predictions) out += csv::format_row({p.id, p.label}, ',') + "\n";
  return out;
}

std::vector<Prediction> parse_predictions(std::string_view text) {
  const auto rows = csv::parse(text, csv::sniff_delimiter(text));
  if (rows.empty()) throw SchemaError("predictions file is empty");
  const auto& header = rows.front();
  auto col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("predictions file has no '" + name + "' column");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t id_col = col("id");
  const std::size_t label_col = col("label");
  std::vector<Prediction> out;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw SchemaError("predictions row " + std::to_string(r) + ": expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(row.size()));
    }
    if (!seen.insert(row[id_col]).second) throw ValidationError("duplicate prediction id '" + row[id_col] + "'");
    out.push_back({row[id_col], row[label_col]});
  }
  return out;
}

// --- evaluate -----------------------------------------------------------------

namespace {

std::map<std::string, std::string> gold_labels(const fs::path& path, LabelKind kind) {
  std::map<std::string, std::string> out;
  if (is_thread_file(path)) {
    if (kind != LabelKind::coarse) throw ValidationError("thread files carry coarse labels only");
    for (const auto& tree : load_threads(path)) {
      for (const auto& n : tree.nodes()) {
        if (!n.label) throw ValidationError("gold node '" + n.id + "' has no label");
        if (!out.emplace(n.id, std::string(to_string(*n.label))).second) {
          throw ValidationError("duplicate gold id '" + n.id + "'");
        }
      }
    }
    return out;
  }
  for (const auto& ex : load_flat_dataset(path, Language::en, ColumnSchema{}, false)) {
    auto idx = ex.label_index(kind);
    if (!idx) throw ValidationError("gold row '" + ex.id + "' has no " + std::string(to_string(kind)) + " label");
    out.emplace(ex.id, class_names(kind).at(*idx));
  }
  return out;
}

std::string id_list(const std::vector<std::string>& ids) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(ids.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) out += (i ? ", " : "") + ids[i];
  if (ids.size() > shown) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

}  // namespace

EvaluationReport cmd_evaluate(const fs::path& predictions_path, const fs::path& gold_path,
                              std::optional<LabelKind> kind, const fs::path& output) {
  const auto preds = parse_predictions(read_file(predictions_path));
  if (preds.empty()) throw ValidationError("no predictions in " + predictions_path.string());
  if (!kind) {
    const bool coarse = std::all_of(preds.begin(), preds.end(),
                                    [](const Prediction& p) { return class_index(LabelKind::coarse, p.label).has_value(); });
    const bool fine = std::all_of(preds.begin(), preds.end(),
                                  [](const Prediction& p) { return class_index(LabelKind::fine, p.label).has_value(); });
    if (coarse == fine) throw ValidationError("cannot tell the label set of " + predictions_path.string());
    kind = coarse ? LabelKind::coarse : LabelKind::fine;
  }
  const auto gold = gold_labels(gold_path, *kind);

  std::vector<std::string> missing_pred;
  std::vector<std::string> missing_gold;
  std::set<std::string> pred_ids;
  for (const auto& p : preds) {
    pred_ids.insert(p.id);
    if (!gold.count(p.id)) missing_gold.push_back(p.id);
  }
  for (const auto& [id, _] : gold) {
    if (!pred_ids.count(id)) missing_pred.push_back(id);
  }
  if (!missing_pred.empty() || !missing_gold.empty()) {
    std::string msg = "prediction and gold ids differ";
    if (!missing_pred.empty()) msg += "; missing predictions: " + id_list(missing_pred);
    if (!missing_gold.empty()) msg += "; missing gold: " + id_list(missing_gold);
    throw ValidationError(msg);
  }

  // Sorted by id, so row order in either file does not matter.
  std::map<std::string, std::string> by_id;
  for (const auto& p : preds) by_id.emplace(p.id, p.label);
  std::vector<std::size_t> p_idx;
  std::vector<std::size_t> g_idx;
  for (const auto& [id, label] : by_id) {
    auto pi = class_index(*kind, label);
    if (!pi) throw ValidationError("prediction for '" + id + "' has unknown label '" + label + "'");
    p_idx.push_back(*pi);
    g_idx.push_back(*class_index(*kind, gold.at(id)));
  }

  EvaluationReport report;
  report.kind = *kind;
  report.count = p_idx.size();
  report.accuracy = accuracy(p_idx, g_idx);
  report.macro_f1 = macro_f1(p_idx, g_idx, num_classes(*kind));
  report.confusion = confusion_matrix(p_idx, g_idx, num_classes(*kind));
  report.per_class_f1 = per_class_f1(report.confusion);
  if (!output.empty()) write_file(output, format_evaluation_json(report));
  return report;
}

std::string format_evaluation_json(const EvaluationReport& r) {
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["label_kind"] = std::string(to_string(r.kind));
  j["count"] = r.count;
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  const auto names = class_names(r.kind);
  ojson per = ojson::object();
  for (std::size_t c = 0; c < names.size(); ++c) per[names[c]] = r.per_class_f1.at(c);
  j["per_class_f1"] = per;
  j["classes"] = names;
  j["confusion"] = r.confusion;
  return j.dump(2) + "\n";
}

std::string format_evaluation_text(const EvaluationReport& r) {
  const auto names = class_names(r.kind);
  std::ostringstream out;
  out << std::setprecision(6) << std::fixed;
  out << "examples  " << r.count << "\n";
  out << "accuracy  " << r.accuracy << "\n";
  out << "macro_f1  " << r.macro_f1 << "\n";
  out << "\nconfusion (rows gold, columns predicted)\n";
  out << std::setw(8) << "";
  for (const auto& n : names) out << std::setw(8) << n;
  out << "\n";
  for (std::size_t g = 0; g < names.size(); ++g) {
    out << std::setw(8) << names[g];
    for (std::size_t p = 0; p < names.size(); ++p) out << std::setw(8) << r.confusion[g][p];
    out << "\n";
  }
  return out.str();
}

}  // namespace hsd
