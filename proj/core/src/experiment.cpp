#include "hsd/experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

#include "hsd/error.hpp"
#include "hsd/features.hpp"
#include "hsd/random.hpp"

namespace hsd {

namespace fs = std::filesystem;

std::optional<Task> parse_task(std::string_view s) {
  if (s == "en_a") return Task::en_a;
  if (s == "en_b") return Task::en_b;
  if (s == "hi_a") return Task::hi_a;
  if (s == "hi_b") return Task::hi_b;
  if (s == "mr_a") return Task::mr_a;
  if (s == "ichcl") return Task::ichcl;
  return std::nullopt;
}

std::string_view to_string(Task t) {
  switch (t) {
    case Task::en_a: return "en_a";
    case Task::en_b: return "en_b";
    case Task::hi_a: return "hi_a";
    case Task::hi_b: return "hi_b";
    case Task::mr_a: return "mr_a";
    case Task::ichcl: return "ichcl";
  }
  return "en_a";
}

LabelKind label_kind(Task t) { return (t == Task::en_b || t == Task::hi_b) ? LabelKind::fine : LabelKind::coarse; }

Language language(Task t) {
  switch (t) {
    case Task::en_a:
    case Task::en_b: return Language::en;
    case Task::hi_a:
    case Task::hi_b: return Language::hi;
    case Task::mr_a: return Language::mr;
    case Task::ichcl: return Language::hi_en_mix;
  }
  return Language::en;
}

bool uses_threads(Task t) { return t == Task::ichcl; }

// --- key/value text -----------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += items[i];
  }
  return out;
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    kv[section.empty() ? key : section + "." + key] = unquote(trim(std::string_view(line).substr(eq + 1)));
  }
  return kv;
}

std::string format_key_values(const KeyValues& kv) {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
  for (const auto& [k, v] : kv) {
    const auto dot = k.find('.');
    if (dot == std::string::npos) {
      sections[""].emplace_back(k, v);
    } else {
      sections[k.substr(0, dot)].emplace_back(k.substr(dot + 1), v);
    }
  }
  std::string out;
  auto emit = [&](const std::string& key, const std::string& value) {
    const bool quote = value.empty() || value.front() == ' ' || value.back() == ' ';
    out += key + " = " + (quote ? "\"" + value + "\"" : value) + "\n";
  };
  if (auto it = sections.find(""); it != sections.end()) {
    for (const auto& [k, v] : it->second) emit(k, v);
  }
  for (const auto& [name, entries] : sections) {
    if (name.empty()) continue;
    out += "\n[" + name + "]\n";
    for (const auto& [k, v] : entries) emit(k, v);
  }
  return out;
}

void apply_overrides(KeyValues& kv, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
    kv[trim(std::string_view(o).substr(0, eq))] = unquote(trim(std::string_view(o).substr(eq + 1)));
  }
}

// --- resolution ---------------------------------------------------------------

namespace {

class Reader {
 public:
  Reader(const KeyValues& kv, fs::path base) : kv_(kv), base_(std::move(base)) {}

  const std::string* raw(const std::string& key) {
    used_.insert(key);
    auto it = kv_.find(key);
    return it == kv_.end() ? nullptr : &it->second;
  }

  void string(const std::string& key, std::string& out) {
    if (auto v = raw(key)) out = *v;
  }

  void boolean(const std::string& key, bool& out) {
    auto v = raw(key);
    if (!v) return;
    std::string s = *v;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") {
      out = true;
    } else if (s == "false" || s == "0" || s == "no" || s == "off") {
      out = false;
    } else {
      throw ConfigError(key + ": expected a boolean, got '" + *v + "'");
    }
  }

  template <typename T>
  void number(const std::string& key, T& out) {
    auto v = raw(key);
    if (!v) return;
    std::istringstream in(*v);
    T value{};
    in >> value;
    if (in.fail() || !in.eof()) throw ConfigError(key + ": expected a number, got '" + *v + "'");
    if constexpr (std::is_unsigned_v<T>) {
      if (trim(*v).front() == '-') throw ConfigError(key + ": must be non-negative");
    }
    out = value;
  }

  void path(const std::string& key, fs::path& out) {
    auto v = raw(key);
    if (!v) return;
    out = resolve(*v);
  }

  void paths(const std::string& key, std::vector<fs::path>& out) {
    auto v = raw(key);
    if (!v) return;
    out.clear();
    for (const auto& item : split_list(*v)) out.push_back(resolve(item));
  }

  void strings(const std::string& key, std::vector<std::string>& out) {
    auto v = raw(key);
    if (!v) return;
    out = split_list(*v);
  }

  void sizes(const std::string& key, std::vector<std::size_t>& out) {
    auto v = raw(key);
    if (!v) return;
    out.clear();
    for (const auto& item : split_list(*v)) {
      std::size_t n = 0;
      std::istringstream in(item);
      in >> n;
      if (in.fail() || !in.eof() || item.front() == '-') {
        throw ConfigError(key + ": expected a list of non-negative integers");
      }
      out.push_back(n);
    }
  }

  void check_all_used() const {
    for (const auto& [k, _] : kv_) {
      if (!used_.count(k)) throw ConfigError("unknown config key '" + k + "'");
    }
  }

 private:
  fs::path resolve(const std::string& v) const {
    if (v.empty()) return {};
    fs::path p(v);
    if (p.is_relative() && !base_.empty()) p = base_ / p;
    return p.lexically_normal();
  }

  const KeyValues& kv_;
  fs::path base_;
  std::set<std::string> used_;
};

template <typename E>
void enum_value(Reader& r, const std::string& key, E& out, std::optional<E> (*parse)(std::string_view)) {
  if (auto v = r.raw(key)) {
    auto e = parse(*v);
    if (!e) throw ConfigError(key + ": unknown value '" + *v + "'");
    out = *e;
  }
}

void weights_value(Reader& r, const std::string& key, WeightSource& source, std::vector<double>& values) {
  auto v = r.raw(key);
  if (!v) return;
  if (*v == "none" || v->empty()) {
    source = WeightSource::none;
    values.clear();
    return;
  }
  if (*v == "inverse_frequency" || *v == "auto") {
    source = WeightSource::inverse_frequency;
    values.clear();
    return;
  }
  values.clear();
  for (const auto& item : split_list(*v)) {
    std::istringstream in(item);
    double d = 0.0;
    in >> d;
    if (in.fail() || !in.eof()) throw ConfigError(key + ": expected numbers, 'none' or 'inverse_frequency'");
    values.push_back(d);
  }
  source = WeightSource::explicit_values;
}

std::string format_weights(WeightSource source, const std::vector<double>& values) {
  if (source == WeightSource::none) return "none";
  if (source == WeightSource::inverse_frequency) return "inverse_frequency";
  std::ostringstream out;
  out << std::setprecision(17);
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
  return out.str();
}

std::string format_double(double d) {
  std::ostringstream out;
  out << std::setprecision(17) << d;
  return out.str();
}

ExperimentConfig task_defaults(Task task) {
  ExperimentConfig c;
  c.task = task;
  const bool fine = label_kind(task) == LabelKind::fine;
  c.preprocess = fine ? characterization_preset() : detection_preset();
  c.features.schema = full_feature_schema();
  c.head.kind = HeadKind::kim_cnn;
  c.head.kim.conv_widths = {2, 3, 4};
  c.head.kim.dropout = 0.5;
  c.encoder.layers = 4;
  switch (task) {
    case Task::en_a:
    case Task::en_b:
      break;
    case Task::hi_a:
    case Task::mr_a:
      c.preprocess.normalize_indic = true;
      c.features.schema = {"profanity_frac", "sent_neg", "sent_neu", "sent_pos"};
      c.head.kim.conv_widths = {3};
      c.encoder.layers = 0;  // all layers
      break;
    case Task::hi_b:
      c.preprocess.normalize_indic = true;
      c.features.schema = {};
      c.head.kind = HeadKind::mlp;
      c.train.loss.kind = LossKind::focal;
      c.train.loss.gamma = 2.0;
      c.train.loss.alpha_source = WeightSource::inverse_frequency;
      break;
    case Task::ichcl:
      c.preprocess.normalize_indic = true;
      c.preprocess.transliterate_roman_hindi = true;
      c.features.schema = {};
      c.head.kind = HeadKind::mlp;
      break;
  }
  return c;
}

}  // namespace

ExperimentConfig resolve_experiment(const KeyValues& kv, const fs::path& base_dir) {
  Reader r(kv, base_dir);
  Task task = Task::en_a;
  enum_value(r, "task", task, parse_task);
  ExperimentConfig c = task_defaults(task);

  r.string("name", c.name);
  if (c.name.empty() || c.name.find('/') != std::string::npos) throw ConfigError("name must be a non-empty plain name");

  r.path("data.train", c.data.train);
  r.path("data.test", c.data.test);
  r.paths("data.extra_train", c.data.extra_train);
  r.string("data.id_column", c.data.schema.id);
  r.string("data.text_column", c.data.schema.text);
  r.string("data.coarse_column", c.data.schema.coarse);
  r.string("data.fine_column", c.data.schema.fine);

  auto& p = c.preprocess;
  r.boolean("preprocess.remove_urls", p.remove_urls);
  r.boolean("preprocess.remove_mentions", p.remove_mentions);
  r.boolean("preprocess.remove_hashtags", p.remove_hashtags);
  r.boolean("preprocess.hashtag_keep_text", p.hashtag_keep_text);
  r.boolean("preprocess.remove_punctuation", p.remove_punctuation);
  enum_value(r, "preprocess.emoji_mode", p.emoji_mode, parse_emoji_mode);
  r.boolean("preprocess.normalize_indic", p.normalize_indic);
  r.boolean("preprocess.lowercase_roman", p.lowercase_roman);
  r.boolean("preprocess.transliterate_roman_hindi", p.transliterate_roman_hindi);
  r.string("preprocess.transliteration", c.transliteration);
  if (c.transliteration != "identity") {
    throw ConfigError("preprocess.transliteration: only the built-in 'identity' backend is available from config");
  }
  r.path("preprocess.stopwords_file", c.stopwords_file);
  // Marathi enables stopword removal whenever a list is configured.
  p.remove_stopwords = task == Task::mr_a && !c.stopwords_file.empty();
  r.boolean("preprocess.remove_stopwords", p.remove_stopwords);
  if (!c.stopwords_file.empty()) p.stopword_list = load_stopwords(c.stopwords_file);
  p.validate();

  r.strings("features.schema", c.features.schema);
  validate_feature_schema(c.features.schema);
  r.paths("features.lexicons", c.features.lexicons);
  r.string("features.sentiment", c.features.sentiment);
  if (c.features.sentiment != "uniform") {
    throw ConfigError("features.sentiment: only the built-in 'uniform' provider is available from config");
  }
  r.boolean("features.standardize", c.features.standardize);

  auto& e = c.encoder;
  r.string("encoder.backend", e.spec.name);
  if (e.spec.name != "toy") throw ConfigError("encoder.backend: only the bundled 'toy' encoder is available from config");
  r.number("encoder.num_layers", e.spec.num_layers);
  r.number("encoder.hidden_dim", e.spec.hidden_dim);
  r.number("encoder.max_tokens", e.spec.max_tokens);
  r.boolean("encoder.supports_pairs", e.spec.supports_pairs);
  e.spec.validate();
  if (auto v = r.raw("encoder.layers")) {
    if (*v == "all") {
      e.layers = 0;
    } else {
      Reader sub(KeyValues{{"encoder.layers", *v}}, {});
      sub.number("encoder.layers", e.layers);
    }
  }
  if (e.layers == 0) e.layers = static_cast<std::size_t>(e.spec.num_layers);
  if (e.layers > static_cast<std::size_t>(e.spec.num_layers)) {
    throw ConfigError("encoder.layers exceeds encoder.num_layers");
  }
  r.number("encoder.seed", e.seed);

  enum_value(r, "head.kind", c.head.kind, parse_head_kind);
  auto& k = c.head.kim;
  r.sizes("head.conv_widths", k.conv_widths);
  r.number("head.filters_per_width", k.filters_per_width);
  r.number("head.fc_dim", k.fc_dim);
  r.number("head.dropout", k.dropout);
  const std::size_t n_classes = num_classes(label_kind(task));
  k.input_width = e.layers * static_cast<std::size_t>(e.spec.hidden_dim);
  k.num_classes = n_classes;
  k.feature_dim = c.features.schema.size();
  c.head.mlp.input_dim = static_cast<std::size_t>(e.spec.hidden_dim);
  c.head.mlp.num_classes = n_classes;
  c.head.validate();

  auto& t = c.train;
  r.number("train.k_folds", t.k_folds);
  enum_value(r, "train.optimizer", t.optimizer, parse_optimizer_kind);
  r.number("train.learning_rate", t.learning_rate);
  r.number("train.batch_size", t.batch_size);
  r.number("train.max_epochs", t.max_epochs);
  r.number("train.patience", t.patience);
  r.number("train.seed", t.seed);
  enum_value(r, "train.monitor", t.monitor, parse_monitor);
  r.number("train.threads", t.threads);
  t.standardize_features = c.features.standardize;
  enum_value(r, "loss.kind", t.loss.kind, parse_loss_kind);
  r.number("loss.gamma", t.loss.gamma);
  weights_value(r, "loss.alpha", t.loss.alpha_source, t.loss.alpha);
  weights_value(r, "loss.class_weights", t.loss.weight_source, t.loss.class_weights);
  t.validate(n_classes);

  r.string("context.separator", c.context.separator);

  fs::path out_dir;
  r.path("output.dir", out_dir);
  if (out_dir.empty()) {
    const char* env = std::getenv("HSD_RUN_ROOT");
    out_dir = env && *env ? fs::path(env) : fs::path("runs");
  }
  c.output_dir = out_dir;

  r.check_all_used();
  return c;
}

ExperimentConfig load_experiment(const fs::path& path, const std::vector<std::string>& overrides) {
  KeyValues kv = parse_key_values(read_file(path));
  apply_overrides(kv, overrides);
  fs::path base = path.parent_path();
  if (base.empty()) base = fs::current_path();
  return resolve_experiment(kv, fs::absolute(base));
}

KeyValues to_key_values(const ExperimentConfig& c) {
  auto abs = [](const fs::path& p) { return p.empty() ? std::string() : fs::absolute(p).lexically_normal().string(); };
  KeyValues kv;
  kv["name"] = c.name;
  kv["task"] = std::string(to_string(c.task));
  kv["data.train"] = abs(c.data.train);
  kv["data.test"] = abs(c.data.test);
  std::vector<std::string> extra;
  for (const auto& x : c.data.extra_train) extra.push_back(abs(x));
  kv["data.extra_train"] = join_list(extra);
  kv["data.id_column"] = c.data.schema.id;
  kv["data.text_column"] = c.data.schema.text;
  kv["data.coarse_column"] = c.data.schema.coarse;
  kv["data.fine_column"] = c.data.schema.fine;
  const auto& p = c.preprocess;
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  kv["preprocess.remove_urls"] = b(p.remove_urls);
  kv["preprocess.remove_mentions"] = b(p.remove_mentions);
  kv["preprocess.remove_hashtags"] = b(p.remove_hashtags);
  kv["preprocess.hashtag_keep_text"] = b(p.hashtag_keep_text);
  kv["preprocess.remove_punctuation"] = b(p.remove_punctuation);
  kv["preprocess.emoji_mode"] = std::string(to_string(p.emoji_mode));
  kv["preprocess.normalize_indic"] = b(p.normalize_indic);
  kv["preprocess.lowercase_roman"] = b(p.lowercase_roman);
  kv["preprocess.transliterate_roman_hindi"] = b(p.transliterate_roman_hindi);
  kv["preprocess.transliteration"] = c.transliteration;
  kv["preprocess.stopwords_file"] = abs(c.stopwords_file);
  kv["preprocess.remove_stopwords"] = b(p.remove_stopwords);
  kv["features.schema"] = join_list(c.features.schema);
  std::vector<std::string> lex;
  for (const auto& x : c.features.lexicons) lex.push_back(abs(x));
  kv["features.lexicons"] = join_list(lex);
  kv["features.sentiment"] = c.features.sentiment;
  kv["features.standardize"] = b(c.features.standardize);
  kv["encoder.backend"] = c.encoder.spec.name;
  kv["encoder.num_layers"] = std::to_string(c.encoder.spec.num_layers);
  kv["encoder.hidden_dim"] = std::to_string(c.encoder.spec.hidden_dim);
  kv["encoder.max_tokens"] = std::to_string(c.encoder.spec.max_tokens);
  kv["encoder.supports_pairs"] = b(c.encoder.spec.supports_pairs);
  kv["encoder.layers"] = std::to_string(c.encoder.layers);
  kv["encoder.seed"] = std::to_string(c.encoder.seed);
  kv["head.kind"] = std::string(to_string(c.head.kind));
  std::vector<std::string> widths;
  for (auto w : c.head.kim.conv_widths) widths.push_back(std::to_string(w));
  kv["head.conv_widths"] = join_list(widths);
  kv["head.filters_per_width"] = std::to_string(c.head.kim.filters_per_width);
  kv["head.fc_dim"] = std::to_string(c.head.kim.fc_dim);
  kv["head.dropout"] = format_double(c.head.kim.dropout);
  const auto& t = c.train;
  kv["train.k_folds"] = std::to_string(t.k_folds);
  kv["train.optimizer"] = std::string(to_string(t.optimizer));
  kv["train.learning_rate"] = format_double(t.learning_rate);
  kv["train.batch_size"] = std::to_string(t.batch_size);
  kv["train.max_epochs"] = std::to_string(t.max_epochs);
  kv["train.patience"] = std::to_string(t.patience);
  kv["train.seed"] = std::to_string(t.seed);
  kv["train.monitor"] = std::string(to_string(t.monitor));
  kv["loss.kind"] = std::string(to_string(t.loss.kind));
  kv["loss.gamma"] = format_double(t.loss.gamma);
  kv["loss.alpha"] = format_weights(t.loss.alpha_source, t.loss.alpha);
  kv["loss.class_weights"] = format_weights(t.loss.weight_source, t.loss.class_weights);
  kv["context.separator"] = c.context.separator;
  // train.threads and output.dir do not change results and stay out of the
  // hashed listing.
  return kv;
}

std::string config_hash(const ExperimentConfig& config) {
  std::string canon;
  for (const auto& [k, v] : to_key_values(config)) canon += k + "=" + v + "\n";
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(canon);
  return out.str();
}

std::vector<std::string> known_config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : to_key_values(ExperimentConfig{})) keys.push_back(k);
  keys.push_back("train.threads");
  keys.push_back("output.dir");
  return keys;
}

}  // namespace hsd
