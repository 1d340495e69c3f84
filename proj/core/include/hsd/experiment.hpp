#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsd/context.hpp"
#include "hsd/corpus.hpp"
#include "hsd/encoder.hpp"
#include "hsd/heads.hpp"
#include "hsd/preprocess.hpp"
#include "hsd/training.hpp"

namespace hsd {

enum class Task { en_a, en_b, hi_a, hi_b, mr_a, ichcl };

std::optional<Task> parse_task(std::string_view s);
std::string_view to_string(Task t);
LabelKind label_kind(Task t);
Language language(Task t);
bool uses_threads(Task t);

// Flattened "section.key" -> value. Keys outside a section have no prefix.
using KeyValues = std::map<std::string, std::string>;

// INI-style text: "[section]" headers, "key = value" lines, '#' or ';'
// comments. Values may be double-quoted to keep surrounding spaces.
KeyValues parse_key_values(std::string_view text);
std::string format_key_values(const KeyValues& kv);
// "section.key=value" strings, as given on the command line.
void apply_overrides(KeyValues& kv, const std::vector<std::string>& overrides);

struct DataConfig {
  std::filesystem::path train;
  std::filesystem::path test;  // optional
  // Prior-year files concatenated onto train. Empty by default.
  std::vector<std::filesystem::path> extra_train;
  ColumnSchema schema;
};

struct FeatureConfig {
  std::vector<std::string> schema;
  std::vector<std::filesystem::path> lexicons;
  std::string sentiment = "uniform";
  bool standardize = false;
};

struct EncoderConfig {
  EncoderSpec spec;
  std::size_t layers = 4;  // concatenated from the top
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  Task task = Task::en_a;
  DataConfig data;
  PreprocessConfig preprocess;
  std::filesystem::path stopwords_file;
  std::string transliteration = "identity";
  FeatureConfig features;
  EncoderConfig encoder;
  HeadConfig head;
  TrainConfig train;
  ContextOptions context;
  std::filesystem::path output_dir;

  std::filesystem::path run_dir() const { return output_dir / name; }
};

// Builds a config from task defaults overlaid with kv. Relative paths resolve
// against base_dir. Unknown keys and malformed values raise ConfigError.
// The run-directory root is output.dir, else $HSD_RUN_ROOT, else "runs".
ExperimentConfig resolve_experiment(const KeyValues& kv, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Every effective setting, paths absolute. Feeding the result back through
// resolve_experiment reproduces the config.
KeyValues to_key_values(const ExperimentConfig& config);
// FNV-1a over the canonical key/value listing, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

std::vector<std::string> known_config_keys();

}  // namespace hsd
