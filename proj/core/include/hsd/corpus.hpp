#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hsd/labels.hpp"

namespace hsd {

struct LabeledExample {
  std::string id;
  std::string text;
  std::optional<CoarseLabel> coarse;
  std::optional<FineLabel> fine;
  Language language = Language::en;
  // Text is empty after trimming. Such rows are kept so every id gets a
  // prediction; they fall back to the majority class.
  bool empty_text = false;

  std::optional<std::size_t> label_index(LabelKind kind) const;
  bool operator==(const LabeledExample&) const = default;
};

// Column names of a flat dataset. An empty name means the column is not used.
struct ColumnSchema {
  std::string id = "text_id";
  std::string text = "text";
  std::string coarse = "task_1";
  std::string fine = "task_2";
};

// With require_labels the schema's label columns must all be present and at
// least one must be configured; without it they are read when present.
std::vector<LabeledExample> parse_flat_dataset(std::string_view content, Language language,
                                               const ColumnSchema& schema = {}, bool require_labels = true);
std::vector<LabeledExample> load_flat_dataset(const std::filesystem::path& path, Language language,
                                              const ColumnSchema& schema = {}, bool require_labels = true);

std::string format_flat_dataset(const std::vector<LabeledExample>& examples, const ColumnSchema& schema = {},
                                char delimiter = ',');
void write_flat_dataset(const std::filesystem::path& path, const std::vector<LabeledExample>& examples,
                        const ColumnSchema& schema = {}, char delimiter = ',');

struct ClassDistribution {
  LabelKind kind = LabelKind::coarse;
  std::vector<std::size_t> counts;  // indexed by class index
  std::size_t total = 0;

  std::size_t count(std::string_view label) const;
  // Most frequent class; ties resolve to the lower index.
  std::size_t majority() const;
};

ClassDistribution class_distribution(const std::vector<LabeledExample>& examples, LabelKind which);

// --- conversation threads ---------------------------------------------------

struct ThreadNode {
  std::string id;
  std::string text;
  std::optional<CoarseLabel> label;
  std::optional<std::string> parent_id;
  int depth = 0;  // 0 = tweet, 1 = comment, 2 = reply

  bool operator==(const ThreadNode&) const = default;
};

inline constexpr int kMaxThreadDepth = 2;

// A validated tweet/comment/reply tree stored in parent-before-child order.
class Thread {
 public:
  // Validates ids, parent links, depths and acyclicity. Node depths are
  // checked against the parent chain. Throws StructureError.
  static Thread build(std::vector<ThreadNode> nodes);

  const std::vector<ThreadNode>& nodes() const { return nodes_; }
  const ThreadNode& root() const { return nodes_.front(); }
  std::size_t size() const { return nodes_.size(); }
  const ThreadNode* find(std::string_view id) const;
  const ThreadNode* parent(const ThreadNode& node) const;
  bool contains(const ThreadNode& node) const;

 private:
  std::vector<ThreadNode> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Accepts a JSON array of trees, a single tree object, or one tree object per
// line. Node keys: id (or tweet_id), text (or tweet), label, comments/replies,
// and an optional parent_id which must agree with the nesting.
std::vector<Thread> parse_threads(std::string_view json_text);
std::vector<Thread> load_threads(const std::filesystem::path& path);
std::string format_threads(const std::vector<Thread>& threads);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace hsd
