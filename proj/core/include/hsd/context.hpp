#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hsd/corpus.hpp"
#include "hsd/preprocess.hpp"

namespace hsd {

// Input for conversational classification. The encoder receives
// (target_text, context_text) as an ordered segment pair, target first.
struct ContextualInput {
  std::string target_text;
  std::string context_text;  // empty for a root tweet
  std::string node_id;
  int depth = 0;
  std::optional<CoarseLabel> label;

  bool operator==(const ContextualInput&) const = default;
};

struct ContextOptions {
  // Joins root tweet and comment in a reply's context.
  std::string separator = " ";
};

// depth 0: no context. depth 1: the root tweet. depth 2: root tweet,
// separator, comment. Texts are cleaned by `preprocessor` when one is given;
// a piece that cleans to nothing is left out together with its separator.
ContextualInput build_contextual_input(const ThreadNode& node, const Thread& tree,
                                       const Preprocessor* preprocessor = nullptr,
                                       const ContextOptions& options = {});

// One input per node, trees in order, nodes parent-before-child.
std::vector<ContextualInput> flatten_threads(const std::vector<Thread>& trees,
                                             const Preprocessor* preprocessor = nullptr,
                                             const ContextOptions& options = {});

}  // namespace hsd
