#include "hsd/context.hpp"

#include "hsd/error.hpp"

namespace hsd {

namespace {

std::string prepared(const std::string& text, const Preprocessor* pre) { return pre ? pre->clean(text) : text; }

}  // namespace

ContextualInput build_contextual_input(const ThreadNode& node, const Thread& tree, const Preprocessor* pre,
                                       const ContextOptions& options) {
  if (node.depth < 0 || node.depth > kMaxThreadDepth) {
    throw StructureError("node '" + node.id + "' has unsupported depth " + std::to_string(node.depth));
  }
  if (!tree.contains(node)) throw StructureError("node '" + node.id + "' does not belong to this thread");

  ContextualInput in;
  in.node_id = node.id;
  in.depth = node.depth;
  in.label = node.label;
  in.target_text = prepared(node.text, pre);
  if (node.depth == 0) return in;

  const ThreadNode* parent = tree.parent(node);
  if (!parent) throw StructureError("node '" + node.id + "' has no parent in its thread");
  if (node.depth == 1) {
    in.context_text = prepared(parent->text, pre);
    return in;
  }
  const ThreadNode* root = tree.parent(*parent);
  if (!root) throw StructureError("reply '" + node.id + "' has no root tweet");
  const std::string root_text = prepared(root->text, pre);
  const std::string comment_text = prepared(parent->text, pre);
  if (root_text.empty()) {
    in.context_text = comment_text;
  } else if (comment_text.empty()) {
    in.context_text = root_text;
  } else {
    in.context_text = root_text + options.separator + comment_text;
  }
  return in;
}

std::vector<ContextualInput> flatten_threads(const std::vector<Thread>& trees, const Preprocessor* pre,
                                             const ContextOptions& options) {
  std::vector<ContextualInput> out;
  for (const auto& tree : trees) {
    for (const auto& node : tree.nodes()) out.push_back(build_contextual_input(node, tree, pre, options));
  }
  return out;
}

}  // namespace hsd
