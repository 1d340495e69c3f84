#include "hsd/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "hsd/csv.hpp"
#include "hsd/error.hpp"
#include "hsd/unicode.hpp"

namespace hsd {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot read file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot write file: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw LoadError("write failed: " + path.string());
}

std::optional<std::size_t> LabeledExample::label_index(LabelKind kind) const {
  if (kind == LabelKind::coarse) {
    if (coarse) return static_cast<std::size_t>(*coarse);
  } else if (fine) {
    return static_cast<std::size_t>(*fine);
  }
  return std::nullopt;
}

namespace {

std::optional<std::size_t> find_column(const csv::Row& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool blank_row(const csv::Row& row) {
  return std::all_of(row.begin(), row.end(), [](const std::string& f) { return trim(f).empty(); });
}

}  // namespace

std::vector<LabeledExample> parse_flat_dataset(std::string_view content, Language language,
                                               const ColumnSchema& schema, bool require_labels) {
  const char delim = csv::sniff_delimiter(content);
  const auto rows = csv::parse(content, delim);
  if (rows.empty()) throw SchemaError("dataset has no header row");
  const csv::Row& header = rows.front();

  auto required = [&](const std::string& name, std::string_view role) -> std::size_t {
    if (name.empty()) throw SchemaError("schema has no " + std::string(role) + " column");
    auto idx = find_column(header, name);
    if (!idx) throw SchemaError("missing column '" + name + "'");
    return *idx;
  };
  const std::size_t id_col = required(schema.id, "id");
  const std::size_t text_col = required(schema.text, "text");

  std::optional<std::size_t> coarse_col;
  std::optional<std::size_t> fine_col;
  if (require_labels) {
    if (schema.coarse.empty() && schema.fine.empty()) throw SchemaError("schema names no label column");
    if (!schema.coarse.empty()) coarse_col = required(schema.coarse, "coarse label");
    if (!schema.fine.empty()) fine_col = required(schema.fine, "fine label");
  } else {
    if (!schema.coarse.empty()) coarse_col = find_column(header, schema.coarse);
    if (!schema.fine.empty()) fine_col = find_column(header, schema.fine);
  }

  std::vector<LabeledExample> out;
  std::unordered_map<std::string, std::size_t> seen;
  std::vector<std::string> duplicates;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const csv::Row& row = rows[r];
    if (blank_row(row)) continue;
    const std::size_t row_no = r;  // 1-based data row
    auto cell = [&](std::size_t col) -> std::string { return col < row.size() ? row[col] : std::string{}; };

    LabeledExample ex;
    ex.id = trim(cell(id_col));
    ex.text = cell(text_col);
    ex.language = language;
    ex.empty_text = trim(ex.text).empty();
    if (ex.id.empty()) throw ValidationError("row " + std::to_string(row_no) + ": empty id");

    if (coarse_col) {
      const std::string v = trim(cell(*coarse_col));
      if (!v.empty()) {
        ex.coarse = parse_coarse(v);
        if (!ex.coarse) {
          throw ValidationError("row " + std::to_string(row_no) + ": unknown coarse label '" + v + "'");
        }
      }
    }
    if (fine_col) {
      const std::string v = trim(cell(*fine_col));
      if (!v.empty()) {
        ex.fine = parse_fine(v);
        if (!ex.fine) {
          throw ValidationError("row " + std::to_string(row_no) + ": unknown fine label '" + v + "'");
        }
      }
    }
    if (ex.coarse && ex.fine && implied_coarse(*ex.fine) != *ex.coarse) {
      throw ValidationError("row " + std::to_string(row_no) + ": fine label " + std::string(to_string(*ex.fine)) +
                            " contradicts coarse label " + std::string(to_string(*ex.coarse)));
    }
    if (seen.count(ex.id)) {
      duplicates.push_back(ex.id);
    } else {
      seen.emplace(ex.id, row_no);
    }
    out.push_back(std::move(ex));
  }
  if (!duplicates.empty()) {
    std::sort(duplicates.begin(), duplicates.end());
    duplicates.erase(std::unique(duplicates.begin(), duplicates.end()), duplicates.end());
    std::string msg = "duplicate ids:";
    for (const auto& d : duplicates) msg += " " + d;
    throw ValidationError(msg);
  }
  return out;
}

std::vector<LabeledExample> load_flat_dataset(const std::filesystem::path& path, Language language,
                                              const ColumnSchema& schema, bool require_labels) {
  if (!std::filesystem::exists(path)) throw LoadError("dataset not found: " + path.string());
  try {
    return parse_flat_dataset(read_file(path), language, schema, require_labels);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string format_flat_dataset(const std::vector<LabeledExample>& examples, const ColumnSchema& schema,
                                char delim) {
  csv::Row header{schema.id, schema.text};
  if (!schema.coarse.empty()) header.push_back(schema.coarse);
  if (!schema.fine.empty()) header.push_back(schema.fine);
  std::string out = csv::format_row(header, delim) + "\n";
  for (const auto& ex : examples) {
    csv::Row row{ex.id, ex.text};
    if (!schema.coarse.empty()) row.emplace_back(ex.coarse ? to_string(*ex.coarse) : "");
    if (!schema.fine.empty()) row.emplace_back(ex.fine ? to_string(*ex.fine) : "");
    out += csv::format_row(row, delim) + "\n";
  }
  return out;
}

void write_flat_dataset(const std::filesystem::path& path, const std::vector<LabeledExample>& examples,
                        const ColumnSchema& schema, char delim) {
  write_file(path, format_flat_dataset(examples, schema, delim));
}

std::size_t ClassDistribution::count(std::string_view label) const {
  auto idx = class_index(kind, label);
  return idx && *idx < counts.size() ? counts[*idx] : 0;
}

std::size_t ClassDistribution::majority() const {
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return best;
}

ClassDistribution class_distribution(const std::vector<LabeledExample>& examples, LabelKind which) {
  ClassDistribution dist;
  dist.kind = which;
  dist.counts.assign(num_classes(which), 0);
  for (const auto& ex : examples) {
    auto idx = ex.label_index(which);
    if (!idx) throw ValidationError("example '" + ex.id + "' has no " + std::string(to_string(which)) + " label");
    ++dist.counts[*idx];
    ++dist.total;
  }
  return dist;
}

// --- threads ----------------------------------------------------------------

Thread Thread::build(std::vector<ThreadNode> nodes) {
  if (nodes.empty()) throw StructureError("thread has no nodes");
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id.empty()) throw StructureError("thread node with empty id");
    if (!by_id.emplace(nodes[i].id, i).second) throw StructureError("duplicate node id '" + nodes[i].id + "'");
  }
  std::optional<std::size_t> root;
  std::vector<std::vector<std::size_t>> children(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (!n.parent_id) {
      if (root) throw StructureError("thread has more than one root ('" + nodes[*root].id + "', '" + n.id + "')");
      root = i;
      continue;
    }
    auto it = by_id.find(*n.parent_id);
    if (it == by_id.end()) {
      throw StructureError("node '" + n.id + "' references missing parent '" + *n.parent_id + "'");
    }
    if (it->second == i) throw StructureError("node '" + n.id + "' is its own parent");
    children[it->second].push_back(i);
  }
  if (!root) throw StructureError("thread has no root (cycle through '" + nodes.front().id + "')");

  // Pre-order walk from the root; anything unreached sits on a cycle.
  Thread t;
  std::vector<int> depth(nodes.size(), -1);
  std::vector<std::size_t> stack{*root};
  depth[*root] = 0;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    ThreadNode node = nodes[i];
    if (depth[i] > kMaxThreadDepth) {
      throw StructureError("node '" + node.id + "' has depth " + std::to_string(depth[i]) +
                           "; only tweet/comment/reply levels are supported");
    }
    if (node.depth != depth[i]) {
      throw StructureError("node '" + node.id + "' declares depth " + std::to_string(node.depth) +
                           " but its parent chain gives " + std::to_string(depth[i]));
    }
    t.index_.emplace(node.id, t.nodes_.size());
    t.nodes_.push_back(std::move(node));
    for (auto c = children[i].rbegin(); c != children[i].rend(); ++c) {
      depth[*c] = depth[i] + 1;
      stack.push_back(*c);
    }
  }
  if (t.nodes_.size() != nodes.size()) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (depth[i] < 0) throw StructureError("node '" + nodes[i].id + "' is part of a parent cycle");
    }
  }
  return t;
}

const ThreadNode* Thread::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

const ThreadNode* Thread::parent(const ThreadNode& node) const {
  return node.parent_id ? find(*node.parent_id) : nullptr;
}

bool Thread::contains(const ThreadNode& node) const {
  const ThreadNode* own = find(node.id);
  return own != nullptr && *own == node;
}

namespace {

std::string string_field(const json& obj, std::initializer_list<const char*> keys, bool required,
                         std::string_view what) {
  for (const char* k : keys) {
    auto it = obj.find(k);
    if (it == obj.end() || it->is_null()) continue;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    throw StructureError(std::string(what) + " field '" + k + "' must be a string");
  }
  if (required) throw StructureError("thread node missing " + std::string(what));
  return {};
}

void flatten_node(const json& obj, const std::optional<std::string>& parent, int depth,
                  std::vector<ThreadNode>& out) {
  if (!obj.is_object()) throw StructureError("thread node must be a JSON object");
  ThreadNode node;
  node.id = string_field(obj, {"id", "tweet_id", "comment_id", "reply_id"}, true, "id");
  node.text = string_field(obj, {"text", "tweet", "comment", "reply"}, false, "text");
  const std::string label = string_field(obj, {"label"}, false, "label");
  if (!label.empty()) {
    node.label = parse_coarse(label);
    if (!node.label) throw ValidationError("node '" + node.id + "': unknown label '" + label + "'");
  }
  if (auto it = obj.find("parent_id"); it != obj.end() && !it->is_null()) {
    const std::string declared = string_field(obj, {"parent_id"}, true, "parent_id");
    if (!parent || declared != *parent) {
      throw StructureError("node '" + node.id + "' declares parent '" + declared + "' but is nested under " +
                           (parent ? "'" + *parent + "'" : std::string("no parent")));
    }
  }
  node.parent_id = parent;
  node.depth = depth;
  out.push_back(node);
  for (const char* key : {"comments", "replies"}) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) continue;
    if (!it->is_array()) throw StructureError("'" + std::string(key) + "' must be an array");
    for (const auto& child : *it) flatten_node(child, node.id, depth + 1, out);
  }
}

Thread thread_from_json(const json& tree) {
  std::vector<ThreadNode> nodes;
  flatten_node(tree, std::nullopt, 0, nodes);
  return Thread::build(std::move(nodes));
}

json node_to_json(const Thread& t, const ThreadNode& n) {
  json obj = {{"id", n.id}, {"text", n.text}};
  obj["label"] = n.label ? json(std::string(to_string(*n.label))) : json(nullptr);
  json kids = json::array();
  for (const auto& c : t.nodes()) {
    if (c.parent_id && *c.parent_id == n.id) kids.push_back(node_to_json(t, c));
  }
  if (!kids.empty()) obj[n.depth == 0 ? "comments" : "replies"] = std::move(kids);
  return obj;
}

}  // namespace

std::vector<Thread> parse_threads(std::string_view text) {
  std::vector<Thread> out;
  try {
    json doc = json::parse(text.begin(), text.end());
    if (doc.is_array()) {
      for (const auto& tree : doc) out.push_back(thread_from_json(tree));
    } else {
      out.push_back(thread_from_json(doc));
    }
    return out;
  } catch (const json::parse_error&) {
    // Fall through to JSON lines.
  }
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    ++line_no;
    const auto line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json tree;
    try {
      tree = json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
      throw StructureError("thread file line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(thread_from_json(tree));
  }
  return out;
}

std::vector<Thread> load_threads(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw LoadError("thread file not found: " + path.string());
  return parse_threads(read_file(path));
}

std::string format_threads(const std::vector<Thread>& threads) {
  json arr = json::array();
  for (const auto& t : threads) arr.push_back(node_to_json(t, t.root()));
  return arr.dump(2) + "\n";
}

}  // namespace hsd
