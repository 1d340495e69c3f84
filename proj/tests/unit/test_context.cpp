#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "generators.hpp"
#include "hsd/context.hpp"
#include "hsd/encoder.hpp"
#include "hsd/error.hpp"

using namespace hsd;

namespace {

Thread chain() {
  return Thread::build({{"t", "Root tweet", CoarseLabel::HOF, {}, 0},
                        {"c", "A comment", CoarseLabel::NOT, std::string("t"), 1},
                        {"r", "The reply", CoarseLabel::HOF, std::string("c"), 2}});
}

}  // namespace

TEST(Context, ThreeShapes) {
  const Thread t = chain();
  const auto root = build_contextual_input(t.nodes()[0], t);
  EXPECT_EQ(root.target_text, "Root tweet");
  EXPECT_EQ(root.context_text, "");
  EXPECT_EQ(root.depth, 0);
  const auto comment = build_contextual_input(t.nodes()[1], t);
  EXPECT_EQ(comment.context_text, "Root tweet");
  const auto reply = build_contextual_input(t.nodes()[2], t);
  EXPECT_EQ(reply.target_text, "The reply");
  EXPECT_EQ(reply.context_text, "Root tweet A comment");
  EXPECT_EQ(reply.node_id, "r");
  EXPECT_EQ(reply.label, CoarseLabel::HOF);
}

TEST(Context, PreprocessedPiecesAndSeparator) {
  const Thread t = Thread::build({{"t", "ROOT http://x.y", {}, {}, 0},
                                  {"c", "@only", {}, std::string("t"), 1},
                                  {"r", "Reply!", {}, std::string("c"), 2}});
  const Preprocessor pre(detection_preset());
  const auto reply = build_contextual_input(t.nodes()[2], t, &pre);
  EXPECT_EQ(reply.target_text, "reply");
  // The comment cleans to nothing, so no dangling separator.
  EXPECT_EQ(reply.context_text, "root");
  ContextOptions sep;
  sep.separator = " [SEP] ";
  EXPECT_EQ(build_contextual_input(chain().nodes()[2], chain(), nullptr, sep).context_text,
            "Root tweet [SEP] A comment");
}

TEST(Context, NodeMustBelongToTree) {
  const Thread a = chain();
  const Thread b = Thread::build({{"t", "other", {}, {}, 0}});
  EXPECT_THROW(build_contextual_input(a.nodes()[1], b), StructureError);
}

TEST(Flatten, Counting) {
  const Thread t = Thread::build({{"t", "a", {}, {}, 0},
                                  {"c1", "b", {}, std::string("t"), 1},
                                  {"c2", "c", {}, std::string("t"), 1}});
  EXPECT_EQ(flatten_threads({t}).size(), 3u);
  EXPECT_TRUE(flatten_threads({}).empty());
}

TEST(Flatten, FuzzedTrees) {
  test::Gen g(401);
  for (int trial = 0; trial < 200; ++trial) {
    const auto trees = test::random_threads(g);
    std::size_t nodes = 0;
    for (const auto& t : trees) nodes += t.size();
    const Preprocessor pre(characterization_preset());
    const auto flat = flatten_threads(trees, &pre);
    ASSERT_EQ(flat.size(), nodes);
    ASSERT_EQ(flatten_threads(trees, &pre), flat);
    std::set<std::string> seen;
    std::size_t i = 0;
    for (const auto& tree : trees) {
      for (const auto& n : tree.nodes()) {
        ASSERT_EQ(flat[i].node_id, n.id);
        ASSERT_EQ(flat[i].depth, n.depth);
        if (n.depth == 0) {
          ASSERT_EQ(flat[i].context_text, "");
        }
        if (n.parent_id) {
          ASSERT_TRUE(seen.count(*n.parent_id));
        }
        seen.insert(n.id);
        ++i;
      }
    }
  }
}

TEST(Context, FeedsEncoderTargetFirst) {
  const Thread t = chain();
  const auto in = build_contextual_input(t.nodes()[1], t);
  const ToyEncoder enc;
  const auto pair = encode(enc, in.target_text, std::string_view(in.context_text));
  EXPECT_EQ(pair, toy_encode("A comment", std::string_view("Root tweet"), 0));
  EXPECT_NE(pair, toy_encode("Root tweet", std::string_view("A comment"), 0));
}
