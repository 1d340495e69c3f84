#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "generators.hpp"
#include "hsd/ensemble.hpp"
#include "hsd/error.hpp"
#include "hsd/metrics.hpp"
#include "oracles.hpp"

using namespace hsd;

TEST(MajorityVote, Examples) {
  const std::vector<std::size_t> clear{0, 0, 1};
  EXPECT_EQ(majority_vote(clear, TieBreak::soft_average_fallback), 0u);
  const std::vector<std::size_t> three{0, 1, 2};
  EXPECT_EQ(majority_vote(three, TieBreak::lowest_class_index), 0u);
  EXPECT_THROW(majority_vote(std::vector<std::size_t>{}, TieBreak::lowest_class_index), ValidationError);
}

TEST(MajorityVote, BruteForceModeOnOddBinaryVotes) {
  test::Gen g(301);
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::size_t> votes(2 * g.between(0, 10) + 1);
    for (auto& v : votes) v = g.index(2);
    ASSERT_EQ(majority_vote(votes, TieBreak::soft_average_fallback), test::brute_mode(votes));
    ASSERT_EQ(majority_vote(votes, TieBreak::lowest_class_index), test::brute_mode(votes));
  }
}

TEST(MajorityVote, ResultIsAlwaysAVote) {
  test::Gen g(303);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t c = g.between(2, 4);
    std::vector<std::size_t> votes(g.between(1, 9));
    std::vector<std::vector<double>> probs;
    for (auto& v : votes) {
      v = g.index(c);
      probs.push_back(g.simplex(c));
    }
    const auto r = majority_vote(votes, TieBreak::soft_average_fallback, &probs);
    ASSERT_NE(std::find(votes.begin(), votes.end(), r), votes.end());
  }
}

TEST(MajorityVote, TieBreakRules) {
  const std::vector<std::size_t> votes{0, 1, 2};
  const std::vector<std::vector<double>> probs{{0.4, 0.3, 0.3}, {0.1, 0.2, 0.7}, {0.1, 0.2, 0.7}};
  // Averaged probs favour class 2 among the tied labels.
  EXPECT_EQ(majority_vote(votes, TieBreak::soft_average_fallback, &probs), 2u);
  EXPECT_EQ(majority_vote(votes, TieBreak::lowest_class_index, &probs), 0u);
  EXPECT_EQ(majority_vote(votes, TieBreak::soft_average_fallback), 0u);
  // Only tied labels are eligible: class 3 has the highest mean but no votes.
  const std::vector<std::size_t> two{1, 2};
  const std::vector<std::vector<double>> p2{{0, 0.2, 0.1, 0.7}, {0, 0.1, 0.2, 0.7}};
  EXPECT_EQ(majority_vote(two, TieBreak::soft_average_fallback, &p2), 1u);
  // Equal means fall through to the lowest index.
  const std::vector<std::vector<double>> p3{{0.5, 0.5}, {0.5, 0.5}};
  const std::vector<std::size_t> binary{1, 0};
  EXPECT_EQ(majority_vote(binary, TieBreak::soft_average_fallback, &p3), 0u);
}

TEST(SoftAverage, Examples) {
  const std::vector<double> p{0.3, 0.7};
  const auto same = soft_average({p, p, p});
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(same[i], p[i], 1e-15);
  EXPECT_EQ(soft_average({{1, 0}, {0, 1}}), (std::vector<double>{0.5, 0.5}));
  EXPECT_THROW(soft_average({{1, 0}, {0, 0, 1}}), ValidationError);
}

TEST(SoftAverage, PermutationInvarianceIsExact) {
  test::Gen g(307);
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::vector<double>> m;
    const std::size_t c = g.between(2, 4);
    for (std::size_t k = g.between(1, 7); k > 0; --k) m.push_back(g.simplex(c, 0.0));
    const auto base = soft_average(m);
    std::shuffle(m.begin(), m.end(), g.engine());
    ASSERT_EQ(soft_average(m), base);
    double s = 0;
    for (double v : base) s += v;
    ASSERT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(EnsemblePredict, Examples) {
  EnsembleSpec soft;
  soft.mode = EnsembleMode::soft_average;
  const ProbMap a{{"x", {0.6, 0.4}}};
  const ProbMap b{{"x", {0.4, 0.6}}};
  EXPECT_EQ(ensemble_predict(soft, {a, b}).at("x"), 0u);
  const ProbMap single{{"x", {0.1, 0.9}}, {"y", {0.8, 0.2}}};
  const auto r = ensemble_predict(soft, {single});
  EXPECT_EQ(r.at("x"), 1u);
  EXPECT_EQ(r.at("y"), 0u);
  EXPECT_THROW(ensemble_predict(soft, {a, ProbMap{{"z", {0.5, 0.5}}}}), ValidationError);
  EnsembleSpec vote;
  vote.mode = EnsembleMode::majority_vote;
  const ProbMap c{{"x", {0.45, 0.55}}};
  EXPECT_EQ(ensemble_predict(vote, {a, b, c}).at("x"), 1u);
}

TEST(EnsemblePredict, ArgmaxStableUnderUniformRescaling) {
  test::Gen g(311);
  for (int i = 0; i < 300; ++i) {
    std::vector<ProbMap> members(g.between(1, 5));
    for (auto& m : members) {
      for (int id = 0; id < 4; ++id) m["i" + std::to_string(id)] = g.simplex(3);
    }
    EnsembleSpec spec;
    const auto base = ensemble_predict(spec, members);
    const double scale = g.real(0.1, 10.0);
    for (auto& m : members) {
      for (auto& [id, p] : m) {
        double s = 0;
        for (auto& v : p) s += (v *= scale);
        for (auto& v : p) v /= s;
      }
    }
    ASSERT_EQ(ensemble_predict(spec, members), base);
    ASSERT_EQ(ensemble_predict(spec, members), ensemble_predict(spec, members));
  }
}

TEST(EnsembleSpecTest, ValidationAndParsing) {
  EnsembleSpec s;
  s.mode = EnsembleMode::majority_vote;
  s.members = {"a", "b"};
  EXPECT_THROW(s.validate(), ValidationError);
  s.members.push_back("c");
  EXPECT_NO_THROW(s.validate());

  const auto parsed = parse_ensemble_spec(R"({"members":["r1","/abs/r2"],"mode":"soft_average"})", "/base");
  EXPECT_EQ(parsed.members, (std::vector<std::string>{"/base/r1", "/abs/r2"}));
  EXPECT_EQ(parsed.tie_break, TieBreak::soft_average_fallback);
  EXPECT_THROW(parse_ensemble_spec(R"({"members":["a","b"],"mode":"majority_vote"})"), ValidationError);
  EXPECT_THROW(parse_ensemble_spec(R"({"members":["a"],"mode":"bogus"})"), ConfigError);
}
