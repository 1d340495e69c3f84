#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "generators.hpp"
#include "hsd/error.hpp"
#include "hsd/heads.hpp"
#include "hsd/losses.hpp"
#include "oracles.hpp"

using namespace hsd;

namespace {

LossConfig ce() { return {}; }

LossConfig weighted(std::vector<double> w) {
  LossConfig c;
  c.kind = LossKind::weighted_ce;
  c.weight_source = WeightSource::explicit_values;
  c.class_weights = std::move(w);
  return c;
}

LossConfig focal(double gamma, std::vector<double> alpha = {}) {
  LossConfig c;
  c.kind = LossKind::focal;
  c.gamma = gamma;
  if (!alpha.empty()) {
    c.alpha_source = WeightSource::explicit_values;
    c.alpha = std::move(alpha);
  }
  return c;
}

ClassDistribution dist(std::vector<std::size_t> counts) {
  ClassDistribution d;
  d.kind = counts.size() == 2 ? LabelKind::coarse : LabelKind::fine;
  d.total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  d.counts = std::move(counts);
  return d;
}

}  // namespace

TEST(LossValue, PerfectPredictionIsZero) {
  const std::vector<double> p{0.0, 1.0, 0.0};
  EXPECT_EQ(loss_value(p, 1, ce()), 0.0);
  EXPECT_EQ(loss_value(p, 1, weighted({1, 2, 3})), 0.0);
  EXPECT_EQ(loss_value(p, 1, focal(2.0)), 0.0);
  EXPECT_EQ(loss_value(p, 1, focal(0.5, {0.3, 0.3, 0.4})), 0.0);
}

TEST(LossValue, Formulas) {
  const std::vector<double> p{0.25, 0.75};
  EXPECT_DOUBLE_EQ(loss_value(p, 0, ce()), -std::log(0.25));
  EXPECT_DOUBLE_EQ(loss_value(p, 0, weighted({3, 1})), -3 * std::log(0.25));
  EXPECT_DOUBLE_EQ(loss_value(p, 0, focal(2.0)), 0.75 * 0.75 * -std::log(0.25));
  EXPECT_DOUBLE_EQ(loss_value(p, 1, focal(1.0, {0.5, 0.2})), 0.2 * 0.25 * -std::log(0.75));
  EXPECT_DOUBLE_EQ(loss_value(p, 1, focal(1.0, {0.4})), 0.4 * 0.25 * -std::log(0.75));
}

TEST(LossValue, ClampAtZeroProbability) {
  const std::vector<double> p{0.0, 1.0};
  EXPECT_DOUBLE_EQ(loss_value(p, 0, ce()), -std::log(kProbClamp));
}

TEST(LossValue, FocalReducesToCrossEntropy) {
  test::Gen g(101);
  for (int i = 0; i < 1000; ++i) {
    const auto p = g.simplex(g.between(2, 4), 1e-6);
    const std::size_t t = g.index(p.size());
    const double c = loss_value(p, t, ce());
    ASSERT_LT(std::abs(loss_value(p, t, focal(0.0)) - c), 1e-9);
    ASSERT_LE(loss_value(p, t, focal(2.0)), c);
    ASSERT_GE(loss_value(p, t, focal(2.0)), 0.0);
  }
}

TEST(LossValue, FocalMonotoneInTargetProbability) {
  test::Gen g(103);
  for (double gamma : {0.0, 0.5, 1.0, 2.0, 5.0}) {
    std::vector<double> pts;
    for (int i = 0; i < 200; ++i) pts.push_back(g.real(1e-9, 1.0));
    std::sort(pts.begin(), pts.end());
    double prev = std::numeric_limits<double>::infinity();
    for (double pt : pts) {
      const std::vector<double> p{pt, 1.0 - pt};
      const double l = loss_value(p, 0, focal(gamma, {0.7, 0.3}));
      ASSERT_LE(l, prev);
      prev = l;
    }
  }
}

TEST(LossValue, Errors) {
  EXPECT_THROW(loss_value(std::vector<double>{0.5, 0.5}, 2, ce()), IndexError);
  EXPECT_THROW(loss_value(std::vector<double>{0.5, 0.6}, 0, ce()), ValidationError);
  EXPECT_NO_THROW(loss_value(std::vector<double>{0.5, 0.50005}, 0, ce()));
  EXPECT_THROW(loss_value(std::vector<double>{NAN, 1.0}, 0, ce()), ValidationError);
}

TEST(LossGradient, CrossEntropyLogitGradientIsExact) {
  test::Gen g(107);
  for (int i = 0; i < 200; ++i) {
    const auto p = g.simplex(g.between(2, 4));
    const std::size_t t = g.index(p.size());
    const auto d = loss_gradient_logits(p, t, ce());
    for (std::size_t j = 0; j < p.size(); ++j) ASSERT_EQ(d[j], p[j] - (j == t ? 1.0 : 0.0));
  }
}

TEST(LossGradient, FocalAgainstFiniteDifferences) {
  test::Gen g(109);
  for (int i = 0; i < 100; ++i) {
    const double gamma = std::vector<double>{0.5, 1.0, 2.0}[g.index(3)];
    const std::size_t n = g.between(2, 4);
    std::vector<double> alpha;
    if (g.coin()) {
      for (std::size_t k = 0; k < n; ++k) alpha.push_back(g.real(0.1, 1));
    }
    const LossConfig cfg = focal(gamma, alpha);
    const auto p = g.simplex(n, 0.02);
    const std::size_t t = g.index(n);

    // With respect to the probabilities.
    const auto dp = loss_gradient(p, t, cfg);
    const auto np = test::numeric_gradient([&](const std::vector<double>& x) { return loss_value(x, t, cfg); }, p, 1e-7);
    for (std::size_t j = 0; j < n; ++j) ASSERT_LT(test::relative_error(dp[j], np[j]), 1e-4) << i;

    // With respect to the logits through softmax.
    std::vector<double> z(n);
    for (std::size_t j = 0; j < n; ++j) z[j] = std::log(p[j]);
    const auto dz = loss_gradient_logits(softmax(z), t, cfg);
    const auto nz = test::numeric_gradient([&](const std::vector<double>& x) { return loss_value(softmax(x), t, cfg); },
                                           z, 1e-5);
    for (std::size_t j = 0; j < n; ++j) ASSERT_LT(test::relative_error(dz[j], nz[j]), 1e-4) << i;
  }
}

TEST(LossGradient, WeightedAgainstFiniteDifferences) {
  test::Gen g(113);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = g.between(2, 4);
    std::vector<double> w;
    for (std::size_t k = 0; k < n; ++k) w.push_back(g.real(0.1, 3));
    const auto cfg = weighted(w);
    std::vector<double> z(n);
    for (auto& v : z) v = g.real(-3, 3);
    const std::size_t t = g.index(n);
    const auto dz = loss_gradient_logits(softmax(z), t, cfg);
    const auto nz = test::numeric_gradient([&](const std::vector<double>& x) { return loss_value(softmax(x), t, cfg); },
                                           z, 1e-5);
    for (std::size_t j = 0; j < n; ++j) ASSERT_LT(test::relative_error(dz[j], nz[j]), 1e-4);
  }
}

TEST(LossGradient, CertainCorrectPredictionGivesZeroLogitGradient) {
  const std::vector<double> p{0.0, 1.0, 0.0};
  for (const auto& cfg : {ce(), weighted({1, 2, 3}), focal(2.0), focal(0.5, {0.2, 0.3, 0.5}), focal(0.0)}) {
    for (double v : loss_gradient_logits(p, 1, cfg)) EXPECT_EQ(v, 0.0);
  }
}

TEST(LossGradient, Finite) {
  test::Gen g(127);
  for (int i = 0; i < 500; ++i) {
    auto p = g.simplex(3, 0.0);
    p[g.index(3)] = 0.0;
    double s = p[0] + p[1] + p[2];
    if (s == 0) continue;
    for (auto& v : p) v /= s;
    const std::size_t t = g.index(3);
    for (const auto& cfg : {ce(), focal(0.5), focal(2.0)}) {
      for (double v : loss_gradient(p, t, cfg)) ASSERT_TRUE(std::isfinite(v));
      for (double v : loss_gradient_logits(p, t, cfg)) ASSERT_TRUE(std::isfinite(v));
    }
  }
}

TEST(InverseFrequency, Examples) {
  EXPECT_EQ(inverse_frequency_weights(dist({10, 10})), (std::vector<double>{1.0, 1.0}));
  const auto w = inverse_frequency_weights(dist({30, 10}));
  EXPECT_NEAR(w[0], 0.5, 1e-12);
  EXPECT_NEAR(w[1], 1.5, 1e-12);
  const auto hi = inverse_frequency_weights(dist({3161, 654, 566, 213}));
  EXPECT_LT(hi[0], hi[1]);
  EXPECT_LT(hi[1], hi[2]);
  EXPECT_LT(hi[2], hi[3]);
  EXPECT_THROW(inverse_frequency_weights(dist({5, 0})), ValidationError);
}

TEST(InverseFrequency, MeanOne) {
  test::Gen g(131);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::size_t> counts(g.between(2, 4));
    for (auto& c : counts) c = g.between(1, 5000);
    const auto w = inverse_frequency_weights(dist(counts));
    ASSERT_NEAR(std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size()), 1.0, 1e-12);
  }
}

TEST(LossConfigTest, ValidationAndResolution) {
  EXPECT_THROW(weighted({1.0}).validate(2), ConfigError);
  EXPECT_THROW(weighted({1.0, -1.0}).validate(2), ConfigError);
  EXPECT_THROW(focal(-1.0).validate(2), ConfigError);
  EXPECT_THROW(focal(INFINITY).validate(2), ConfigError);
  EXPECT_NO_THROW(focal(1.0, {0.5}).validate(3));
  LossConfig auto_alpha = focal(2.0);
  auto_alpha.alpha_source = WeightSource::inverse_frequency;
  const auto r = auto_alpha.resolved(dist({30, 10}));
  ASSERT_EQ(r.alpha.size(), 2u);
  EXPECT_NEAR(r.alpha[0], 0.5, 1e-12);
  EXPECT_NEAR(r.alpha[1], 1.5, 1e-12);
}
