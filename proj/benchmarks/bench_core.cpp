#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "hsd/encoder.hpp"
#include "hsd/heads.hpp"
#include "hsd/losses.hpp"
#include "hsd/preprocess.hpp"

using namespace hsd;

namespace {

const std::string kTweet =
    "RT @someone: This is SO bad!!! https://t.co/abc123 #angry #NotOk 😡😡 "
    "kya bakwas hai यह पूरी तरह से ग़लत है... www.example.com/x?y=z";

Matrix random_tokens(std::size_t t, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Matrix m(t, w);
  for (auto& v : m.data) v = d(eng);
  return m;
}

KimCnnConfig english_head() {
  KimCnnConfig c;
  c.input_width = 4 * 32;
  c.feature_dim = 7;
  return c;
}

}  // namespace

static void BM_CleanTextDetection(benchmark::State& state) {
  const Preprocessor pre(detection_preset());
  for (auto _ : state) benchmark::DoNotOptimize(pre.clean(kTweet));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * kTweet.size()));
}
BENCHMARK(BM_CleanTextDetection);

static void BM_CleanTextCharacterization(benchmark::State& state) {
  auto cfg = characterization_preset();
  cfg.normalize_indic = true;
  const Preprocessor pre(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(pre.clean(kTweet));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * kTweet.size()));
}
BENCHMARK(BM_CleanTextCharacterization);

static void BM_ToyEncode(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(toy_encode(kTweet, std::nullopt, 7));
}
BENCHMARK(BM_ToyEncode);

static void BM_ToyEncodePair(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(toy_encode(kTweet, std::string_view("the parent tweet"), 7));
}
BENCHMARK(BM_ToyEncodePair);

static void BM_KimCnnForward(benchmark::State& state) {
  const auto head = KimCnnHead::initialize(english_head(), 1);
  const Matrix tokens = random_tokens(static_cast<std::size_t>(state.range(0)), 128, 2);
  const std::vector<double> features(7, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(head.forward(tokens, features, false, 0));
}
BENCHMARK(BM_KimCnnForward)->Arg(16)->Arg(64)->Arg(128);

static void BM_KimCnnForwardBackward(benchmark::State& state) {
  const auto head = KimCnnHead::initialize(english_head(), 1);
  const Matrix tokens = random_tokens(static_cast<std::size_t>(state.range(0)), 128, 2);
  const std::vector<double> features(7, 0.5);
  LossConfig loss;
  loss.kind = LossKind::focal;
  for (auto _ : state) {
    HeadTrace trace;
    const auto probs = head.forward(tokens, features, true, 3, &trace);
    benchmark::DoNotOptimize(head.backward(trace, loss_gradient_logits(probs, 0, loss)));
  }
}
BENCHMARK(BM_KimCnnForwardBackward)->Arg(16)->Arg(64)->Arg(128);
BENCHMARK_MAIN();
