#include <gtest/gtest.h>

#include <cmath>
#include <atomic>
#include <chrono>
#include <thread>

#include "generators.hpp"
#include "hsd/encoder.hpp"
#include "hsd/error.hpp"
#include "hsd/training.hpp"

using namespace hsd;

namespace {

bool all_in_range(const EncoderOutput& out) {
  for (const auto& m : out.hidden_states) {
    for (double v : m.data) {
      if (!std::isfinite(v) || v < -1.0 || v > 1.0) return false;
    }
  }
  for (double v : out.pooled) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

class PairlessBackend final : public EncoderBackend {
 public:
  PairlessBackend() { spec_.supports_pairs = false; }
  const EncoderSpec& spec() const override { return spec_; }
  EncoderOutput encode_segments(std::string_view a, std::optional<std::string_view> b,
                                std::uint64_t seed) const override {
    return toy_encode(a, b, seed);
  }

 private:
  EncoderSpec spec_ = toy_spec();
};

class BrokenBackend final : public EncoderBackend {
 public:
  const EncoderSpec& spec() const override { return spec_; }
  EncoderOutput encode_segments(std::string_view a, std::optional<std::string_view> b,
                                std::uint64_t seed) const override {
    auto out = toy_encode(a, b, seed);
    out.hidden_states[0].data[0] = NAN;
    return out;
  }

 private:
  EncoderSpec spec_ = toy_spec();
};

class MisShapedBackend final : public EncoderBackend {
 public:
  const EncoderSpec& spec() const override { return spec_; }
  EncoderOutput encode_segments(std::string_view a, std::optional<std::string_view> b,
                                std::uint64_t seed) const override {
    auto out = toy_encode(a, b, seed);
    out.hidden_states.pop_back();
    return out;
  }

 private:
  EncoderSpec spec_ = toy_spec();
};

class CountingBackend final : public EncoderBackend {
 public:
  const EncoderSpec& spec() const override { return spec_; }
  bool reentrant() const override { return false; }
  EncoderOutput encode_segments(std::string_view a, std::optional<std::string_view> b,
                                std::uint64_t seed) const override {
    const int now = ++active_;
    max_active_ = std::max(max_active_.load(), now);
    std::this_thread::sleep_for(std::chrono::microseconds(50));
    --active_;
    return toy_encode(a, b, seed);
  }
  int max_active() const { return max_active_; }

 private:
  EncoderSpec spec_ = toy_spec();
  mutable std::atomic<int> active_{0};
  mutable std::atomic<int> max_active_{0};
};

}  // namespace

TEST(ToyEncoder, ShapeContract) {
  const ToyEncoder enc;
  const auto out = encode(enc, "ab");
  ASSERT_EQ(out.num_layers(), 4u);
  EXPECT_EQ(out.hidden_dim(), 32u);
  for (const auto& m : out.hidden_states) {
    EXPECT_EQ(m.rows, out.token_count);
    EXPECT_EQ(m.cols, 32u);
  }
  EXPECT_TRUE(all_in_range(out));
}

TEST(ToyEncoder, Deterministic) {
  const ToyEncoder enc;
  EXPECT_EQ(encode(enc, "hello there", std::string_view("ctx"), 3), encode(enc, "hello there", std::string_view("ctx"), 3));
}

TEST(ToyEncoder, PairOrderMatters) {
  const ToyEncoder enc;
  EXPECT_NE(encode(enc, "a", std::string_view("b")).pooled, encode(enc, "b", std::string_view("a")).pooled);
}

TEST(ToyEncoder, EmptyInputIsOnePaddingToken) {
  const auto out = toy_encode("", std::nullopt, 0);
  EXPECT_EQ(out.token_count, 1u);
  EXPECT_TRUE(all_in_range(out));
}

TEST(ToyEncoder, PositionEntersTheHash) {
  const auto out = toy_encode("same same", std::nullopt, 0);
  ASSERT_EQ(out.token_count, 2u);
  const auto& last = out.hidden_states.back();
  std::vector<double> r0(last.data.begin(), last.data.begin() + 32);
  std::vector<double> r1(last.data.begin() + 32, last.data.begin() + 64);
  EXPECT_NE(r0, r1);
}

TEST(ToyEncoder, SeedChangesTensor) {
  EXPECT_NE(toy_encode("text", std::nullopt, 1), toy_encode("text", std::nullopt, 2));
}

TEST(ToyEncoder, PooledIsMeanOfFinalLayer) {
  const auto out = toy_encode("a b c", std::nullopt, 4);
  const auto& last = out.hidden_states.back();
  for (std::size_t h = 0; h < 32; ++h) {
    double s = 0;
    for (std::size_t t = 0; t < last.rows; ++t) s += last.data[t * last.cols + h];
    EXPECT_NEAR(out.pooled[h], s / static_cast<double>(last.rows), 1e-12);
  }
}

TEST(ToyEncoder, FiniteOnFuzz) {
  test::Gen g(41);
  for (int i = 0; i < 10000; ++i) {
    const auto a = g.tweet();
    std::optional<std::string> b;
    if (g.coin(0.3)) b = g.tweet();
    const auto out = toy_encode(a, b ? std::optional<std::string_view>(*b) : std::nullopt, i);
    ASSERT_TRUE(all_in_range(out)) << a;
    ASSERT_GE(out.token_count, 1u);
    ASSERT_LE(out.token_count, 128u);
  }
}

TEST(Encode, CapabilityAndValidation) {
  const PairlessBackend pairless;
  EXPECT_NO_THROW(encode(pairless, "a"));
  EXPECT_THROW(encode(pairless, "a", std::string_view("b")), CapabilityError);
  const BrokenBackend broken;
  EXPECT_THROW(encode(broken, "a"), NumericError);
  const MisShapedBackend mis_shaped;
  EXPECT_THROW(encode(mis_shaped, "a"), DimensionError);
}

TEST(ConcatLayers, Contract) {
  const auto out = toy_encode("one two three", std::nullopt, 0);
  const Matrix k1 = concat_last_k_layers(out, 1);
  EXPECT_EQ(k1, out.hidden_states.back());
  const Matrix k4 = concat_last_k_layers(out, 4);
  EXPECT_EQ(k4.cols, 4u * 32u);
  EXPECT_EQ(k4.rows, out.token_count);
  // Deepest layer last.
  for (std::size_t t = 0; t < k4.rows; ++t) {
    for (std::size_t l = 0; l < 4; ++l) {
      for (std::size_t h = 0; h < 32; ++h) {
        ASSERT_EQ(k4.data[t * k4.cols + l * 32 + h], out.hidden_states[l].data[t * 32 + h]);
      }
    }
  }
  EXPECT_THROW(concat_last_k_layers(out, 5), DimensionError);
  EXPECT_THROW(concat_last_k_layers(out, 0), DimensionError);
}

TEST(ConcatLayers, WidthPropertyAndTwelveLayerWidth) {
  test::Gen g(43);
  for (int trial = 0; trial < 100; ++trial) {
    EncoderSpec spec = toy_spec();
    spec.num_layers = static_cast<int>(g.between(1, 12));
    spec.hidden_dim = static_cast<int>(g.between(1, 40));
    const auto out = toy_encode("x y", std::nullopt, trial, spec);
    const std::size_t k = g.between(1, spec.num_layers);
    ASSERT_EQ(concat_last_k_layers(out, k).cols, k * spec.hidden_dim);
  }
  EncoderSpec wide = toy_spec();
  wide.num_layers = 12;
  wide.hidden_dim = 768;
  EXPECT_EQ(concat_last_k_layers(toy_encode("x", std::nullopt, 0, wide), 4).cols, 3072u);
}

TEST(Truncation, ProportionalTails) {
  const auto b = truncate_pair(300, 100, 128);
  EXPECT_EQ(b.keep_a + b.keep_b, 128u);
  EXPECT_EQ(b.keep_a, 96u);
  const auto small = truncate_pair(3, 4, 128);
  EXPECT_EQ(small.keep_a, 3u);
  EXPECT_EQ(small.keep_b, 4u);
  const auto lopsided = truncate_pair(1, 1000, 8);
  EXPECT_GE(lopsided.keep_a, 1u);
  EXPECT_EQ(lopsided.keep_a + lopsided.keep_b, 8u);
  std::string long_text;
  for (int i = 0; i < 300; ++i) long_text += "w" + std::to_string(i) + " ";
  EXPECT_EQ(toy_encode(long_text, std::string_view(long_text), 0).token_count, 128u);
}

TEST(Encode, SerializedBackendAndParallelBatch) {
  auto inner = std::make_shared<CountingBackend>();
  std::vector<TextSample> samples;
  for (int i = 0; i < 40; ++i) samples.push_back({"id" + std::to_string(i), "text " + std::to_string(i), {}, {}, 0, false});
  EncodingOptions opts;
  opts.threads = 4;
  const auto par = encode_dataset(samples, *inner, opts, 2);
  EXPECT_EQ(inner->max_active(), 1);
  opts.threads = 1;
  const ToyEncoder toy;
  const auto seq = encode_dataset(samples, toy, opts, 2);
  ASSERT_EQ(par.examples.size(), seq.examples.size());
  for (std::size_t i = 0; i < seq.examples.size(); ++i) {
    EXPECT_EQ(par.examples[i].id, seq.examples[i].id);
    EXPECT_EQ(par.examples[i].tokens, seq.examples[i].tokens);
  }
  const SerializedBackend wrapped(inner);
  EXPECT_EQ(encode(wrapped, "a b").pooled, toy_encode("a b", std::nullopt, 0).pooled);
}
