#include "hsd/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "hsd/error.hpp"
#include "hsd/random.hpp"
#include "hsd/unicode.hpp"

namespace hsd {

void EncoderSpec::validate() const {
  if (num_layers <= 0 || hidden_dim <= 0 || max_tokens <= 0) {
    throw ConfigError("encoder '" + name + "' dimensions must be positive");
  }
}

EncoderOutput encode(const EncoderBackend& backend, std::string_view text_a, std::optional<std::string_view> text_b,
                     std::uint64_t seed) {
  const EncoderSpec& spec = backend.spec();
  if (text_b && !spec.supports_pairs) {
    throw CapabilityError("encoder '" + spec.name + "' does not accept segment pairs");
  }
  EncoderOutput out = backend.encode_segments(text_a, text_b, seed);
  const auto L = static_cast<std::size_t>(spec.num_layers);
  const auto H = static_cast<std::size_t>(spec.hidden_dim);
  if (out.hidden_states.size() != L || out.pooled.size() != H || out.token_count == 0) {
    throw DimensionError("encoder '" + spec.name + "' returned an output inconsistent with its spec");
  }
  for (const Matrix& layer : out.hidden_states) {
    if (layer.rows != out.token_count || layer.cols != H) {
      throw DimensionError("encoder '" + spec.name + "' returned a ragged layer");
    }
    for (double v : layer.data) {
      if (!std::isfinite(v)) throw NumericError("encoder '" + spec.name + "' produced a non-finite hidden state");
    }
  }
  for (double v : out.pooled) {
    if (!std::isfinite(v)) throw NumericError("encoder '" + spec.name + "' produced a non-finite pooled vector");
  }
  return out;
}

Matrix concat_last_k_layers(const EncoderOutput& out, std::size_t k) {
  const std::size_t L = out.num_layers();
  if (k < 1 || k > L) {
    throw DimensionError("concat_last_k_layers: k=" + std::to_string(k) + " outside [1, " + std::to_string(L) + "]");
  }
  const std::size_t T = out.token_count;
  const std::size_t H = out.hidden_dim();
  Matrix m(T, k * H);
  for (std::size_t j = 0; j < k; ++j) {
    const Matrix& layer = out.hidden_states[L - k + j];
    for (std::size_t t = 0; t < T; ++t) {
      std::copy(layer.row(t).begin(), layer.row(t).end(), m.row(t).begin() + static_cast<std::ptrdiff_t>(j * H));
    }
  }
  return m;
}

SegmentBudget truncate_pair(std::size_t len_a, std::size_t len_b, std::size_t max_tokens) {
  if (len_a + len_b <= max_tokens) return {len_a, len_b};
  if (len_b == 0) return {std::min(len_a, max_tokens), 0};
  if (len_a == 0) return {0, std::min(len_b, max_tokens)};
  const double share = static_cast<double>(max_tokens) * static_cast<double>(len_a) /
                       static_cast<double>(len_a + len_b);
  std::size_t keep_a = static_cast<std::size_t>(std::llround(share));
  const std::size_t floor_a = max_tokens >= 2 ? 1 : 0;
  keep_a = std::clamp(keep_a, floor_a, std::min(len_a, max_tokens - (max_tokens >= 2 ? 1 : 0)));
  std::size_t keep_b = std::min(len_b, max_tokens - keep_a);
  keep_a = std::min(len_a, max_tokens - keep_b);
  return {keep_a, keep_b};
}

EncoderSpec toy_spec() { return EncoderSpec{}; }

ToyEncoder::ToyEncoder(EncoderSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

namespace {

double unit_from_hash(std::uint64_t h) {
  // [-1, 1]
  return static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-52 - 1.0;
}

struct ToyToken {
  std::uint64_t token_hash;
  std::size_t position;
  std::size_t segment;
};

}  // namespace

EncoderOutput ToyEncoder::encode_segments(std::string_view text_a, std::optional<std::string_view> text_b,
                                          std::uint64_t seed) const {
  const auto L = static_cast<std::size_t>(spec_.num_layers);
  const auto H = static_cast<std::size_t>(spec_.hidden_dim);
  auto a = unicode::split_whitespace(text_a);
  std::vector<std::string> b;
  if (text_b) b = unicode::split_whitespace(*text_b);
  const SegmentBudget budget = truncate_pair(a.size(), b.size(), static_cast<std::size_t>(spec_.max_tokens));
  a.resize(budget.keep_a);
  b.resize(budget.keep_b);

  std::vector<ToyToken> tokens;
  for (const auto& t : a) tokens.push_back({fnv1a64(t), tokens.size(), 0});
  for (const auto& t : b) tokens.push_back({fnv1a64(t), tokens.size(), 1});
  if (tokens.empty()) tokens.push_back({fnv1a64("<pad>"), 0, 0});

  EncoderOutput out;
  out.token_count = tokens.size();
  out.hidden_states.assign(L, Matrix(tokens.size(), H));
  for (std::size_t l = 0; l < L; ++l) {
    Matrix& layer = out.hidden_states[l];
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const ToyToken& tok = tokens[t];
      const std::uint64_t ctx = hash_combine(hash_combine(seed, l), tok.segment);
      const std::uint64_t word_key = hash_combine(ctx, tok.token_hash);
      const std::uint64_t pos_key = hash_combine(hash_combine(ctx, 0x706f73ULL), tok.position);
      for (std::size_t d = 0; d < H; ++d) {
        layer(t, d) = 0.75 * unit_from_hash(hash_combine(word_key, d)) + 0.25 * unit_from_hash(hash_combine(pos_key, d));
      }
    }
  }
  out.pooled.assign(H, 0.0);
  const Matrix& last = out.hidden_states.back();
  for (std::size_t t = 0; t < last.rows; ++t) {
    for (std::size_t d = 0; d < H; ++d) out.pooled[d] += last(t, d);
  }
  for (double& v : out.pooled) v /= static_cast<double>(last.rows);
  return out;
}

EncoderOutput toy_encode(std::string_view text_a, std::optional<std::string_view> text_b, std::uint64_t seed,
                         const EncoderSpec& spec) {
  return encode(ToyEncoder(spec), text_a, text_b, seed);
}

SerializedBackend::SerializedBackend(std::shared_ptr<const EncoderBackend> inner) : inner_(std::move(inner)) {
  if (!inner_) throw ConfigError("SerializedBackend needs a backend");
}

EncoderOutput SerializedBackend::encode_segments(std::string_view text_a, std::optional<std::string_view> text_b,
                                                 std::uint64_t seed) const {
  std::lock_guard<std::mutex> lock(mutex_);
  return inner_->encode_segments(text_a, text_b, seed);
}

}  // namespace hsd
