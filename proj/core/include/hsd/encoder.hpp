#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsd/matrix.hpp"

namespace hsd {

struct EncoderSpec {
  std::string name = "toy";
  int num_layers = 4;
  int hidden_dim = 32;
  int max_tokens = 128;
  bool supports_pairs = true;

  void validate() const;
};

struct EncoderOutput {
  std::vector<Matrix> hidden_states;  // one [T][H] matrix per layer, shallowest first
  std::vector<double> pooled;         // H
  std::size_t token_count = 0;

  std::size_t num_layers() const { return hidden_states.size(); }
  std::size_t hidden_dim() const { return pooled.size(); }
  bool operator==(const EncoderOutput&) const = default;
};

// Adapter contract for sentence encoders. A backend receives the ordered
// segment pair and applies its own boundary markers. Real transformer models
// plug in here; the library itself only ships ToyEncoder.
class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;
  virtual const EncoderSpec& spec() const = 0;
  virtual bool reentrant() const { return true; }
  virtual EncoderOutput encode_segments(std::string_view text_a, std::optional<std::string_view> text_b,
                                        std::uint64_t seed) const = 0;
};

// Checks pair capability and validates the backend output (shape and
// finiteness). Throws CapabilityError or DimensionError.
EncoderOutput encode(const EncoderBackend& backend, std::string_view text_a,
                     std::optional<std::string_view> text_b = std::nullopt, std::uint64_t seed = 0);

// Row t = hidden_states[L-k][t] ++ ... ++ hidden_states[L-1][t].
Matrix concat_last_k_layers(const EncoderOutput& out, std::size_t k);

struct SegmentBudget {
  std::size_t keep_a = 0;
  std::size_t keep_b = 0;
};

// Splits max_tokens between two segments in proportion to their lengths,
// cutting each from its tail. A non-empty segment keeps at least one token
// when max_tokens >= 2.
SegmentBudget truncate_pair(std::size_t len_a, std::size_t len_b, std::size_t max_tokens);

EncoderSpec toy_spec();

// Deterministic hash-based stand-in for a transformer. Tokens are whitespace
// pieces; each row mixes a (token, layer, segment) hash with a
// (position, layer, segment) hash, so repeated tokens differ by position.
// Values lie in [-1, 1]; pooled is the mean of the final layer.
class ToyEncoder final : public EncoderBackend {
 public:
  explicit ToyEncoder(EncoderSpec spec = toy_spec());

  const EncoderSpec& spec() const override { return spec_; }
  EncoderOutput encode_segments(std::string_view text_a, std::optional<std::string_view> text_b,
                                std::uint64_t seed) const override;

 private:
  EncoderSpec spec_;
};

EncoderOutput toy_encode(std::string_view text_a, std::optional<std::string_view> text_b, std::uint64_t seed,
                         const EncoderSpec& spec = toy_spec());

// Queueing adapter: serializes calls into a non-reentrant backend.
class SerializedBackend final : public EncoderBackend {
 public:
  explicit SerializedBackend(std::shared_ptr<const EncoderBackend> inner);

  const EncoderSpec& spec() const override { return inner_->spec(); }
  EncoderOutput encode_segments(std::string_view text_a, std::optional<std::string_view> text_b,
                                std::uint64_t seed) const override;

 private:
  std::shared_ptr<const EncoderBackend> inner_;
  mutable std::mutex mutex_;
};

}  // namespace hsd
