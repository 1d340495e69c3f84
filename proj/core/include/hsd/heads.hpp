#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hsd/matrix.hpp"
#include "hsd/parameters.hpp"

namespace hsd {

enum class HeadKind { kim_cnn, mlp };

std::optional<HeadKind> parse_head_kind(std::string_view s);
std::string_view to_string(HeadKind k);

// Kim-style CNN over the token axis: per width a convolution, ReLU and
// global max-pool; the pooled maps feed a ReLU fully-connected layer with
// dropout, whose output is concatenated with the hand-crafted features
// before the softmax output layer.
struct KimCnnConfig {
  std::size_t input_width = 128;
  std::vector<std::size_t> conv_widths{2, 3, 4};
  std::size_t filters_per_width = 128;
  std::size_t fc_dim = 128;
  double dropout = 0.5;
  std::size_t num_classes = 2;
  std::size_t feature_dim = 0;

  void validate() const;
  std::size_t max_width() const;
  bool operator==(const KimCnnConfig&) const = default;
};

// Single linear layer over the encoder's pooled vector.
struct MlpConfig {
  std::size_t input_dim = 32;
  std::size_t num_classes = 2;

  void validate() const;
  bool operator==(const MlpConfig&) const = default;
};

struct HeadConfig {
  HeadKind kind = HeadKind::kim_cnn;
  KimCnnConfig kim;
  MlpConfig mlp;

  std::size_t num_classes() const { return kind == HeadKind::kim_cnn ? kim.num_classes : mlp.num_classes; }
  void validate() const;
  bool operator==(const HeadConfig&) const = default;
};

std::string head_config_to_json(const HeadConfig& cfg);
HeadConfig head_config_from_json(std::string_view json_text);

struct HeadInput {
  const Matrix* tokens = nullptr;     // [T][input_width], Kim-CNN only
  std::span<const double> features;   // Kim-CNN only
  std::span<const double> pooled;     // MLP only
};

// Intermediates recorded by a forward pass and consumed by backward.
struct HeadTrace {
  const void* owner = nullptr;
  std::uint64_t generation = 0;

  Matrix tokens;                      // zero-padded to the largest width
  std::vector<std::size_t> argmax;    // per pooled unit, width-major
  std::vector<double> pooled_pre;     // conv response at argmax
  std::vector<double> pooled;
  std::vector<double> fc_pre;
  std::vector<double> dropout_scale;  // 0 or 1/(1-p); all 1 in eval mode
  std::vector<double> output_input;   // fc output ++ features, or pooled for MLP
  std::vector<double> logits;
  std::vector<double> probs;
};

class Head {
 public:
  virtual ~Head() = default;

  virtual HeadKind kind() const = 0;
  virtual const HeadConfig& config() const = 0;
  // Returns class probabilities. When trace is given it is filled for backward.
  virtual std::vector<double> forward(const HeadInput& input, bool train_mode, std::uint64_t dropout_seed,
                                      HeadTrace* trace = nullptr) const = 0;
  // grads += d(loss)/d(params) given d(loss)/d(logits). Throws StateError when
  // the trace was not produced by this head with its current parameters.
  virtual void accumulate_gradients(const HeadTrace& trace, std::span<const double> dlogits,
                                    ParameterSet& grads) const = 0;
  virtual std::unique_ptr<Head> clone() const = 0;

  ParameterSet backward(const HeadTrace& trace, std::span<const double> dlogits) const;

  std::size_t num_classes() const { return config().num_classes(); }
  const ParameterSet& params() const { return params_; }
  // Any mutable access invalidates outstanding traces.
  ParameterSet& mutable_params() {
    ++generation_;
    return params_;
  }
  void set_params(ParameterSet params);

 protected:
  explicit Head(ParameterSet params) : params_(std::move(params)) {}
  void stamp(HeadTrace& trace) const;
  void check_trace(const HeadTrace& trace) const;

  ParameterSet params_;
  std::uint64_t generation_ = 1;
};

class KimCnnHead final : public Head {
 public:
  KimCnnHead(KimCnnConfig config, ParameterSet params);

  static ParameterSet layout(const KimCnnConfig& config);
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  static KimCnnHead initialize(const KimCnnConfig& config, std::uint64_t seed);

  HeadKind kind() const override { return HeadKind::kim_cnn; }
  const HeadConfig& config() const override { return config_; }
  const KimCnnConfig& kim_config() const { return config_.kim; }

  std::vector<double> forward(const HeadInput& input, bool train_mode, std::uint64_t dropout_seed,
                              HeadTrace* trace = nullptr) const override;
  std::vector<double> forward(const Matrix& tokens, std::span<const double> features, bool train_mode,
                              std::uint64_t dropout_seed, HeadTrace* trace = nullptr) const;
  void accumulate_gradients(const HeadTrace& trace, std::span<const double> dlogits,
                            ParameterSet& grads) const override;
  std::unique_ptr<Head> clone() const override { return std::make_unique<KimCnnHead>(*this); }

 private:
  HeadConfig config_;
};

class MlpHead final : public Head {
 public:
  MlpHead(MlpConfig config, ParameterSet params);

  static ParameterSet layout(const MlpConfig& config);
  static MlpHead initialize(const MlpConfig& config, std::uint64_t seed);

  HeadKind kind() const override { return HeadKind::mlp; }
  const HeadConfig& config() const override { return config_; }

  std::vector<double> forward(const HeadInput& input, bool train_mode, std::uint64_t dropout_seed,
                              HeadTrace* trace = nullptr) const override;
  std::vector<double> forward(std::span<const double> pooled, HeadTrace* trace = nullptr) const;
  void accumulate_gradients(const HeadTrace& trace, std::span<const double> dlogits,
                            ParameterSet& grads) const override;
  std::unique_ptr<Head> clone() const override { return std::make_unique<MlpHead>(*this); }

 private:
  HeadConfig config_;
};

std::unique_ptr<Head> make_head(const HeadConfig& config, std::uint64_t seed);
std::unique_ptr<Head> make_head(const HeadConfig& config, ParameterSet params);
Checkpoint to_checkpoint(const Head& head);
std::unique_ptr<Head> head_from_checkpoint(const Checkpoint& ckpt);

// Stateless forms of the two forwards.
std::vector<double> kim_cnn_forward(const Matrix& tokens, std::span<const double> features,
                                    const ParameterSet& params, const KimCnnConfig& config, bool train_mode,
                                    std::uint64_t dropout_seed);
std::vector<double> mlp_head_forward(std::span<const double> pooled, const ParameterSet& params,
                                     std::size_t num_classes);

std::vector<double> softmax(std::span<const double> logits);

}  // namespace hsd
