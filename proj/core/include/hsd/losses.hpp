#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hsd/corpus.hpp"

namespace hsd {

enum class LossKind { cross_entropy, weighted_ce, focal };

// How a per-class weight vector is obtained: given explicitly, or computed
// from the training fold's class counts.
enum class WeightSource { none, explicit_values, inverse_frequency };

std::optional<LossKind> parse_loss_kind(std::string_view s);
std::string_view to_string(LossKind k);

inline constexpr double kProbClamp = 1e-12;

struct LossConfig {
  LossKind kind = LossKind::cross_entropy;
  // weighted_ce: w_t.
  WeightSource weight_source = WeightSource::none;
  std::vector<double> class_weights;
  // focal: alpha_t * (1 - p_t)^gamma * -log p_t. A single-element alpha is
  // a scalar applied to every class.
  double gamma = 2.0;
  WeightSource alpha_source = WeightSource::none;
  std::vector<double> alpha;

  // Throws ConfigError on invalid settings for num_classes.
  void validate(std::size_t num_classes) const;
  // Fills inverse-frequency vectors from the given distribution.
  LossConfig resolved(const ClassDistribution& train_distribution) const;
};

// Throws ValidationError when probs are off the simplex by more than 1e-4
// and IndexError for an out-of-range target.
void check_probs(std::span<const double> probs, std::size_t target);

double loss_value(std::span<const double> probs, std::size_t target, const LossConfig& config);
// d loss / d probs.
std::vector<double> loss_gradient(std::span<const double> probs, std::size_t target, const LossConfig& config);
// d loss / d logits when probs = softmax(logits). For cross entropy this is
// exactly p - one_hot(target).
std::vector<double> loss_gradient_logits(std::span<const double> probs, std::size_t target,
                                         const LossConfig& config);

// w_c = total / (C * count_c), rescaled to mean 1.
std::vector<double> inverse_frequency_weights(const ClassDistribution& distribution);

}  // namespace hsd
