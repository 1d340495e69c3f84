#pragma once

#include <memory>
#include <optional>
#include <string_view>

#include "hsd/parameters.hpp"

namespace hsd {

enum class OptimizerKind { adam, adadelta };

std::optional<OptimizerKind> parse_optimizer_kind(std::string_view s);
std::string_view to_string(OptimizerKind k);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double rho = 0.95;            // adadelta
  double adadelta_epsilon = 1e-6;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(ParameterSet& params, const ParameterSet& grads) = 0;
};

// State buffers are sized from `layout`.
std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config, const ParameterSet& layout);

}  // namespace hsd
