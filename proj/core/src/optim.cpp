#include "hsd/optim.hpp"

#include <cmath>

#include "hsd/error.hpp"

namespace hsd {

std::optional<OptimizerKind> parse_optimizer_kind(std::string_view s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "adadelta") return OptimizerKind::adadelta;
  return std::nullopt;
}

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "adadelta"; }

namespace {

class Adam final : public Optimizer {
 public:
  Adam(const OptimizerConfig& c, const ParameterSet& layout) : c_(c), m_(layout.zeros_like()), v_(layout.zeros_like()) {}

  void step(ParameterSet& params, const ParameterSet& grads) override {
    if (!params.same_layout(m_) || !grads.same_layout(m_)) throw DimensionError("adam: layout mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(c_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(c_.beta2, static_cast<double>(t_));
    for (std::size_t s = 0; s < params.slices().size(); ++s) {
      auto& p = params.slices()[s].values;
      const auto& g = grads.slices()[s].values;
      auto& m = m_.slices()[s].values;
      auto& v = v_.slices()[s].values;
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = c_.beta1 * m[i] + (1.0 - c_.beta1) * g[i];
        v[i] = c_.beta2 * v[i] + (1.0 - c_.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= c_.learning_rate * mhat / (std::sqrt(vhat) + c_.epsilon);
      }
    }
  }

 private:
  OptimizerConfig c_;
  ParameterSet m_;
  ParameterSet v_;
  long long t_ = 0;
};

// Zeiler's Adadelta with an outer learning-rate multiplier.
class Adadelta final : public Optimizer {
 public:
  Adadelta(const OptimizerConfig& c, const ParameterSet& layout)
      : c_(c), acc_grad_(layout.zeros_like()), acc_delta_(layout.zeros_like()) {}

  void step(ParameterSet& params, const ParameterSet& grads) override {
    if (!params.same_layout(acc_grad_) || !grads.same_layout(acc_grad_)) {
      throw DimensionError("adadelta: layout mismatch");
    }
    const double rho = c_.rho;
    const double eps = c_.adadelta_epsilon;
    for (std::size_t s = 0; s < params.slices().size(); ++s) {
      auto& p = params.slices()[s].values;
      const auto& g = grads.slices()[s].values;
      auto& eg = acc_grad_.slices()[s].values;
      auto& ed = acc_delta_.slices()[s].values;
      for (std::size_t i = 0; i < p.size(); ++i) {
        eg[i] = rho * eg[i] + (1.0 - rho) * g[i] * g[i];
        const double delta = std::sqrt(ed[i] + eps) / std::sqrt(eg[i] + eps) * g[i];
        ed[i] = rho * ed[i] + (1.0 - rho) * delta * delta;
        p[i] -= c_.learning_rate * delta;
      }
    }
  }

 private:
  OptimizerConfig c_;
  ParameterSet acc_grad_;
  ParameterSet acc_delta_;
};

}  // namespace

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config, const ParameterSet& layout) {
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw ConfigError("learning_rate must be finite and >= 0");
  }
  if (config.kind == OptimizerKind::adam) return std::make_unique<Adam>(config, layout);
  return std::make_unique<Adadelta>(config, layout);
}

}  // namespace hsd
