#include "hsd/losses.hpp"

#include <cmath>
#include <numeric>

#include "hsd/error.hpp"

namespace hsd {

std::optional<LossKind> parse_loss_kind(std::string_view s) {
  if (s == "cross_entropy" || s == "ce") return LossKind::cross_entropy;
  if (s == "weighted_ce") return LossKind::weighted_ce;
  if (s == "focal") return LossKind::focal;
  return std::nullopt;
}

std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::cross_entropy: return "cross_entropy";
    case LossKind::weighted_ce: return "weighted_ce";
    case LossKind::focal: return "focal";
  }
  return "cross_entropy";
}

namespace {

void check_positive(const std::vector<double>& v, std::size_t n, std::string_view what, bool allow_scalar) {
  if (!(v.size() == n || (allow_scalar && v.size() == 1))) {
    throw ConfigError(std::string(what) + " must have one entry per class (" + std::to_string(n) + ")");
  }
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(std::string(what) + " entries must be positive");
  }
}

double class_weight(const LossConfig& c, std::size_t t) {
  if (c.kind == LossKind::weighted_ce) {
    if (c.class_weights.empty()) throw ValidationError("weighted_ce needs resolved class weights");
    return c.class_weights.at(t);
  }
  if (c.kind == LossKind::focal) {
    if (c.alpha.empty()) {
      if (c.alpha_source == WeightSource::inverse_frequency) {
        throw ValidationError("focal alpha must be resolved before use");
      }
      return 1.0;
    }
    return c.alpha.size() == 1 ? c.alpha[0] : c.alpha.at(t);
  }
  return 1.0;
}

}  // namespace

void LossConfig::validate(std::size_t num_classes) const {
  if (kind == LossKind::weighted_ce && weight_source == WeightSource::explicit_values) {
    check_positive(class_weights, num_classes, "class_weights", false);
  }
  if (kind == LossKind::focal) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("focal gamma must be finite and >= 0");
    if (alpha_source == WeightSource::explicit_values) check_positive(alpha, num_classes, "alpha", true);
  }
}

LossConfig LossConfig::resolved(const ClassDistribution& dist) const {
  LossConfig out = *this;
  if (kind == LossKind::weighted_ce && weight_source != WeightSource::explicit_values) {
    out.class_weights = inverse_frequency_weights(dist);
  }
  if (kind == LossKind::focal && alpha_source == WeightSource::inverse_frequency) {
    out.alpha = inverse_frequency_weights(dist);
  }
  return out;
}

void check_probs(std::span<const double> probs, std::size_t target) {
  if (target >= probs.size()) {
    throw IndexError("target " + std::to_string(target) + " out of range for " + std::to_string(probs.size()) +
                     " classes");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < -1e-4) throw ValidationError("probability vector has invalid entries");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-4) throw ValidationError("probability vector sums to " + std::to_string(sum));
}

double loss_value(std::span<const double> probs, std::size_t target, const LossConfig& c) {
  check_probs(probs, target);
  const double p = std::max(probs[target], kProbClamp);
  const double nll = -std::log(p);
  const double w = class_weight(c, target);
  if (c.kind == LossKind::focal) {
    const double q = std::max(0.0, 1.0 - probs[target]);
    return w * std::pow(q, c.gamma) * nll;
  }
  return w * nll;
}

std::vector<double> loss_gradient(std::span<const double> probs, std::size_t target, const LossConfig& c) {
  check_probs(probs, target);
  std::vector<double> g(probs.size(), 0.0);
  const double p = std::max(probs[target], kProbClamp);
  const double w = class_weight(c, target);
  if (c.kind != LossKind::focal) {
    g[target] = -w / p;
    return g;
  }
  const double q = std::max(0.0, 1.0 - probs[target]);
  // d/dp [ q^gamma * -log p ] = gamma q^(gamma-1) log p - q^gamma / p; the
  // first term vanishes as q -> 0 for every gamma.
  const double first = (q > 0.0 && c.gamma != 0.0) ? c.gamma * std::pow(q, c.gamma - 1.0) * std::log(p) : 0.0;
  g[target] = w * (first - std::pow(q, c.gamma) / p);
  return g;
}

std::vector<double> loss_gradient_logits(std::span<const double> probs, std::size_t target, const LossConfig& c) {
  check_probs(probs, target);
  const std::size_t n = probs.size();
  std::vector<double> g(n);
  const double w = class_weight(c, target);
  if (c.kind != LossKind::focal) {
    for (std::size_t j = 0; j < n; ++j) g[j] = w * (probs[j] - (j == target ? 1.0 : 0.0));
    return g;
  }
  // dL/dz_j = alpha (delta_tj - p_j) [gamma q^(gamma-1) p log p - q^gamma]
  const double pt = probs[target];
  const double q = std::max(0.0, 1.0 - pt);
  if (q == 0.0) return std::vector<double>(n, 0.0);
  const double log_p = std::log(std::max(pt, kProbClamp));
  const double factor = (c.gamma != 0.0 ? c.gamma * std::pow(q, c.gamma - 1.0) * pt * log_p : 0.0) -
                        std::pow(q, c.gamma);
  for (std::size_t j = 0; j < n; ++j) g[j] = w * ((j == target ? 1.0 : 0.0) - probs[j]) * factor;
  return g;
}

std::vector<double> inverse_frequency_weights(const ClassDistribution& dist) {
  const std::size_t C = dist.counts.size();
  if (C == 0) throw ValidationError("empty class distribution");
  const std::vector<std::string> names = class_names(dist.kind);
  std::vector<double> w(C);
  const double total = static_cast<double>(dist.total);
  for (std::size_t c = 0; c < C; ++c) {
    if (dist.counts[c] == 0) {
      const std::string name = c < names.size() ? names[c] : std::to_string(c);
      throw ValidationError("class " + name + " has zero examples; smooth the counts before weighting");
    }
    w[c] = total / (static_cast<double>(C) * static_cast<double>(dist.counts[c]));
  }
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(C);
  for (double& x : w) x /= mean;
  return w;
}

}  // namespace hsd
