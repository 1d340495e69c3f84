#include "hsd/heads.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

#include "hsd/error.hpp"
#include "hsd/random.hpp"

namespace hsd {

using json = nlohmann::json;

std::optional<HeadKind> parse_head_kind(std::string_view s) {
  if (s == "kim_cnn" || s == "cnn") return HeadKind::kim_cnn;
  if (s == "mlp" || s == "linear") return HeadKind::mlp;
  return std::nullopt;
}

std::string_view to_string(HeadKind k) { return k == HeadKind::kim_cnn ? "kim_cnn" : "mlp"; }

void KimCnnConfig::validate() const {
  if (input_width == 0) throw ConfigError("kim_cnn: input_width must be positive");
  if (conv_widths.empty()) throw ConfigError("kim_cnn: conv_widths is empty");
  for (auto w : conv_widths) {
    if (w < 1) throw ConfigError("kim_cnn: every conv width must be >= 1");
  }
  if (filters_per_width == 0) throw ConfigError("kim_cnn: filters_per_width must be positive");
  if (fc_dim == 0) throw ConfigError("kim_cnn: fc_dim must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("kim_cnn: dropout must lie in [0, 1)");
  if (num_classes < 2) throw ConfigError("kim_cnn: num_classes must be >= 2");
}

std::size_t KimCnnConfig::max_width() const { return *std::max_element(conv_widths.begin(), conv_widths.end()); }

void MlpConfig::validate() const {
  if (input_dim == 0) throw ConfigError("mlp: input_dim must be positive");
  if (num_classes < 2) throw ConfigError("mlp: num_classes must be >= 2");
}

void HeadConfig::validate() const {
  if (kind == HeadKind::kim_cnn) {
    kim.validate();
  } else {
    mlp.validate();
  }
}

namespace {

void read_head_config(const json& j, HeadConfig& cfg) {
  auto kind = parse_head_kind(j.at("kind").get<std::string>());
  if (!kind) throw ConfigError("unknown head kind in checkpoint");
  cfg.kind = *kind;
  const json& k = j.at("kim");
  cfg.kim.input_width = k.at("input_width").get<std::size_t>();
  cfg.kim.conv_widths = k.at("conv_widths").get<std::vector<std::size_t>>();
  cfg.kim.filters_per_width = k.at("filters_per_width").get<std::size_t>();
  cfg.kim.fc_dim = k.at("fc_dim").get<std::size_t>();
  cfg.kim.dropout = k.at("dropout").get<double>();
  cfg.kim.num_classes = k.at("num_classes").get<std::size_t>();
  cfg.kim.feature_dim = k.at("feature_dim").get<std::size_t>();
  cfg.mlp.input_dim = j.at("mlp").at("input_dim").get<std::size_t>();
  cfg.mlp.num_classes = j.at("mlp").at("num_classes").get<std::size_t>();
}

}  // namespace

std::string head_config_to_json(const HeadConfig& cfg) {
  json j;
  j["kind"] = std::string(to_string(cfg.kind));
  j["kim"] = {{"input_width", cfg.kim.input_width},
              {"conv_widths", cfg.kim.conv_widths},
              {"filters_per_width", cfg.kim.filters_per_width},
              {"fc_dim", cfg.kim.fc_dim},
              {"dropout", cfg.kim.dropout},
              {"num_classes", cfg.kim.num_classes},
              {"feature_dim", cfg.kim.feature_dim}};
  j["mlp"] = {{"input_dim", cfg.mlp.input_dim}, {"num_classes", cfg.mlp.num_classes}};
  return j.dump();
}

HeadConfig head_config_from_json(std::string_view text) {
  HeadConfig cfg;
  try {
    read_head_config(json::parse(text.begin(), text.end()), cfg);
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed head config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

// --- Head ---------------------------------------------------------------------

ParameterSet Head::backward(const HeadTrace& trace, std::span<const double> dlogits) const {
  ParameterSet grads = params_.zeros_like();
  accumulate_gradients(trace, dlogits, grads);
  return grads;
}

void Head::set_params(ParameterSet params) {
  if (!params.same_layout(params_)) throw DimensionError("parameter layout does not match head config");
  if (!params.all_finite()) throw NumericError("non-finite head parameters");
  params_ = std::move(params);
  ++generation_;
}

void Head::stamp(HeadTrace& trace) const {
  trace.owner = this;
  trace.generation = generation_;
}

void Head::check_trace(const HeadTrace& trace) const {
  if (trace.owner != this) throw StateError("backward called without a matching forward pass on this head");
  if (trace.generation != generation_) throw StateError("backward called with a trace from stale parameters");
}

namespace {

std::string conv_name(std::size_t i, std::string_view part) {
  return "conv" + std::to_string(i) + "." + std::string(part);
}

void uniform_init(ParamSlice& slice, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : slice.values) v = rng.uniform(-bound, bound);
}

void check_layout(const ParameterSet& params, const ParameterSet& expected, std::string_view what) {
  if (!params.same_layout(expected)) {
    throw DimensionError(std::string(what) + ": parameter layout does not match config");
  }
  if (!params.all_finite()) throw NumericError(std::string(what) + ": non-finite parameters");
}

}  // namespace

// --- Kim CNN ------------------------------------------------------------------

ParameterSet KimCnnHead::layout(const KimCnnConfig& c) {
  c.validate();
  ParameterSet p;
  for (std::size_t i = 0; i < c.conv_widths.size(); ++i) {
    p.add(conv_name(i, "weight"), {c.filters_per_width, c.conv_widths[i] * c.input_width});
    p.add(conv_name(i, "bias"), {c.filters_per_width});
  }
  const std::size_t pooled = c.conv_widths.size() * c.filters_per_width;
  p.add("fc.weight", {c.fc_dim, pooled});
  p.add("fc.bias", {c.fc_dim});
  p.add("out.weight", {c.num_classes, c.fc_dim + c.feature_dim});
  p.add("out.bias", {c.num_classes});
  return p;
}

KimCnnHead::KimCnnHead(KimCnnConfig config, ParameterSet params) : Head(std::move(params)) {
  config_.kind = HeadKind::kim_cnn;
  config_.kim = std::move(config);
  check_layout(params_, layout(config_.kim), "kim_cnn");
}

KimCnnHead KimCnnHead::initialize(const KimCnnConfig& c, std::uint64_t seed) {
  ParameterSet p = layout(c);
  Rng rng(seed);
  for (std::size_t i = 0; i < c.conv_widths.size(); ++i) {
    uniform_init(p.at(conv_name(i, "weight")), c.conv_widths[i] * c.input_width, rng);
  }
  uniform_init(p.at("fc.weight"), c.conv_widths.size() * c.filters_per_width, rng);
  uniform_init(p.at("out.weight"), c.fc_dim + c.feature_dim, rng);
  return KimCnnHead(c, std::move(p));
}

std::vector<double> KimCnnHead::forward(const HeadInput& input, bool train_mode, std::uint64_t dropout_seed,
                                        HeadTrace* trace) const {
  if (!input.tokens) throw DimensionError("kim_cnn: no token matrix supplied");
  return forward(*input.tokens, input.features, train_mode, dropout_seed, trace);
}

std::vector<double> KimCnnHead::forward(const Matrix& tokens, std::span<const double> features, bool train_mode,
                                        std::uint64_t dropout_seed, HeadTrace* trace) const {
  const KimCnnConfig& c = config_.kim;
  if (tokens.rows < 1) throw DimensionError("kim_cnn: token matrix has no rows");
  if (tokens.cols != c.input_width) {
    throw DimensionError("kim_cnn: token width " + std::to_string(tokens.cols) + " != input_width " +
                         std::to_string(c.input_width));
  }
  if (features.size() != c.feature_dim) {
    throw DimensionError("kim_cnn: feature vector has " + std::to_string(features.size()) +
                         " values, config expects " + std::to_string(c.feature_dim));
  }

  // Short inputs are zero-padded up to the widest filter.
  const std::size_t T = std::max(tokens.rows, c.max_width());
  Matrix x(T, c.input_width);
  std::copy(tokens.data.begin(), tokens.data.end(), x.data.begin());

  const std::size_t F = c.filters_per_width;
  const std::size_t n_pooled = c.conv_widths.size() * F;
  std::vector<double> pooled(n_pooled);
  std::vector<double> pooled_pre(n_pooled);
  std::vector<std::size_t> argmax(n_pooled);
  for (std::size_t wi = 0; wi < c.conv_widths.size(); ++wi) {
    const std::size_t w = c.conv_widths[wi];
    const std::size_t span_len = w * c.input_width;
    const auto& W = params_.at(conv_name(wi, "weight")).values;
    const auto& b = params_.at(conv_name(wi, "bias")).values;
    const std::size_t positions = T - w + 1;
    for (std::size_t f = 0; f < F; ++f) {
      const double* wf = W.data() + f * span_len;
      double best = -std::numeric_limits<double>::infinity();
      std::size_t best_p = 0;
      for (std::size_t p = 0; p < positions; ++p) {
        // Rows p..p+w-1 are contiguous in row-major storage.
        const double* window = x.data.data() + p * c.input_width;
        double z = b[f];
        for (std::size_t k = 0; k < span_len; ++k) z += wf[k] * window[k];
        if (z > best) {
          best = z;
          best_p = p;
        }
      }
      const std::size_t u = wi * F + f;
      pooled_pre[u] = best;
      pooled[u] = best > 0.0 ? best : 0.0;  // max-pool commutes with ReLU
      argmax[u] = best_p;
    }
  }

  const auto& Wfc = params_.at("fc.weight").values;
  const auto& bfc = params_.at("fc.bias").values;
  std::vector<double> fc_pre(c.fc_dim);
  std::vector<double> scale(c.fc_dim, 1.0);
  if (train_mode && c.dropout > 0.0) {
    Rng rng(dropout_seed);
    const double keep = 1.0 / (1.0 - c.dropout);
    for (double& s : scale) s = rng.bernoulli(c.dropout) ? 0.0 : keep;
  }
  const std::size_t out_in = c.fc_dim + c.feature_dim;
  std::vector<double> out_input(out_in);
  for (std::size_t j = 0; j < c.fc_dim; ++j) {
    double z = bfc[j];
    const double* row = Wfc.data() + j * n_pooled;
    for (std::size_t k = 0; k < n_pooled; ++k) z += row[k] * pooled[k];
    fc_pre[j] = z;
    out_input[j] = (z > 0.0 ? z : 0.0) * scale[j];
  }
  std::copy(features.begin(), features.end(), out_input.begin() + static_cast<std::ptrdiff_t>(c.fc_dim));

  const auto& Wo = params_.at("out.weight").values;
  const auto& bo = params_.at("out.bias").values;
  std::vector<double> logits(c.num_classes);
  for (std::size_t k = 0; k < c.num_classes; ++k) {
    double z = bo[k];
    const double* row = Wo.data() + k * out_in;
    for (std::size_t j = 0; j < out_in; ++j) z += row[j] * out_input[j];
    logits[k] = z;
  }
  std::vector<double> probs = softmax(logits);

  if (trace) {
    stamp(*trace);
    trace->tokens = std::move(x);
    trace->argmax = std::move(argmax);
    trace->pooled_pre = std::move(pooled_pre);
    trace->pooled = std::move(pooled);
    trace->fc_pre = std::move(fc_pre);
    trace->dropout_scale = std::move(scale);
    trace->output_input = std::move(out_input);
    trace->logits = std::move(logits);
    trace->probs = probs;
  }
  return probs;
}

void KimCnnHead::accumulate_gradients(const HeadTrace& trace, std::span<const double> dlogits,
                                      ParameterSet& grads) const {
  check_trace(trace);
  const KimCnnConfig& c = config_.kim;
  if (dlogits.size() != c.num_classes) throw DimensionError("kim_cnn: dlogits has wrong length");
  if (!grads.same_layout(params_)) throw DimensionError("kim_cnn: gradient buffer layout mismatch");

  const std::size_t out_in = c.fc_dim + c.feature_dim;
  const std::size_t F = c.filters_per_width;
  const std::size_t n_pooled = c.conv_widths.size() * F;

  const auto& Wo = params_.at("out.weight").values;
  auto& gWo = grads.at("out.weight").values;
  auto& gbo = grads.at("out.bias").values;
  std::vector<double> d_out_in(out_in, 0.0);
  for (std::size_t k = 0; k < c.num_classes; ++k) {
    const double g = dlogits[k];
    gbo[k] += g;
    if (g == 0.0) continue;
    for (std::size_t j = 0; j < out_in; ++j) {
      gWo[k * out_in + j] += g * trace.output_input[j];
      d_out_in[j] += g * Wo[k * out_in + j];
    }
  }

  const auto& Wfc = params_.at("fc.weight").values;
  auto& gWfc = grads.at("fc.weight").values;
  auto& gbfc = grads.at("fc.bias").values;
  std::vector<double> d_pooled(n_pooled, 0.0);
  for (std::size_t j = 0; j < c.fc_dim; ++j) {
    const double g = trace.fc_pre[j] > 0.0 ? d_out_in[j] * trace.dropout_scale[j] : 0.0;
    gbfc[j] += g;
    if (g == 0.0) continue;
    for (std::size_t k = 0; k < n_pooled; ++k) {
      gWfc[j * n_pooled + k] += g * trace.pooled[k];
      d_pooled[k] += g * Wfc[j * n_pooled + k];
    }
  }

  for (std::size_t wi = 0; wi < c.conv_widths.size(); ++wi) {
    const std::size_t span_len = c.conv_widths[wi] * c.input_width;
    auto& gW = grads.at(conv_name(wi, "weight")).values;
    auto& gb = grads.at(conv_name(wi, "bias")).values;
    for (std::size_t f = 0; f < F; ++f) {
      const std::size_t u = wi * F + f;
      if (!(trace.pooled_pre[u] > 0.0)) continue;
      const double g = d_pooled[u];
      gb[f] += g;
      if (g == 0.0) continue;
      const double* window = trace.tokens.data.data() + trace.argmax[u] * c.input_width;
      double* gw = gW.data() + f * span_len;
      for (std::size_t k = 0; k < span_len; ++k) gw[k] += g * window[k];
    }
  }
}

// --- MLP ----------------------------------------------------------------------

ParameterSet MlpHead::layout(const MlpConfig& c) {
  c.validate();
  ParameterSet p;
  p.add("linear.weight", {c.num_classes, c.input_dim});
  p.add("linear.bias", {c.num_classes});
  return p;
}

MlpHead::MlpHead(MlpConfig config, ParameterSet params) : Head(std::move(params)) {
  config_.kind = HeadKind::mlp;
  config_.mlp = config;
  check_layout(params_, layout(config_.mlp), "mlp");
}

MlpHead MlpHead::initialize(const MlpConfig& c, std::uint64_t seed) {
  ParameterSet p = layout(c);
  Rng rng(seed);
  uniform_init(p.at("linear.weight"), c.input_dim, rng);
  return MlpHead(c, std::move(p));
}

std::vector<double> MlpHead::forward(const HeadInput& input, bool, std::uint64_t, HeadTrace* trace) const {
  return forward(input.pooled, trace);
}

std::vector<double> MlpHead::forward(std::span<const double> pooled, HeadTrace* trace) const {
  const MlpConfig& c = config_.mlp;
  if (pooled.size() != c.input_dim) {
    throw DimensionError("mlp: pooled vector has " + std::to_string(pooled.size()) + " values, expected " +
                         std::to_string(c.input_dim));
  }
  const auto& W = params_.at("linear.weight").values;
  const auto& b = params_.at("linear.bias").values;
  std::vector<double> logits(c.num_classes);
  for (std::size_t k = 0; k < c.num_classes; ++k) {
    double z = b[k];
    for (std::size_t j = 0; j < c.input_dim; ++j) z += W[k * c.input_dim + j] * pooled[j];
    logits[k] = z;
  }
  std::vector<double> probs = softmax(logits);
  if (trace) {
    stamp(*trace);
    trace->output_input.assign(pooled.begin(), pooled.end());
    trace->logits = std::move(logits);
    trace->probs = probs;
  }
  return probs;
}

void MlpHead::accumulate_gradients(const HeadTrace& trace, std::span<const double> dlogits,
                                   ParameterSet& grads) const {
  check_trace(trace);
  const MlpConfig& c = config_.mlp;
  if (dlogits.size() != c.num_classes) throw DimensionError("mlp: dlogits has wrong length");
  if (!grads.same_layout(params_)) throw DimensionError("mlp: gradient buffer layout mismatch");
  auto& gW = grads.at("linear.weight").values;
  auto& gb = grads.at("linear.bias").values;
  for (std::size_t k = 0; k < c.num_classes; ++k) {
    gb[k] += dlogits[k];
    for (std::size_t j = 0; j < c.input_dim; ++j) gW[k * c.input_dim + j] += dlogits[k] * trace.output_input[j];
  }
}

// --- factories ----------------------------------------------------------------

std::unique_ptr<Head> make_head(const HeadConfig& config, std::uint64_t seed) {
  config.validate();
  if (config.kind == HeadKind::kim_cnn) return std::make_unique<KimCnnHead>(KimCnnHead::initialize(config.kim, seed));
  return std::make_unique<MlpHead>(MlpHead::initialize(config.mlp, seed));
}

std::unique_ptr<Head> make_head(const HeadConfig& config, ParameterSet params) {
  config.validate();
  if (config.kind == HeadKind::kim_cnn) return std::make_unique<KimCnnHead>(config.kim, std::move(params));
  return std::make_unique<MlpHead>(config.mlp, std::move(params));
}

Checkpoint to_checkpoint(const Head& head) { return {head_config_to_json(head.config()), head.params()}; }

std::unique_ptr<Head> head_from_checkpoint(const Checkpoint& ckpt) {
  return make_head(head_config_from_json(ckpt.head_config_json), ckpt.params);
}

std::vector<double> kim_cnn_forward(const Matrix& tokens, std::span<const double> features,
                                    const ParameterSet& params, const KimCnnConfig& config, bool train_mode,
                                    std::uint64_t dropout_seed) {
  return KimCnnHead(config, params).forward(tokens, features, train_mode, dropout_seed);
}

std::vector<double> mlp_head_forward(std::span<const double> pooled, const ParameterSet& params,
                                     std::size_t num_classes) {
  MlpConfig c;
  c.input_dim = pooled.size();
  c.num_classes = num_classes;
  return MlpHead(c, params).forward(pooled);
}

}  // namespace hsd
