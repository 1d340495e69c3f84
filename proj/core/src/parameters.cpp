#include "hsd/parameters.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include <json.hpp>

#include "hsd/corpus.hpp"
#include "hsd/error.hpp"

namespace hsd {

using json = nlohmann::json;

ParamSlice& ParameterSet::add(std::string name, std::vector<std::size_t> shape, double fill) {
  if (has(name)) throw ConfigError("duplicate parameter slice '" + name + "'");
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  slices_.push_back({std::move(name), std::move(shape), std::vector<double>(n, fill)});
  return slices_.back();
}

ParamSlice& ParameterSet::at(std::string_view name) {
  for (auto& s : slices_) {
    if (s.name == name) return s;
  }
  throw DimensionError("no parameter slice '" + std::string(name) + "'");
}

const ParamSlice& ParameterSet::at(std::string_view name) const {
  for (const auto& s : slices_) {
    if (s.name == name) return s;
  }
  throw DimensionError("no parameter slice '" + std::string(name) + "'");
}

bool ParameterSet::has(std::string_view name) const {
  for (const auto& s : slices_) {
    if (s.name == name) return true;
  }
  return false;
}

std::size_t ParameterSet::total_size() const {
  std::size_t n = 0;
  for (const auto& s : slices_) n += s.size();
  return n;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet z;
  for (const auto& s : slices_) z.add(s.name, s.shape, 0.0);
  return z;
}

void ParameterSet::fill(double v) {
  for (auto& s : slices_) std::fill(s.values.begin(), s.values.end(), v);
}

bool ParameterSet::same_layout(const ParameterSet& other) const {
  if (slices_.size() != other.slices_.size()) return false;
  for (std::size_t i = 0; i < slices_.size(); ++i) {
    if (slices_[i].name != other.slices_[i].name || slices_[i].shape != other.slices_[i].shape) return false;
    const std::size_t n = std::accumulate(slices_[i].shape.begin(), slices_[i].shape.end(), std::size_t{1},
                                          std::multiplies<>());
    if (slices_[i].values.size() != n || other.slices_[i].values.size() != n) return false;
  }
  return true;
}

void ParameterSet::add_scaled(const ParameterSet& other, double scale) {
  if (!same_layout(other)) throw DimensionError("parameter sets differ in layout");
  for (std::size_t i = 0; i < slices_.size(); ++i) {
    auto& dst = slices_[i].values;
    const auto& src = other.slices_[i].values;
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
  }
}

bool ParameterSet::all_finite() const {
  for (const auto& s : slices_) {
    for (double v : s.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json doc;
  doc["format"] = 1;
  doc["config"] = ckpt.head_config_json.empty() ? json::object() : json::parse(ckpt.head_config_json);
  json slices = json::array();
  for (const auto& s : ckpt.params.slices()) {
    slices.push_back({{"name", s.name}, {"shape", s.shape}, {"values", s.values}});
  }
  doc["slices"] = std::move(slices);
  return doc.dump() + "\n";
}

Checkpoint parse_checkpoint(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw LoadError(std::string("malformed checkpoint: ") + e.what());
  }
  if (doc.value("format", 0) != 1) throw LoadError("unsupported checkpoint format");
  Checkpoint ckpt;
  ckpt.head_config_json = doc.at("config").dump();
  for (const auto& s : doc.at("slices")) {
    auto& slice = ckpt.params.add(s.at("name").get<std::string>(), s.at("shape").get<std::vector<std::size_t>>());
    auto values = s.at("values").get<std::vector<double>>();
    if (values.size() != slice.values.size()) {
      throw LoadError("checkpoint slice '" + slice.name + "' has " + std::to_string(values.size()) +
                      " values for shape of size " + std::to_string(slice.values.size()));
    }
    slice.values = std::move(values);
  }
  if (!ckpt.params.all_finite()) throw LoadError("checkpoint contains non-finite parameters");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

}  // namespace hsd
