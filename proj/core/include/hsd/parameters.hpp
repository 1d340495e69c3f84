#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hsd {

struct ParamSlice {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool operator==(const ParamSlice&) const = default;
};

// Ordered set of named parameter tensors.
class ParameterSet {
 public:
  ParamSlice& add(std::string name, std::vector<std::size_t> shape, double fill = 0.0);

  ParamSlice& at(std::string_view name);
  const ParamSlice& at(std::string_view name) const;
  bool has(std::string_view name) const;

  std::vector<ParamSlice>& slices() { return slices_; }
  const std::vector<ParamSlice>& slices() const { return slices_; }
  std::size_t total_size() const;

  // Same names and shapes, all zeros.
  ParameterSet zeros_like() const;
  void fill(double v);
  // this += scale * other; shapes must match.
  void add_scaled(const ParameterSet& other, double scale);
  bool all_finite() const;
  // Same slice names and shapes, and every values vector matches its shape.
  bool same_layout(const ParameterSet& other) const;

  bool operator==(const ParameterSet&) const = default;

 private:
  std::vector<ParamSlice> slices_;
};

// Checkpoint: JSON object {"format": 1, "config": <head config>, "slices":
// [{"name", "shape", "values"}]}. Doubles are written in shortest
// round-trip form so save/load is bit-exact.
struct Checkpoint {
  std::string head_config_json;
  ParameterSet params;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view text);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hsd
