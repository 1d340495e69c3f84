#include "hsd/ensemble.hpp"

#include <algorithm>

#include <json.hpp>

#include "hsd/error.hpp"
#include "hsd/metrics.hpp"

namespace hsd {

using json = nlohmann::json;

std::optional<EnsembleMode> parse_ensemble_mode(std::string_view s) {
  if (s == "majority_vote") return EnsembleMode::majority_vote;
  if (s == "soft_average") return EnsembleMode::soft_average;
  return std::nullopt;
}

std::optional<TieBreak> parse_tie_break(std::string_view s) {
  if (s == "soft_average_fallback") return TieBreak::soft_average_fallback;
  if (s == "lowest_class_index") return TieBreak::lowest_class_index;
  return std::nullopt;
}

std::string_view to_string(EnsembleMode m) {
  return m == EnsembleMode::majority_vote ? "majority_vote" : "soft_average";
}

std::string_view to_string(TieBreak t) {
  return t == TieBreak::soft_average_fallback ? "soft_average_fallback" : "lowest_class_index";
}

void EnsembleSpec::validate() const {
  if (members.empty()) throw ValidationError("ensemble has no members");
  if (mode == EnsembleMode::majority_vote && members.size() % 2 == 0) {
    throw ValidationError("majority_vote needs an odd number of members, got " + std::to_string(members.size()));
  }
}

EnsembleSpec parse_ensemble_spec(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed ensemble spec: ") + e.what());
  }
  EnsembleSpec spec;
  for (const auto& m : j.at("members")) {
    std::filesystem::path p = m.get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    spec.members.push_back(p.string());
  }
  if (j.contains("mode")) {
    auto mode = parse_ensemble_mode(j["mode"].get<std::string>());
    if (!mode) throw ConfigError("unknown ensemble mode '" + j["mode"].get<std::string>() + "'");
    spec.mode = *mode;
  }
  if (j.contains("tie_break")) {
    auto tb = parse_tie_break(j["tie_break"].get<std::string>());
    if (!tb) throw ConfigError("unknown tie_break '" + j["tie_break"].get<std::string>() + "'");
    spec.tie_break = *tb;
  }
  spec.validate();
  return spec;
}

EnsembleSpec load_ensemble_spec(const std::filesystem::path& path) {
  return parse_ensemble_spec(read_file(path), path.parent_path());
}

std::size_t majority_vote(std::span<const std::size_t> labels, TieBreak tie_break,
                          const std::vector<std::vector<double>>* probs) {
  if (labels.empty()) throw ValidationError("majority_vote: no votes");
  const std::size_t n_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::size_t> counts(n_classes, 0);
  for (auto l : labels) ++counts[l];
  const std::size_t top = *std::max_element(counts.begin(), counts.end());
  std::vector<std::size_t> tied;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] == top) tied.push_back(c);
  }
  if (tied.size() == 1) return tied.front();
  if (tie_break == TieBreak::soft_average_fallback && probs && !probs->empty()) {
    const auto mean = soft_average(*probs);
    std::size_t best = tied.front();
    for (auto c : tied) {
      if (c < mean.size() && (best >= mean.size() || mean[c] > mean[best])) best = c;
    }
    return best;
  }
  return tied.front();
}

std::vector<double> soft_average(const std::vector<std::vector<double>>& members) {
  if (members.empty()) throw ValidationError("soft_average: no members");
  const std::size_t n = members.front().size();
  for (const auto& m : members) {
    if (m.size() != n) throw ValidationError("soft_average: members differ in length");
  }
  return order_free_mean(members);
}

std::map<std::string, std::size_t> ensemble_predict(const EnsembleSpec& spec, const std::vector<ProbMap>& members) {
  if (members.empty()) throw ValidationError("ensemble_predict: no members");
  if (spec.mode == EnsembleMode::majority_vote && members.size() % 2 == 0) {
    throw ValidationError("majority_vote needs an odd number of members");
  }
  // Reuses the id-set check of fold averaging.
  const ProbMap averaged = average_fold_probs(members);
  std::map<std::string, std::size_t> out;
  for (const auto& [id, mean] : averaged) {
    if (spec.mode == EnsembleMode::soft_average) {
      out.emplace(id, argmax(mean));
      continue;
    }
    std::vector<std::size_t> votes;
    std::vector<std::vector<double>> probs;
    for (const auto& m : members) {
      const auto& p = m.at(id);
      votes.push_back(argmax(p));
      probs.push_back(p);
    }
    out.emplace(id, majority_vote(votes, spec.tie_break, &probs));
  }
  return out;
}

}  // namespace hsd
