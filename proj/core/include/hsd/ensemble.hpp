#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hsd/training.hpp"

namespace hsd {

enum class EnsembleMode { majority_vote, soft_average };
enum class TieBreak { soft_average_fallback, lowest_class_index };

std::optional<EnsembleMode> parse_ensemble_mode(std::string_view s);
std::optional<TieBreak> parse_tie_break(std::string_view s);
std::string_view to_string(EnsembleMode m);
std::string_view to_string(TieBreak t);

struct EnsembleSpec {
  std::vector<std::string> members;  // run directories
  EnsembleMode mode = EnsembleMode::soft_average;
  TieBreak tie_break = TieBreak::soft_average_fallback;

  // majority_vote needs an odd, non-zero member count.
  void validate() const;
};

// {"members": [...], "mode": "soft_average", "tie_break": "..."}. Relative
// member paths resolve against the ensemble file's directory.
EnsembleSpec parse_ensemble_spec(std::string_view json_text, const std::filesystem::path& base_dir = {});
EnsembleSpec load_ensemble_spec(const std::filesystem::path& path);

// Modal label. Ties: with soft_average_fallback and probs supplied, the tied
// label with the highest averaged probability wins; any remaining tie goes to
// the lowest class index. The result is always one of the votes.
std::size_t majority_vote(std::span<const std::size_t> labels, TieBreak tie_break,
                          const std::vector<std::vector<double>>* probs = nullptr);

// Element-wise mean; independent of member order bit for bit.
std::vector<double> soft_average(const std::vector<std::vector<double>>& members);

std::map<std::string, std::size_t> ensemble_predict(const EnsembleSpec& spec, const std::vector<ProbMap>& members);

}  // namespace hsd
