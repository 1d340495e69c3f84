#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hsd {

enum class CoarseLabel { HOF = 0, NOT = 1 };
enum class FineLabel { HATE = 0, OFFN = 1, PRFN = 2, NONE = 3 };
enum class Language { en, hi, mr, hi_en_mix };
enum class LabelKind { coarse, fine };

inline constexpr std::size_t kNumCoarse = 2;
inline constexpr std::size_t kNumFine = 4;

// Parsing is case-insensitive and ignores surrounding whitespace.
std::optional<CoarseLabel> parse_coarse(std::string_view s);
std::optional<FineLabel> parse_fine(std::string_view s);
std::optional<Language> parse_language(std::string_view s);
std::optional<LabelKind> parse_label_kind(std::string_view s);

std::string_view to_string(CoarseLabel l);
std::string_view to_string(FineLabel l);
std::string_view to_string(Language l);
std::string_view to_string(LabelKind k);

// Coarse label implied by a fine label: NONE -> NOT, everything else -> HOF.
CoarseLabel implied_coarse(FineLabel l);

std::size_t num_classes(LabelKind kind);
// Class names in class-index order.
std::vector<std::string> class_names(LabelKind kind);
// Index of a class name for the given label kind, case-insensitive.
std::optional<std::size_t> class_index(LabelKind kind, std::string_view name);

}  // namespace hsd
