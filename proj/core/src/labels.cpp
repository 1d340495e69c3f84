#include "hsd/labels.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace hsd {

namespace {

std::string canon(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

constexpr std::array<std::string_view, kNumCoarse> kCoarseNames{"HOF", "NOT"};
constexpr std::array<std::string_view, kNumFine> kFineNames{"HATE", "OFFN", "PRFN", "NONE"};

}  // namespace

std::optional<CoarseLabel> parse_coarse(std::string_view s) {
  const std::string c = canon(s);
  for (std::size_t i = 0; i < kCoarseNames.size(); ++i) {
    if (c == kCoarseNames[i]) return static_cast<CoarseLabel>(i);
  }
  return std::nullopt;
}

std::optional<FineLabel> parse_fine(std::string_view s) {
  const std::string c = canon(s);
  for (std::size_t i = 0; i < kFineNames.size(); ++i) {
    if (c == kFineNames[i]) return static_cast<FineLabel>(i);
  }
  return std::nullopt;
}

std::optional<Language> parse_language(std::string_view s) {
  const std::string c = canon(s);
  if (c == "EN") return Language::en;
  if (c == "HI") return Language::hi;
  if (c == "MR") return Language::mr;
  if (c == "HI_EN_MIX") return Language::hi_en_mix;
  return std::nullopt;
}

std::optional<LabelKind> parse_label_kind(std::string_view s) {
  const std::string c = canon(s);
  if (c == "COARSE") return LabelKind::coarse;
  if (c == "FINE") return LabelKind::fine;
  return std::nullopt;
}

std::string_view to_string(CoarseLabel l) { return kCoarseNames[static_cast<std::size_t>(l)]; }
std::string_view to_string(FineLabel l) { return kFineNames[static_cast<std::size_t>(l)]; }

std::string_view to_string(Language l) {
  switch (l) {
    case Language::en: return "en";
    case Language::hi: return "hi";
    case Language::mr: return "mr";
    case Language::hi_en_mix: return "hi_en_mix";
  }
  return "en";
}

std::string_view to_string(LabelKind k) { return k == LabelKind::coarse ? "coarse" : "fine"; }

CoarseLabel implied_coarse(FineLabel l) { return l == FineLabel::NONE ? CoarseLabel::NOT : CoarseLabel::HOF; }

std::size_t num_classes(LabelKind kind) { return kind == LabelKind::coarse ? kNumCoarse : kNumFine; }

std::vector<std::string> class_names(LabelKind kind) {
  std::vector<std::string> out;
  if (kind == LabelKind::coarse) {
    for (auto n : kCoarseNames) out.emplace_back(n);
  } else {
    for (auto n : kFineNames) out.emplace_back(n);
  }
  return out;
}

std::optional<std::size_t> class_index(LabelKind kind, std::string_view name) {
  if (kind == LabelKind::coarse) {
    if (auto l = parse_coarse(name)) return static_cast<std::size_t>(*l);
  } else {
    if (auto l = parse_fine(name)) return static_cast<std::size_t>(*l);
  }
  return std::nullopt;
}

}  // namespace hsd
