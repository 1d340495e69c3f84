#include "hsd/emoji.hpp"

#include <algorithm>
#include <iterator>

#include "hsd/unicode.hpp"

namespace hsd::emoji {

namespace {

constexpr Entry kTable[] = {
#include "emoji_table_data.inc"
};

}  // namespace

const Entry* table_begin() { return std::begin(kTable); }
const Entry* table_end() { return std::end(kTable); }
std::size_t table_size() { return std::size(kTable); }

std::optional<std::string_view> name_of(char32_t cp) {
  auto it = std::lower_bound(std::begin(kTable), std::end(kTable), cp,
                             [](const Entry& e, char32_t c) { return e.codepoint < c; });
  if (it == std::end(kTable) || it->codepoint != cp) return std::nullopt;
  return std::string_view(it->name);
}

bool in_table(char32_t cp) { return name_of(cp).has_value(); }

bool is_emoji(char32_t cp) {
  if (cp < 0x80) return false;
  return in_table(cp) || unicode::is_extended_pictographic(cp);
}

bool is_emoji_joiner(char32_t cp) { return cp == 0xFE0F || cp == 0x200D; }

}  // namespace hsd::emoji
