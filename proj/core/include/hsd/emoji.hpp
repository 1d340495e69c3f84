#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace hsd::emoji {

// Lookup into the bundled codepoint -> ":name:" table.
std::optional<std::string_view> name_of(char32_t cp);
bool in_table(char32_t cp);
std::size_t table_size();

// Table entries plus any other Extended_Pictographic codepoint.
bool is_emoji(char32_t cp);
// Variation selector 16 and zero-width joiner; dropped when they follow an
// emoji that is being stripped or converted.
bool is_emoji_joiner(char32_t cp);

struct Entry {
  char32_t codepoint;
  const char* name;
};
const Entry* table_begin();
const Entry* table_end();

// Visits every table entry in codepoint order.
template <typename F>
void for_each_entry(F&& f) {
  for (const Entry* e = table_begin(); e != table_end(); ++e) f(e->codepoint, std::string_view(e->name));
}

}  // namespace hsd::emoji
