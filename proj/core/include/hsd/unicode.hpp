#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hsd::unicode {

// Decodes UTF-8; malformed sequences decode to U+FFFD so every byte string
// has a well-defined codepoint sequence.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view codepoints);
void append(std::string& out, char32_t cp);

bool is_space(char32_t cp);
bool is_letter(char32_t cp);
bool is_upper(char32_t cp);
bool is_punctuation(char32_t cp);
// Letters, digits, combining marks and '_'.
bool is_word(char32_t cp);
bool is_latin(char32_t cp);
bool is_extended_pictographic(char32_t cp);

// Splits on Unicode whitespace, dropping empty pieces.
std::vector<std::string> split_whitespace(std::string_view text);
std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");
// Collapses whitespace runs to one ASCII space and trims both ends.
std::string collapse_whitespace(std::string_view text);

std::string nfc(std::string_view utf8);
std::string to_lower(std::string_view utf8);
// Lowercases Latin-script codepoints only.
std::string lower_latin(std::string_view utf8);

std::size_t codepoint_count(std::string_view utf8);

}  // namespace hsd::unicode
