#include "hsd/preprocess.hpp"

#include <sstream>

#include "hsd/corpus.hpp"
#include "hsd/emoji.hpp"
#include "hsd/error.hpp"
#include "hsd/unicode.hpp"

namespace hsd {

namespace {

constexpr int kMaxPasses = 8;

bool ascii_alnum(char32_t c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

char32_t ascii_lower(char32_t c) { return (c >= 'A' && c <= 'Z') ? c - 'A' + 'a' : c; }

bool starts_with_ci(const std::u32string& s, std::size_t pos, std::u32string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    if (ascii_lower(s[pos + k]) != prefix[k]) return false;
  }
  return true;
}

bool url_at(const std::u32string& s, std::size_t i) {
  if (i > 0 && ascii_alnum(s[i - 1])) return false;
  return starts_with_ci(s, i, U"http://") || starts_with_ci(s, i, U"https://") || starts_with_ci(s, i, U"www.");
}

bool sigil_at(const std::u32string& s, std::size_t i, char32_t sigil) {
  return s[i] == sigil && i + 1 < s.size() && unicode::is_word(s[i + 1]);
}

}  // namespace

std::optional<EmojiMode> parse_emoji_mode(std::string_view s) {
  if (s == "strip") return EmojiMode::strip;
  if (s == "to_text") return EmojiMode::to_text;
  if (s == "keep") return EmojiMode::keep;
  return std::nullopt;
}

std::string_view to_string(EmojiMode m) {
  switch (m) {
    case EmojiMode::strip: return "strip";
    case EmojiMode::to_text: return "to_text";
    case EmojiMode::keep: return "keep";
  }
  return "strip";
}

void PreprocessConfig::validate() const {
  if (remove_stopwords && stopword_list.empty()) {
    throw ConfigError("remove_stopwords is enabled but the stopword list is empty");
  }
}

PreprocessConfig detection_preset() {
  PreprocessConfig c;
  c.emoji_mode = EmojiMode::strip;
  return c;
}

PreprocessConfig characterization_preset() {
  PreprocessConfig c;
  c.emoji_mode = EmojiMode::to_text;
  return c;
}

TransliterationHook identity_transliteration() {
  return [](std::string_view s) { return std::string(s); };
}

std::string strip_urls(std::string_view text) {
  const std::u32string s = unicode::decode(text);
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (url_at(s, i)) {
      while (i < s.size() && !unicode::is_space(s[i])) ++i;
      continue;
    }
    out.push_back(s[i++]);
  }
  return unicode::encode(out);
}

namespace {

std::string strip_sigil(std::string_view text, char32_t sigil, bool keep_text) {
  const std::u32string s = unicode::decode(text);
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (sigil_at(s, i, sigil)) {
      ++i;
      if (keep_text) continue;
      while (i < s.size() && unicode::is_word(s[i])) ++i;
      continue;
    }
    out.push_back(s[i++]);
  }
  return unicode::encode(out);
}

bool contains_sigil(std::string_view text, char32_t sigil) {
  const std::u32string s = unicode::decode(text);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (sigil_at(s, i, sigil)) return true;
  }
  return false;
}

}  // namespace

std::string strip_mentions(std::string_view text) { return strip_sigil(text, U'@', false); }

std::string strip_hashtags(std::string_view text, bool keep_text) { return strip_sigil(text, U'#', keep_text); }

bool contains_url(std::string_view text) {
  const std::u32string s = unicode::decode(text);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (url_at(s, i)) return true;
  }
  return false;
}

bool contains_mention(std::string_view text) { return contains_sigil(text, U'@'); }

bool contains_hashtag(std::string_view text) { return contains_sigil(text, U'#'); }

bool is_emoji_name_token(std::string_view token) {
  if (token.size() < 3 || token.front() != ':' || token.back() != ':') return false;
  for (std::size_t i = 1; i + 1 < token.size(); ++i) {
    const char c = token[i];
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) return false;
  }
  return true;
}

std::string strip_punctuation(std::string_view text, bool keep_emoji_names) {
  std::vector<std::string> out;
  for (const std::string& token : unicode::split_whitespace(text)) {
    if (keep_emoji_names && is_emoji_name_token(token)) {
      out.push_back(token);
      continue;
    }
    std::string cleaned;
    for (char32_t cp : unicode::decode(token)) {
      if (cp == U'\'' || cp == U'’') continue;
      if (unicode::is_punctuation(cp)) {
        cleaned.push_back(' ');
      } else {
        unicode::append(cleaned, cp);
      }
    }
    out.push_back(std::move(cleaned));
  }
  return unicode::collapse_whitespace(unicode::join(out));
}

std::string normalize_indic_script(std::string_view text) {
  std::u32string s = unicode::decode(text);
  // Inverted candrabindu is folded onto the ordinary candrabindu.
  for (char32_t& cp : s) {
    if (cp == 0x0900) cp = 0x0901;
  }
  return unicode::nfc(unicode::encode(s));
}

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens, const StopwordSet& stopwords) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!stopwords.count(t)) out.push_back(t);
  }
  return out;
}

std::string apply_emoji_mode(std::string_view text, EmojiMode mode, std::size_t* unknown_count) {
  if (mode == EmojiMode::keep) return std::string(text);
  std::string out;
  out.reserve(text.size());
  bool in_emoji = false;
  for (char32_t cp : unicode::decode(text)) {
    if (emoji::is_emoji(cp)) {
      in_emoji = true;
      if (mode == EmojiMode::to_text) {
        if (auto name = emoji::name_of(cp)) {
          out.push_back(' ');
          out.append(*name);
          out.push_back(' ');
        } else {
          out.push_back(' ');
          if (unknown_count) ++*unknown_count;
        }
      }
      continue;
    }
    if (in_emoji && emoji::is_emoji_joiner(cp)) continue;
    in_emoji = false;
    unicode::append(out, cp);
  }
  return unicode::collapse_whitespace(out);
}

std::string transliterate_roman_hindi(std::string_view text, const TransliterationHook& backend,
                                      std::size_t* failures) {
  if (!backend) return std::string(text);
  try {
    return backend(text);
  } catch (...) {
    if (failures) ++*failures;
    return std::string(text);
  }
}

Preprocessor::Preprocessor(PreprocessConfig config, TransliterationHook backend)
    : config_(std::move(config)), backend_(backend ? std::move(backend) : identity_transliteration()) {
  config_.validate();
}

std::string Preprocessor::single_pass(std::string_view text, PreprocessStats& stats) const {
  const auto& c = config_;
  std::string s(text);
  if (c.remove_urls) s = strip_urls(s);
  if (c.remove_mentions) s = strip_mentions(s);
  if (c.remove_hashtags) s = strip_hashtags(s, c.hashtag_keep_text);
  s = apply_emoji_mode(s, c.emoji_mode, &stats.unknown_emoji);
  if (c.transliterate_roman_hindi) s = transliterate_roman_hindi(s, backend_, &stats.transliteration_failures);
  if (c.normalize_indic) s = normalize_indic_script(s);
  if (c.lowercase_roman) s = unicode::lower_latin(s);
  if (c.remove_punctuation) s = strip_punctuation(s, c.emoji_mode == EmojiMode::to_text);
  if (c.remove_stopwords) return unicode::join(remove_stopwords(unicode::split_whitespace(s), c.stopword_list));
  return unicode::collapse_whitespace(s);
}

std::string Preprocessor::clean(std::string_view text, PreprocessStats* stats) const {
  PreprocessStats first;
  std::string current = single_pass(text, first);
  for (int pass = 1; pass < kMaxPasses; ++pass) {
    PreprocessStats ignored;
    std::string next = single_pass(current, ignored);
    if (next == current) break;
    current = std::move(next);
  }
  if (stats) *stats += first;
  return current;
}

std::string clean_text(std::string_view text, const PreprocessConfig& config) {
  return Preprocessor(config).clean(text);
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  StopwordSet words;
  std::string line;
  while (std::getline(in, line)) {
    const std::string word = unicode::collapse_whitespace(line);
    if (word.empty() || word.front() == '#') continue;
    words.insert(unicode::nfc(word));
  }
  return words;
}

}  // namespace hsd
