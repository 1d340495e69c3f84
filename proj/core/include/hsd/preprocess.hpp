#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace hsd {

enum class EmojiMode { strip, to_text, keep };

std::optional<EmojiMode> parse_emoji_mode(std::string_view s);
std::string_view to_string(EmojiMode m);

using StopwordSet = std::unordered_set<std::string>;

struct PreprocessConfig {
  bool remove_urls = true;
  bool remove_mentions = true;
  bool remove_hashtags = true;
  // Ablation switch: drop only the '#' and keep the hashtag text.
  bool hashtag_keep_text = false;
  bool remove_punctuation = true;
  EmojiMode emoji_mode = EmojiMode::strip;
  bool normalize_indic = false;
  bool remove_stopwords = false;
  StopwordSet stopword_list;
  bool transliterate_roman_hindi = false;
  bool lowercase_roman = true;

  // Throws ConfigError when remove_stopwords is set with an empty list.
  void validate() const;
};

// Emoji stripped; used for the HOF/NOT detection tasks.
PreprocessConfig detection_preset();
// Emoji converted to :name: tokens; used for fine-grained characterization.
PreprocessConfig characterization_preset();

using TransliterationHook = std::function<std::string(std::string_view)>;
TransliterationHook identity_transliteration();

struct PreprocessStats {
  std::size_t unknown_emoji = 0;
  std::size_t transliteration_failures = 0;

  PreprocessStats& operator+=(const PreprocessStats& o) {
    unknown_emoji += o.unknown_emoji;
    transliteration_failures += o.transliteration_failures;
    return *this;
  }
};

// Individual steps. Each is pure.
std::string strip_urls(std::string_view text);
std::string strip_mentions(std::string_view text);
std::string strip_hashtags(std::string_view text, bool keep_text = false);
// Punctuation becomes whitespace (then collapsed), apostrophes are deleted. With
// keep_emoji_names, whole ":name:" tokens survive untouched.
std::string strip_punctuation(std::string_view text, bool keep_emoji_names = false);
std::string normalize_indic_script(std::string_view text);
std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens, const StopwordSet& stopwords);
// strip and to_text also collapse whitespace; keep is the identity.
std::string apply_emoji_mode(std::string_view text, EmojiMode mode, std::size_t* unknown_count = nullptr);
// A throwing backend leaves the text unchanged and bumps *failures.
std::string transliterate_roman_hindi(std::string_view text, const TransliterationHook& backend,
                                      std::size_t* failures = nullptr);

// Whole-token ":name:" check used to protect converted emoji.
bool is_emoji_name_token(std::string_view token);
// URL start: "http://", "https://" or "www." not preceded by an ASCII
// letter or digit. Exposed so callers can audit cleaned text.
bool contains_url(std::string_view text);
bool contains_mention(std::string_view text);
bool contains_hashtag(std::string_view text);

// Cleans text in the fixed order urls, mentions, hashtags, emoji,
// transliteration, script normalization, Roman lowercasing, punctuation,
// stopwords, then whitespace collapse. The sequence is repeated until the
// output stops changing so that deletions which expose new matches (as in
// "www@u.x") are handled and the result is idempotent.
class Preprocessor {
 public:
  explicit Preprocessor(PreprocessConfig config, TransliterationHook backend = identity_transliteration());

  std::string clean(std::string_view text, PreprocessStats* stats = nullptr) const;
  const PreprocessConfig& config() const { return config_; }

 private:
  std::string single_pass(std::string_view text, PreprocessStats& stats) const;

  PreprocessConfig config_;
  TransliterationHook backend_;
};

std::string clean_text(std::string_view text, const PreprocessConfig& config);

// One token per line, UTF-8, blank lines and '#' comments skipped. Entries are
// NFC-normalized.
StopwordSet load_stopwords(const std::filesystem::path& path);

}  // namespace hsd
