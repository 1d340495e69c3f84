#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace hsd {

inline constexpr std::array<std::string_view, 7> kFeatureNames{
    "q_mark_frac", "excl_frac", "capital_frac", "profanity_frac", "sent_neg", "sent_neu", "sent_pos"};

// Throws SchemaError on unknown or repeated names.
void validate_feature_schema(const std::vector<std::string>& schema);
std::vector<std::string> full_feature_schema();

struct FeatureVector {
  std::vector<std::string> schema;
  std::vector<double> values;

  double at(std::string_view name) const;
  bool operator==(const FeatureVector&) const = default;
};

struct ProfanityLexicon {
  std::unordered_set<std::string> words;
  std::vector<std::string> source_names;

  bool contains(const std::string& token) const { return words.count(token) != 0; }
};

// NFC, then full Unicode lowercase.
std::string normalize_lexicon_token(std::string_view token);

// Unreadable files raise LoadError naming the path.
ProfanityLexicon load_lexicon(const std::vector<std::filesystem::path>& paths);

struct PunctuationCaseFeatures {
  double q_mark_frac = 0.0;
  double excl_frac = 0.0;
  double capital_frac = 0.0;
};

// Per-codepoint fractions of '?' and '!', and the share of letters that are
// uppercase. Expects raw text, before lowercasing or punctuation removal.
PunctuationCaseFeatures punctuation_and_case_features(std::string_view raw_text);

double profanity_fraction(const std::vector<std::string>& tokens, const ProfanityLexicon& lexicon);

// (neg, neu, pos) scores; any non-negative finite triple with positive sum is
// accepted and renormalized.
using Sentiment = std::array<double, 3>;
using SentimentProvider = std::function<Sentiment(std::string_view)>;

SentimentProvider uniform_sentiment();
// Wraps a non-reentrant provider so concurrent callers are serialized.
SentimentProvider serialized(SentimentProvider provider);

Sentiment sentiment_features(std::string_view text, const SentimentProvider& provider,
                             std::size_t* failures = nullptr);

FeatureVector build_feature_vector(std::string_view raw_text, const std::vector<std::string>& clean_tokens,
                                   const ProfanityLexicon& lexicon, const SentimentProvider& provider,
                                   const std::vector<std::string>& schema, std::size_t* sentiment_failures = nullptr);

// Optional z-scoring. Fit on training rows only and apply everywhere.
class FeatureStandardizer {
 public:
  FeatureStandardizer() = default;
  FeatureStandardizer(std::vector<double> mean, std::vector<double> scale);

  static FeatureStandardizer fit(const std::vector<std::vector<double>>& rows);
  void apply(std::span<double> row) const;
  bool empty() const { return mean_.empty(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& scale() const { return scale_; }

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
};

}  // namespace hsd
