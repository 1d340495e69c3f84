#include "hsd/features.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <memory>
#include <sstream>

#include "hsd/corpus.hpp"
#include "hsd/error.hpp"
#include "hsd/unicode.hpp"

namespace hsd {

void validate_feature_schema(const std::vector<std::string>& schema) {
  std::unordered_set<std::string> seen;
  for (const auto& name : schema) {
    if (std::find(kFeatureNames.begin(), kFeatureNames.end(), name) == kFeatureNames.end()) {
      throw SchemaError("unknown feature '" + name + "'");
    }
    if (!seen.insert(name).second) throw SchemaError("feature '" + name + "' listed twice");
  }
}

std::vector<std::string> full_feature_schema() { return {kFeatureNames.begin(), kFeatureNames.end()}; }

double FeatureVector::at(std::string_view name) const {
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i] == name) return values[i];
  }
  throw SchemaError("feature '" + std::string(name) + "' not in vector");
}

std::string normalize_lexicon_token(std::string_view token) { return unicode::to_lower(unicode::nfc(token)); }

ProfanityLexicon load_lexicon(const std::vector<std::filesystem::path>& paths) {
  ProfanityLexicon lex;
  for (const auto& path : paths) {
    std::string content;
    try {
      content = read_file(path);
    } catch (const LoadError&) {
      throw LoadError("cannot read lexicon: " + path.string());
    }
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
      const std::string word = unicode::collapse_whitespace(line);
      if (word.empty() || word.front() == '#') continue;
      lex.words.insert(normalize_lexicon_token(word));
    }
    lex.source_names.push_back(path.filename().string());
  }
  return lex;
}

PunctuationCaseFeatures punctuation_and_case_features(std::string_view raw_text) {
  const std::u32string cps = unicode::decode(raw_text);
  PunctuationCaseFeatures f;
  if (cps.empty()) return f;
  std::size_t q = 0;
  std::size_t excl = 0;
  std::size_t letters = 0;
  std::size_t upper = 0;
  for (char32_t cp : cps) {
    if (cp == U'?') ++q;
    if (cp == U'!') ++excl;
    if (unicode::is_letter(cp)) {
      ++letters;
      if (unicode::is_upper(cp)) ++upper;
    }
  }
  const double n = static_cast<double>(cps.size());
  f.q_mark_frac = static_cast<double>(q) / n;
  f.excl_frac = static_cast<double>(excl) / n;
  f.capital_frac = letters ? static_cast<double>(upper) / static_cast<double>(letters) : 0.0;
  return f;
}

double profanity_fraction(const std::vector<std::string>& tokens, const ProfanityLexicon& lexicon) {
  if (tokens.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& t : tokens) hits += lexicon.contains(t) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(tokens.size());
}

SentimentProvider uniform_sentiment() {
  return [](std::string_view) { return Sentiment{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}; };
}

SentimentProvider serialized(SentimentProvider provider) {
  auto mutex = std::make_shared<std::mutex>();
  return [mutex, provider = std::move(provider)](std::string_view text) {
    std::lock_guard<std::mutex> lock(*mutex);
    return provider(text);
  };
}

Sentiment sentiment_features(std::string_view text, const SentimentProvider& provider, std::size_t* failures) {
  const Sentiment uniform{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  if (!provider) return uniform;
  Sentiment s;
  try {
    s = provider(text);
  } catch (...) {
    if (failures) ++*failures;
    return uniform;
  }
  double sum = 0.0;
  for (double v : s) {
    if (!std::isfinite(v) || v < 0.0) {
      if (failures) ++*failures;
      return uniform;
    }
    sum += v;
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    if (failures) ++*failures;
    return uniform;
  }
  for (double& v : s) v /= sum;
  return s;
}

FeatureVector build_feature_vector(std::string_view raw_text, const std::vector<std::string>& clean_tokens,
                                   const ProfanityLexicon& lexicon, const SentimentProvider& provider,
                                   const std::vector<std::string>& schema, std::size_t* sentiment_failures) {
  validate_feature_schema(schema);
  const bool wants_sentiment = std::any_of(schema.begin(), schema.end(),
                                           [](const std::string& n) { return n.rfind("sent_", 0) == 0; });
  const PunctuationCaseFeatures pc = punctuation_and_case_features(raw_text);
  const Sentiment sent = wants_sentiment ? sentiment_features(raw_text, provider, sentiment_failures)
                                         : Sentiment{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  FeatureVector fv;
  fv.schema = schema;
  fv.values.reserve(schema.size());
  for (const auto& name : schema) {
    if (name == "q_mark_frac") fv.values.push_back(pc.q_mark_frac);
    else if (name == "excl_frac") fv.values.push_back(pc.excl_frac);
    else if (name == "capital_frac") fv.values.push_back(pc.capital_frac);
    else if (name == "profanity_frac") fv.values.push_back(profanity_fraction(clean_tokens, lexicon));
    else if (name == "sent_neg") fv.values.push_back(sent[0]);
    else if (name == "sent_neu") fv.values.push_back(sent[1]);
    else if (name == "sent_pos") fv.values.push_back(sent[2]);
  }
  return fv;
}

FeatureStandardizer::FeatureStandardizer(std::vector<double> mean, std::vector<double> scale)
    : mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.size() != scale_.size()) throw DimensionError("standardizer mean/scale size mismatch");
}

FeatureStandardizer FeatureStandardizer::fit(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t d = rows.front().size();
  std::vector<double> mean(d, 0.0);
  std::vector<double> var(d, 0.0);
  for (const auto& r : rows) {
    if (r.size() != d) throw DimensionError("feature rows differ in width");
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= static_cast<double>(rows.size());
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < d; ++j) var[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
  }
  std::vector<double> scale(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(rows.size()));
    scale[j] = sd > 1e-12 ? sd : 1.0;  // constant columns are only centred
  }
  return FeatureStandardizer(std::move(mean), std::move(scale));
}

void FeatureStandardizer::apply(std::span<double> row) const {
  if (mean_.empty()) return;
  if (row.size() != mean_.size()) throw DimensionError("feature row width does not match standardizer");
  for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean_[j]) / scale_[j];
}

}  // namespace hsd
