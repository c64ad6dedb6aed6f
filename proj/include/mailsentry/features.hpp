#pragma once

#include <cstdint>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mailsentry/email.hpp"
#include "mailsentry/org_context.hpp"
#include "mailsentry/resources.hpp"

namespace mailsentry {

enum class FeatureFamily {
  char_occ,
  functional,
  special,
  style_char,
  style_metric,
  context_word,
  message,
  time,
  url,
  interaction
};

enum class ValueKind { ratio, count, boolean, metric };

struct SchemaEntry {
  std::string name;
  FeatureFamily family;
  ValueKind kind;
};

struct FeatureSchema {
  std::vector<SchemaEntry> entries;
  std::uint64_t context_version = 0;
  std::string hash;
  std::uint32_t writing_feature_count = 0;  // char..context_word prefix

  std::uint32_t size() const { return static_cast<std::uint32_t>(entries.size()); }
  std::optional<std::uint32_t> index_of(std::string_view name) const;
  std::uint32_t family_count(FeatureFamily f) const;

  static FeatureSchema build(const WordLists& lists, const OrgContext& ctx);

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Sparse vector: (index, value) sorted by index, zeros omitted. Equality is
// exact, which is what the replay guard requires.
struct FeatureVector {
  std::string schema_hash;
  std::uint32_t dim = 0;
  std::vector<std::pair<std::uint32_t, double>> items;

  double at(std::uint32_t index) const;
  void set(std::uint32_t index, double value);  // keeps items sorted, drops zeros
  std::vector<double> dense() const;
  std::uint64_t digest() const;
  bool operator==(const FeatureVector&) const = default;
};

class SchemaMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- elementary ops (also exercised directly by tests) ------------------------

// Tokens: split on whitespace, strip leading/trailing punctuation, lowercase.
std::vector<std::string> tokenize(std::string_view text);

// Occurrences of any charset member / text length; 0 for empty text.
double char_occurrence(std::string_view text, std::string_view charset);

// Case-insensitive occurrences of `word` (multi-word entries match contiguous
// token runs) / token count; 0 for an empty token list.
double token_ratio(std::string_view word, const std::vector<std::string>& tokens);

// Non-overlapping matches of `re` in text / token_count, clamped to [0,1].
double regex_ratio(const std::regex& re, std::string_view text, size_t token_count);

// The 33 style metrics, in schema order.
struct StyleMetrics {
  double paragraph_count = 0;
  double sentences_per_paragraph = 0;
  double unique_words = 0;
  double word_count = 0;
  double message_length = 0;
  double long_lines = 0;   // > 72 chars
  double short_lines = 0;  // non-empty, < 10 chars
  double word_length_freq[20] = {};
  double hapax_legomena = 0;
  double hapax_dislegomena = 0;
  double sichel_s = 0;
  double honore_r = 0;
  double yule_k = 0;
  double simpson_d = 0;

  std::vector<double> as_vector() const;
};
StyleMetrics style_metrics(std::string_view text);

// --- full extractor ------------------------------------------------------------

class FeatureExtractor {
 public:
  FeatureExtractor(const WordLists& lists, const OrgContext& ctx);

  const FeatureSchema& schema() const { return schema_; }
  const OrgContext& context() const { return *ctx_; }

  // Pure and reentrant; vectors for distinct emails may be extracted in parallel.
  FeatureVector extract(const Email& email) const;

 private:
  FeatureSchema schema_;
  const OrgContext* ctx_;
  std::string char_feature_chars_;                       // one char per char_occ feature
  std::unordered_map<std::string, std::vector<std::uint32_t>> single_word_features_;
  std::vector<std::pair<std::vector<std::string>, std::uint32_t>> multi_word_features_;
  std::vector<std::regex> special_res_;
  std::vector<std::regex> style_res_;
  std::uint32_t functional_base_ = 0, special_base_ = 0, style_base_ = 0, metric_base_ = 0,
                context_base_ = 0, message_base_ = 0, time_base_ = 0, url_base_ = 0,
                interaction_base_ = 0;
};

std::vector<ValueKind> schema_kinds(const FeatureSchema& schema);

// Batch kernels. The OpenMP variant writes each slot independently, so its
// output is bitwise identical to the serial reference (asserted in tests).
std::vector<FeatureVector> extract_batch_serial(const FeatureExtractor& ex,
                                                std::span<const Email> emails);
std::vector<FeatureVector> extract_batch(const FeatureExtractor& ex,
                                         std::span<const Email> emails);

}  // namespace mailsentry
