#pragma once

#include <regex>
#include <string>
#include <vector>

namespace mailsentry {

struct PatternFeature {
  std::string name;
  std::vector<std::string> patterns;
  bool icase = false;
  bool multiline = false;
};

// Word lists and regex resources the default schema is built from. Shipped
// under data/ so the exact feature definitions stay auditable.
struct WordLists {
  std::vector<std::string> functional_words;       // lowercase, insertion order
  std::vector<std::string> context_words;          // lowercase
  std::vector<PatternFeature> special_words;       // 11 entries
  std::vector<PatternFeature> style_characteristics;  // 38 entries

  // Loads functional_words.txt, context_words.txt and patterns.json from dir.
  // Throws std::runtime_error on missing files or malformed patterns.
  static WordLists load(const std::string& dir = default_data_dir());
  static std::string default_data_dir();
};

std::regex compile_pattern(const PatternFeature& f, size_t index);

}  // namespace mailsentry
