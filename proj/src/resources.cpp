#include "mailsentry/resources.hpp"

#include <cstdlib>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mailsentry/util.hpp"

namespace mailsentry {

namespace {

std::vector<std::string> load_word_file(const std::string& path) {
  std::vector<std::string> words;
  const std::string text = read_file(path);
  for (std::string_view line : split_lines(text)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    words.push_back(to_lower(t));
  }
  return words;
}

std::vector<PatternFeature> load_pattern_array(const nlohmann::json& arr) {
  std::vector<PatternFeature> out;
  for (const auto& item : arr) {
    PatternFeature f;
    f.name = item.at("name").get<std::string>();
    f.patterns = item.at("patterns").get<std::vector<std::string>>();
    f.icase = item.value("icase", false);
    f.multiline = item.value("multiline", false);
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace

std::string WordLists::default_data_dir() {
  if (const char* env = std::getenv("MAILSENTRY_DATA")) return env;
  return MAILSENTRY_DATA_DIR;
}

WordLists WordLists::load(const std::string& dir) {
  WordLists w;
  w.functional_words = load_word_file(dir + "/functional_words.txt");
  w.context_words = load_word_file(dir + "/context_words.txt");
  nlohmann::json j = nlohmann::json::parse(read_file(dir + "/patterns.json"));
  w.special_words = load_pattern_array(j.at("special_words"));
  w.style_characteristics = load_pattern_array(j.at("style_characteristics"));
  // every pattern must compile up front
  for (size_t i = 0; i < w.special_words.size(); ++i) compile_pattern(w.special_words[i], i);
  for (size_t i = 0; i < w.style_characteristics.size(); ++i)
    compile_pattern(w.style_characteristics[i], i);
  return w;
}

std::regex compile_pattern(const PatternFeature& f, size_t index) {
  std::string joined;
  for (const std::string& p : f.patterns) {
    if (!joined.empty()) joined += "|";
    joined += "(?:" + p + ")";
  }
  auto flags = std::regex::ECMAScript;
  if (f.icase) flags |= std::regex::icase;
  if (f.multiline) flags |= std::regex::multiline;
  try {
    return std::regex(joined, flags);
  } catch (const std::regex_error& e) {
    throw std::runtime_error("bad pattern '" + f.name + "' (#" + std::to_string(index) +
                             "): " + e.what());
  }
}

}  // namespace mailsentry
