#include "mailsentry/features.hpp"

#include <algorithm>
#include <cmath>
#include <array>

namespace mailsentry {

namespace {

constexpr std::string_view kPunctuationChars = ".:;,'\"?!";
constexpr std::string_view kSpecialChars = "%_&$@*\\><#/-";
constexpr std::string_view kParenChars = "()[]{}";
constexpr std::string_view kDigitChars = "0123456789";
constexpr std::string_view kCapitalChars = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";

bool is_strippable_punct(char c) {
  // keep characters that can be word-internal out of the strip set
  static constexpr std::string_view keep = "'-";
  return std::ispunct(static_cast<unsigned char>(c)) && keep.find(c) == std::string_view::npos;
}

const char* metric_names[] = {
    "paragraph_count", "sentences_per_paragraph", "unique_words", "word_count",
    "message_length",  "long_lines",              "short_lines"};

}  // namespace

std::optional<std::uint32_t> FeatureSchema::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t FeatureSchema::family_count(FeatureFamily f) const {
  std::uint32_t n = 0;
  for (const auto& e : entries) n += e.family == f;
  return n;
}

FeatureSchema FeatureSchema::build(const WordLists& lists, const OrgContext& ctx) {
  FeatureSchema s;
  s.context_version = ctx.version();
  auto add = [&](std::string name, FeatureFamily fam, ValueKind kind) {
    s.index_.emplace(name, static_cast<std::uint32_t>(s.entries.size()));
    s.entries.push_back({std::move(name), fam, kind});
  };

  auto add_chars = [&](std::string_view set) {
    for (char c : set) add(std::string("char:") + c, FeatureFamily::char_occ, ValueKind::ratio);
  };
  add_chars(kPunctuationChars);
  add_chars(kSpecialChars);
  add_chars(kParenChars);
  add_chars(kDigitChars);
  add_chars(kCapitalChars);

  for (const auto& w : lists.functional_words)
    add("fw:" + w, FeatureFamily::functional, ValueKind::ratio);
  for (const auto& p : lists.special_words)
    add("sw:" + p.name, FeatureFamily::special, ValueKind::ratio);
  for (const auto& p : lists.style_characteristics)
    add("style:" + p.name, FeatureFamily::style_char, ValueKind::ratio);

  for (const char* n : metric_names)
    add(std::string("metric:") + n, FeatureFamily::style_metric, ValueKind::metric);
  for (int n = 1; n <= 20; ++n)
    add("metric:word_len_" + std::to_string(n), FeatureFamily::style_metric, ValueKind::ratio);
  for (const char* n : {"hapax_legomena", "hapax_dislegomena", "sichel_s", "honore_r", "yule_k",
                        "simpson_d"})
    add(std::string("metric:") + n, FeatureFamily::style_metric, ValueKind::metric);

  for (const auto& w : lists.context_words)
    add("cw:" + w, FeatureFamily::context_word, ValueKind::ratio);

  s.writing_feature_count = static_cast<std::uint32_t>(s.entries.size());

  for (const char* n : {"has_signature", "has_url", "has_indented_lines", "has_quoted_lines",
                        "attached_original", "has_attachment", "is_reply", "is_forwarded",
                        "has_html"})
    add(std::string("msg:") + n, FeatureFamily::message, ValueKind::boolean);
  add("msg:n_recipients", FeatureFamily::message, ValueKind::count);
  add("msg:n_cc", FeatureFamily::message, ValueKind::count);

  for (int d = 0; d < 7; ++d)
    add("time:day_" + std::to_string(d), FeatureFamily::time, ValueKind::boolean);
  for (int h = 0; h < 24; ++h)
    add("time:hour_" + std::to_string(h), FeatureFamily::time, ValueKind::boolean);

  for (const auto& d : ctx.url_domains())
    add("url:" + d, FeatureFamily::url, ValueKind::boolean);
  add("url:other", FeatureFamily::url, ValueKind::boolean);

  for (const auto& a : ctx.contacted_addresses())
    add("to_addr:" + a, FeatureFamily::interaction, ValueKind::boolean);
  add("to_addr:other", FeatureFamily::interaction, ValueKind::boolean);
  for (const auto& d : ctx.contacted_domains())
    add("to_dom:" + d, FeatureFamily::interaction, ValueKind::boolean);
  add("to_dom:other", FeatureFamily::interaction, ValueKind::boolean);
  for (const auto& a : ctx.contacted_addresses())
    add("cc_addr:" + a, FeatureFamily::interaction, ValueKind::boolean);
  add("cc_addr:other", FeatureFamily::interaction, ValueKind::boolean);
  for (const auto& d : ctx.contacted_domains())
    add("cc_dom:" + d, FeatureFamily::interaction, ValueKind::boolean);
  add("cc_dom:other", FeatureFamily::interaction, ValueKind::boolean);

  std::uint64_t h = fnv1a64(std::to_string(s.context_version));
  for (const auto& e : s.entries) {
    h = fnv1a64(e.name, h);
    h = fnv1a64(std::string(1, static_cast<char>(e.family)), h);
    h = fnv1a64(std::string(1, static_cast<char>(e.kind)), h);
  }
  s.hash = hex64(h);
  return s;
}

double FeatureVector::at(std::uint32_t index) const {
  auto it = std::lower_bound(items.begin(), items.end(), index,
                             [](const auto& p, std::uint32_t i) { return p.first < i; });
  if (it != items.end() && it->first == index) return it->second;
  return 0.0;
}

void FeatureVector::set(std::uint32_t index, double value) {
  auto it = std::lower_bound(items.begin(), items.end(), index,
                             [](const auto& p, std::uint32_t i) { return p.first < i; });
  if (it != items.end() && it->first == index) {
    if (value == 0.0)
      items.erase(it);
    else
      it->second = value;
  } else if (value != 0.0) {
    items.insert(it, {index, value});
  }
}

std::vector<double> FeatureVector::dense() const {
  std::vector<double> out(dim, 0.0);
  for (const auto& [i, v] : items) out[i] = v;
  return out;
}

std::uint64_t FeatureVector::digest() const {
  std::uint64_t h = fnv1a64(schema_hash);
  for (const auto& [i, v] : items) {
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&i), sizeof(i)), h);
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&v), sizeof(v)), h);
  }
  return h;
}

std::vector<ValueKind> schema_kinds(const FeatureSchema& schema) {
  std::vector<ValueKind> kinds;
  kinds.reserve(schema.entries.size());
  for (const auto& e : schema.entries) kinds.push_back(e.kind);
  return kinds;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) break;
    std::string_view tok = text.substr(start, i - start);
    while (!tok.empty() && is_strippable_punct(tok.front())) tok.remove_prefix(1);
    while (!tok.empty() && is_strippable_punct(tok.back())) tok.remove_suffix(1);
    // a bare run of punctuation ("--", "'") is not a word
    bool has_alnum = std::any_of(tok.begin(), tok.end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c));
    });
    if (!tok.empty() && has_alnum) tokens.push_back(to_lower(tok));
  }
  return tokens;
}

double char_occurrence(std::string_view text, std::string_view charset) {
  if (text.empty()) return 0.0;
  size_t count = 0;
  for (char c : text)
    if (charset.find(c) != std::string_view::npos) ++count;
  return static_cast<double>(count) / static_cast<double>(text.size());
}

double token_ratio(std::string_view word, const std::vector<std::string>& tokens) {
  if (tokens.empty()) return 0.0;
  std::string w = to_lower(word);
  std::vector<std::string> parts;
  size_t pos = 0;
  while (pos <= w.size()) {
    size_t sp = w.find(' ', pos);
    parts.push_back(w.substr(pos, sp == std::string::npos ? std::string::npos : sp - pos));
    if (sp == std::string::npos) break;
    pos = sp + 1;
  }
  size_t count = 0;
  if (parts.size() == 1) {
    for (const auto& t : tokens) count += t == parts[0];
  } else {
    for (size_t i = 0; i + parts.size() <= tokens.size();) {
      bool match = true;
      for (size_t k = 0; k < parts.size(); ++k)
        if (tokens[i + k] != parts[k]) {
          match = false;
          break;
        }
      if (match) {
        ++count;
        i += parts.size();  // non-overlapping
      } else {
        ++i;
      }
    }
  }
  return static_cast<double>(count) / static_cast<double>(tokens.size());
}

double regex_ratio(const std::regex& re, std::string_view text, size_t token_count) {
  if (token_count == 0 || text.empty()) return 0.0;
  size_t count = 0;
  auto begin = std::cregex_iterator(text.data(), text.data() + text.size(), re);
  for (auto it = begin; it != std::cregex_iterator(); ++it) ++count;
  double r = static_cast<double>(count) / static_cast<double>(token_count);
  return std::min(r, 1.0);
}

std::vector<double> StyleMetrics::as_vector() const {
  std::vector<double> v = {paragraph_count, sentences_per_paragraph, unique_words,
                           word_count,      message_length,          long_lines,
                           short_lines};
  v.insert(v.end(), std::begin(word_length_freq), std::end(word_length_freq));
  v.insert(v.end(), {hapax_legomena, hapax_dislegomena, sichel_s, honore_r, yule_k, simpson_d});
  return v;
}

StyleMetrics style_metrics(std::string_view text) {
  StyleMetrics m;
  if (trim(text).empty()) return m;

  auto lines = split_lines(text);
  int paragraphs = 0;
  bool in_para = false;
  for (const auto& line : lines) {
    bool blank = trim(line).empty();
    if (!blank && !in_para) {
      ++paragraphs;
      in_para = true;
    } else if (blank) {
      in_para = false;
    }
    if (line.size() > 72) m.long_lines += 1;
    if (!line.empty() && line.size() < 10 && !blank) m.short_lines += 1;
  }
  m.paragraph_count = paragraphs;

  // sentence = run of [.!?] followed by whitespace or end of text
  int sentences = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
      size_t j = i;
      while (j + 1 < text.size() &&
             (text[j + 1] == '.' || text[j + 1] == '!' || text[j + 1] == '?'))
        ++j;
      if (j + 1 >= text.size() || std::isspace(static_cast<unsigned char>(text[j + 1])))
        ++sentences;
      i = j;
    }
  }
  m.sentences_per_paragraph = paragraphs > 0 ? static_cast<double>(sentences) / paragraphs : 0.0;

  auto tokens = tokenize(text);
  const double n = static_cast<double>(tokens.size());
  m.word_count = n;
  m.message_length = static_cast<double>(text.size());

  std::unordered_map<std::string, int> freq;
  for (const auto& t : tokens) {
    ++freq[t];
    size_t len = t.size();
    if (len >= 1 && len <= 20) m.word_length_freq[len - 1] += 1;
  }
  if (n > 0)
    for (double& f : m.word_length_freq) f /= n;

  const double v = static_cast<double>(freq.size());
  m.unique_words = v;

  std::unordered_map<int, int> freq_of_freq;  // m -> V_m
  for (const auto& [_, f] : freq) ++freq_of_freq[f];
  const double v1 = freq_of_freq.count(1) ? freq_of_freq[1] : 0;
  const double v2 = freq_of_freq.count(2) ? freq_of_freq[2] : 0;
  m.hapax_legomena = v1;
  m.hapax_dislegomena = v2;
  m.sichel_s = v > 0 ? v2 / v : 0.0;
  m.honore_r = (v > 0 && v1 < v && n > 0) ? 100.0 * std::log(n) / (1.0 - v1 / v) : 0.0;
  if (n > 0) {
    double sum_m2_vm = 0, sum_simpson = 0;
    for (const auto& [mm, vm] : freq_of_freq) {
      sum_m2_vm += static_cast<double>(mm) * mm * vm;
      sum_simpson += static_cast<double>(vm) * mm * (mm - 1);
    }
    m.yule_k = 1e4 * (sum_m2_vm - n) / (n * n);
    m.simpson_d = n >= 2 ? sum_simpson / (n * (n - 1)) : 0.0;
  }
  return m;
}

FeatureExtractor::FeatureExtractor(const WordLists& lists, const OrgContext& ctx)
    : schema_(FeatureSchema::build(lists, ctx)), ctx_(&ctx) {
  char_feature_chars_.reserve(62);
  for (std::string_view set :
       {kPunctuationChars, kSpecialChars, kParenChars, kDigitChars, kCapitalChars})
    char_feature_chars_.append(set);

  std::uint32_t idx = static_cast<std::uint32_t>(char_feature_chars_.size());
  functional_base_ = idx;
  for (const auto& w : lists.functional_words) {
    if (w.find(' ') == std::string::npos)
      single_word_features_[w].push_back(idx);
    else {
      std::vector<std::string> parts;
      size_t pos = 0;
      while (pos <= w.size()) {
        size_t sp = w.find(' ', pos);
        parts.push_back(w.substr(pos, sp == std::string::npos ? std::string::npos : sp - pos));
        if (sp == std::string::npos) break;
        pos = sp + 1;
      }
      multi_word_features_.emplace_back(std::move(parts), idx);
    }
    ++idx;
  }
  special_base_ = idx;
  for (size_t i = 0; i < lists.special_words.size(); ++i)
    special_res_.push_back(compile_pattern(lists.special_words[i], i));
  idx += static_cast<std::uint32_t>(lists.special_words.size());
  style_base_ = idx;
  for (size_t i = 0; i < lists.style_characteristics.size(); ++i)
    style_res_.push_back(compile_pattern(lists.style_characteristics[i], i));
  idx += static_cast<std::uint32_t>(lists.style_characteristics.size());
  metric_base_ = idx;
  idx += 33;
  context_base_ = idx;
  for (const auto& w : lists.context_words) {
    if (w.find(' ') == std::string::npos)
      single_word_features_[w].push_back(idx);
    else {
      std::vector<std::string> parts;  // none in the default list, but allowed
      size_t pos = 0;
      while (pos <= w.size()) {
        size_t sp = w.find(' ', pos);
        parts.push_back(w.substr(pos, sp == std::string::npos ? std::string::npos : sp - pos));
        if (sp == std::string::npos) break;
        pos = sp + 1;
      }
      multi_word_features_.emplace_back(std::move(parts), idx);
    }
    ++idx;
  }
  message_base_ = idx;
  idx += 11;
  time_base_ = idx;
  idx += 31;
  url_base_ = idx;
  idx += static_cast<std::uint32_t>(ctx.url_domains().size()) + 1;
  interaction_base_ = idx;
}

FeatureVector FeatureExtractor::extract(const Email& email) const {
  FeatureVector out;
  out.schema_hash = schema_.hash;
  out.dim = schema_.size();
  std::vector<std::pair<std::uint32_t, double>>& items = out.items;
  items.reserve(256);
  auto push = [&](std::uint32_t i, double v) {
    if (v != 0.0) items.emplace_back(i, v);
  };

  const std::string text = authored_text(email);
  const std::vector<std::string> tokens = tokenize(text);
  const double ntok = static_cast<double>(tokens.size());

  // character occurrences, one histogram pass
  if (!text.empty()) {
    std::array<std::uint32_t, 256> hist{};
    for (char c : text) ++hist[static_cast<unsigned char>(c)];
    for (std::uint32_t i = 0; i < char_feature_chars_.size(); ++i) {
      auto count = hist[static_cast<unsigned char>(char_feature_chars_[i])];
      push(i, static_cast<double>(count) / static_cast<double>(text.size()));
    }
  }

  // single-word functional/context ratios
  if (!tokens.empty()) {
    std::unordered_map<std::string_view, std::uint32_t> counts;
    for (const auto& t : tokens) ++counts[t];
    for (const auto& [word, count] : counts) {
      auto it = single_word_features_.find(std::string(word));
      if (it == single_word_features_.end()) continue;
      for (std::uint32_t fi : it->second) push(fi, static_cast<double>(count) / ntok);
    }
    for (const auto& [parts, fi] : multi_word_features_) {
      size_t count = 0;
      for (size_t i = 0; i + parts.size() <= tokens.size();) {
        bool match = true;
        for (size_t k = 0; k < parts.size(); ++k)
          if (tokens[i + k] != parts[k]) {
            match = false;
            break;
          }
        if (match) {
          ++count;
          i += parts.size();
        } else {
          ++i;
        }
      }
      push(fi, static_cast<double>(count) / ntok);
    }
    for (std::uint32_t i = 0; i < special_res_.size(); ++i)
      push(special_base_ + i, regex_ratio(special_res_[i], text, tokens.size()));
    for (std::uint32_t i = 0; i < style_res_.size(); ++i)
      push(style_base_ + i, regex_ratio(style_res_[i], text, tokens.size()));
  }

  const StyleMetrics sm = style_metrics(text);
  const std::vector<double> mv = sm.as_vector();
  for (std::uint32_t i = 0; i < mv.size(); ++i) push(metric_base_ + i, mv[i]);

  // message characteristics
  const double msg_bools[] = {
      email.has_signature ? 1.0 : 0.0,     email.urls.empty() ? 0.0 : 1.0,
      email.indented_line_count > 0 ? 1.0 : 0.0, email.quoted_line_count > 0 ? 1.0 : 0.0,
      email.attached_original ? 1.0 : 0.0, email.has_attachment ? 1.0 : 0.0,
      email.is_reply ? 1.0 : 0.0,          email.is_forwarded ? 1.0 : 0.0,
      email.has_html ? 1.0 : 0.0};
  for (std::uint32_t i = 0; i < 9; ++i) push(message_base_ + i, msg_bools[i]);
  push(message_base_ + 9, static_cast<double>(email.recipients.size()));
  push(message_base_ + 10, static_cast<double>(email.cc.size()));

  // time one-hots
  push(time_base_ + static_cast<std::uint32_t>(email.weekday), 1.0);
  push(time_base_ + 7 + static_cast<std::uint32_t>(email.hour), 1.0);

  // URL domains
  {
    const std::uint32_t other = url_base_ + static_cast<std::uint32_t>(ctx_->url_domains().size());
    std::vector<std::uint32_t> set_bits;
    bool any_unknown = false;
    for (const auto& url : email.urls) {
      std::string d = url_domain(url);
      if (auto i = ctx_->url_domain_index(d))
        set_bits.push_back(url_base_ + *i);
      else
        any_unknown = true;
    }
    if (any_unknown) set_bits.push_back(other);
    std::sort(set_bits.begin(), set_bits.end());
    set_bits.erase(std::unique(set_bits.begin(), set_bits.end()), set_bits.end());
    for (auto b : set_bits) push(b, 1.0);
  }

  // interaction groups: to-addr, to-dom, cc-addr, cc-dom
  {
    const std::uint32_t na = static_cast<std::uint32_t>(ctx_->contacted_addresses().size());
    const std::uint32_t nd = static_cast<std::uint32_t>(ctx_->contacted_domains().size());
    const std::uint32_t bases[4] = {interaction_base_, interaction_base_ + na + 1,
                                    interaction_base_ + na + 1 + nd + 1,
                                    interaction_base_ + na + 1 + nd + 1 + na + 1};
    auto emit_group = [&](const std::vector<Address>& addrs, bool by_domain,
                          std::uint32_t base, std::uint32_t listed) {
      std::vector<std::uint32_t> bits;
      for (const Address& a : addrs) {
        std::optional<std::uint32_t> i =
            by_domain ? ctx_->domain_index(a.domain) : ctx_->address_index(to_lower(a.str()));
        if (i) bits.push_back(base + *i);
      }
      std::sort(bits.begin(), bits.end());
      bits.erase(std::unique(bits.begin(), bits.end()), bits.end());
      for (auto b : bits) push(b, 1.0);
      if (bits.empty() && !addrs.empty()) push(base + listed, 1.0);  // "other"
    };
    emit_group(email.recipients, false, bases[0], na);
    emit_group(email.recipients, true, bases[1], nd);
    emit_group(email.cc, false, bases[2], na);
    emit_group(email.cc, true, bases[3], nd);
  }

  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

}  // namespace mailsentry
