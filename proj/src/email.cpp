#include "mailsentry/email.hpp"

#include <algorithm>
#include <cctype>
#include <array>
#include <cstdlib>
#include <regex>

#include <nlohmann/json.hpp>

namespace mailsentry {

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t'; }

struct HeaderBlock {
  std::vector<std::pair<std::string, std::string>> fields;  // name (as-is), unfolded value
  size_t body_offset = 0;

  std::optional<std::string> get(std::string_view name) const {
    for (const auto& [n, v] : fields)
      if (iequals(n, name)) return v;
    return std::nullopt;
  }
  // To:/Cc: may legally repeat; join occurrences.
  std::string get_joined(std::string_view name) const {
    std::string out;
    for (const auto& [n, v] : fields)
      if (iequals(n, name)) {
        if (!out.empty()) out += ", ";
        out += v;
      }
    return out;
  }
};

HeaderBlock parse_headers(std::string_view raw) {
  HeaderBlock hb;
  size_t pos = 0;
  std::string cur_name, cur_value;
  auto flush = [&] {
    if (!cur_name.empty()) hb.fields.emplace_back(cur_name, std::string(trim(cur_value)));
    cur_name.clear();
    cur_value.clear();
  };
  while (pos < raw.size()) {
    size_t nl = raw.find('\n', pos);
    std::string_view line =
        nl == std::string_view::npos ? raw.substr(pos) : raw.substr(pos, nl - pos);
    size_t next = nl == std::string_view::npos ? raw.size() : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {  // end of header block
      flush();
      hb.body_offset = next;
      return hb;
    }
    if (is_ws(line.front())) {  // folded continuation
      if (!cur_name.empty()) {
        cur_value += ' ';
        cur_value += trim(line);
      }
    } else {
      size_t colon = line.find(':');
      if (colon == std::string_view::npos || colon == 0) {
        // tolerated garbage line inside headers; ignore
      } else {
        flush();
        cur_name = std::string(trim(line.substr(0, colon)));
        cur_value = std::string(trim(line.substr(colon + 1)));
      }
    }
    pos = next;
  }
  flush();
  hb.body_offset = raw.size();
  return hb;
}

// --- transfer / content decoding ---------------------------------------------

int hex_val(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string decode_quoted_printable(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (size_t i = 0; i < in.size(); ++i) {
    char c = in[i];
    if (c != '=') {
      out += c;
      continue;
    }
    if (i + 1 < in.size() && in[i + 1] == '\n') {  // soft break
      ++i;
      continue;
    }
    if (i + 2 < in.size() && in[i + 1] == '\r' && in[i + 2] == '\n') {
      i += 2;
      continue;
    }
    if (i + 2 < in.size()) {
      int hi = hex_val(in[i + 1]), lo = hex_val(in[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out += static_cast<char>(hi * 16 + lo);
        i += 2;
        continue;
      }
    }
    out += c;
  }
  return out;
}

std::string decode_base64(std::string_view in) {
  static const auto table = [] {
    std::array<int, 256> t{};
    t.fill(-1);
    const char* alpha = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    for (int i = 0; i < 64; ++i) t[static_cast<unsigned char>(alpha[i])] = i;
    return t;
  }();
  std::string out;
  int acc = 0, bits = 0;
  for (char c : in) {
    int v = table[static_cast<unsigned char>(c)];
    if (v < 0) continue;
    acc = (acc << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out += static_cast<char>((acc >> bits) & 0xFF);
    }
  }
  return out;
}

std::string strip_html(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  bool in_tag = false;
  for (size_t i = 0; i < in.size(); ++i) {
    char c = in[i];
    if (in_tag) {
      if (c == '>') in_tag = false;
      continue;
    }
    if (c == '<') {
      in_tag = true;
      // block-level breaks keep some line structure
      if (in.substr(i).starts_with("<br") || in.substr(i).starts_with("<BR") ||
          in.substr(i).starts_with("</p") || in.substr(i).starts_with("</P") ||
          in.substr(i).starts_with("</div") || in.substr(i).starts_with("</DIV"))
        out += '\n';
      continue;
    }
    out += c;
  }
  // a few common entities
  static const std::pair<std::string_view, std::string_view> ents[] = {
      {"&amp;", "&"}, {"&lt;", "<"}, {"&gt;", ">"},
      {"&quot;", "\""}, {"&#39;", "'"}, {"&nbsp;", " "}};
  std::string final_out;
  final_out.reserve(out.size());
  for (size_t i = 0; i < out.size();) {
    bool matched = false;
    if (out[i] == '&') {
      for (const auto& [k, v] : ents) {
        if (std::string_view(out).substr(i, k.size()) == k) {
          final_out += v;
          i += k.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) {
      final_out += out[i];
      ++i;
    }
  }
  return final_out;
}

struct ContentType {
  std::string type = "text";
  std::string subtype = "plain";
  std::string boundary;
  std::string name;  // filename-ish param, if any
};

ContentType parse_content_type(std::string_view v) {
  ContentType ct;
  size_t semi = v.find(';');
  std::string_view main = trim(v.substr(0, semi == std::string_view::npos ? v.size() : semi));
  size_t slash = main.find('/');
  if (slash != std::string_view::npos) {
    ct.type = to_lower(trim(main.substr(0, slash)));
    ct.subtype = to_lower(trim(main.substr(slash + 1)));
  } else if (!main.empty()) {
    ct.type = to_lower(main);
  }
  // parameters
  std::string_view rest = semi == std::string_view::npos ? std::string_view{} : v.substr(semi + 1);
  while (!rest.empty()) {
    size_t next = rest.find(';');
    std::string_view param = trim(rest.substr(0, next));
    rest = next == std::string_view::npos ? std::string_view{} : rest.substr(next + 1);
    size_t eq = param.find('=');
    if (eq == std::string_view::npos) continue;
    std::string key = to_lower(trim(param.substr(0, eq)));
    std::string_view val = trim(param.substr(eq + 1));
    if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
      val = val.substr(1, val.size() - 2);
    if (key == "boundary")
      ct.boundary = std::string(val);
    else if (key == "name" || key == "filename")
      ct.name = std::string(val);
  }
  return ct;
}

struct BodyResult {
  std::string text;
  bool has_html = false;
  bool has_attachment = false;
  bool attached_original = false;
};

std::string decode_part_body(std::string_view body, const HeaderBlock& hb) {
  auto cte = hb.get("Content-Transfer-Encoding");
  if (cte) {
    std::string enc = to_lower(trim(*cte));
    if (enc == "quoted-printable") return decode_quoted_printable(body);
    if (enc == "base64") return decode_base64(body);
  }
  return std::string(body);
}

void extract_body(std::string_view raw, const HeaderBlock& hb, BodyResult& out, int depth);

void walk_multipart(std::string_view body, const std::string& boundary, BodyResult& out,
                    int depth) {
  const std::string open = "--" + boundary;
  std::vector<std::string_view> parts;
  size_t pos = body.find(open);
  while (pos != std::string_view::npos) {
    size_t line_end = body.find('\n', pos);
    if (line_end == std::string_view::npos) break;
    std::string_view marker_line = body.substr(pos, line_end - pos);
    bool closing = marker_line.find(open + "--") != std::string_view::npos;
    size_t content_start = line_end + 1;
    size_t next = body.find(open, content_start);
    size_t content_end = next == std::string_view::npos ? body.size() : next;
    if (!closing && content_start < body.size())
      parts.push_back(body.substr(content_start, content_end - content_start));
    if (closing) break;
    pos = next;
  }
  for (std::string_view part : parts) {
    HeaderBlock ph = parse_headers(part);
    extract_body(part.substr(ph.body_offset), ph, out, depth + 1);
  }
}

void extract_body(std::string_view raw_body, const HeaderBlock& hb, BodyResult& out, int depth) {
  if (depth > 8) return;
  ContentType ct;
  if (auto v = hb.get("Content-Type")) ct = parse_content_type(*v);
  auto disp = hb.get("Content-Disposition");
  bool is_attachment_disp =
      disp && (to_lower(*disp).find("attachment") != std::string::npos ||
               to_lower(*disp).find("filename") != std::string::npos);

  if (ct.type == "multipart") {
    if (!ct.boundary.empty()) walk_multipart(raw_body, ct.boundary, out, depth);
    return;
  }
  if (ct.type == "message" && ct.subtype == "rfc822") {
    out.attached_original = true;
    out.has_attachment = true;
    return;
  }
  if (ct.type == "text" && !is_attachment_disp) {
    std::string decoded = decode_part_body(raw_body, hb);
    if (ct.subtype == "html") {
      out.has_html = true;
      if (out.text.empty()) out.text = strip_html(decoded);
    } else {
      if (out.text.empty())
        out.text = std::move(decoded);
      else {
        out.text += '\n';
        out.text += decoded;
      }
    }
    return;
  }
  // non-text leaf part
  out.has_attachment = true;
}

// --- signature & quoting ------------------------------------------------------

bool line_is_quoted(std::string_view line) {
  std::string_view t = line;
  while (!t.empty() && is_ws(t.front())) t.remove_prefix(1);
  return !t.empty() && t.front() == '>';
}

bool line_is_sig_delimiter(std::string_view line) {
  return line == "--" || line == "-- " || trim(line) == "--";
}

const std::regex& phone_like_re() {
  static const std::regex re(R"(\d{3}[-. ]\d{3}[-. ]\d{4}|\d{3}[-.]\d{4})");
  return re;
}

bool looks_like_name_line(std::string_view line) {
  // one to three capitalized tokens and nothing else
  auto t = trim(line);
  if (t.empty() || t.size() > 40) return false;
  int tokens = 0;
  size_t i = 0;
  while (i < t.size()) {
    while (i < t.size() && t[i] == ' ') ++i;
    if (i >= t.size()) break;
    if (!std::isupper(static_cast<unsigned char>(t[i]))) return false;
    ++tokens;
    while (i < t.size() && t[i] != ' ') {
      char c = t[i];
      if (!std::isalpha(static_cast<unsigned char>(c)) && c != '.' && c != '\'' && c != '-')
        return false;
      ++i;
    }
  }
  return tokens >= 1 && tokens <= 3;
}

// Index of the first signature line, or npos. "-- " wins; otherwise a trailing
// block of at most 5 non-quoted lines opening with a name line or containing a
// phone-like number.
size_t find_signature_start(const std::vector<std::string_view>& lines) {
  for (size_t i = 0; i < lines.size(); ++i)
    if (line_is_sig_delimiter(lines[i])) return i;
  // trailing block after the last blank line
  size_t last_blank = std::string_view::npos;
  size_t last_content = std::string_view::npos;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty())
      last_blank = i;
    else
      last_content = i;
  }
  if (last_content == std::string_view::npos || last_blank == std::string_view::npos ||
      last_blank > last_content)
    return std::string_view::npos;
  size_t start = last_blank + 1;
  size_t n = last_content - start + 1;
  if (n == 0 || n > 5) return std::string_view::npos;
  bool name_open = looks_like_name_line(lines[start]);
  bool phone = false;
  for (size_t i = start; i <= last_content; ++i) {
    if (line_is_quoted(lines[i])) return std::string_view::npos;
    std::string s(lines[i]);
    if (std::regex_search(s, phone_like_re())) phone = true;
  }
  return (name_open || phone) ? start : std::string_view::npos;
}

}  // namespace

std::optional<Address> Address::parse(std::string_view raw) {
  std::string_view s = trim(raw);
  size_t lt = s.rfind('<');
  if (lt != std::string_view::npos) {
    size_t gt = s.find('>', lt);
    s = gt == std::string_view::npos ? s.substr(lt + 1) : s.substr(lt + 1, gt - lt - 1);
    s = trim(s);
  }
  size_t at = s.rfind('@');
  if (at == std::string_view::npos || at == 0 || at + 1 >= s.size()) return std::nullopt;
  Address a;
  a.local = to_lower(s.substr(0, at));
  a.domain = to_lower(s.substr(at + 1));
  auto bad = [](std::string_view v) {
    return v.empty() ||
           v.find_first_of(" \t<>,;\"") != std::string_view::npos;
  };
  if (bad(a.local) || bad(a.domain)) return std::nullopt;
  return a;
}

std::vector<Address> parse_address_list(std::string_view value) {
  std::vector<Address> out;
  std::string current;
  bool in_quotes = false;
  int angle_depth = 0;
  auto flush = [&] {
    if (auto a = Address::parse(current)) out.push_back(std::move(*a));
    current.clear();
  };
  for (char c : value) {
    if (c == '"') in_quotes = !in_quotes;
    if (!in_quotes) {
      if (c == '<') ++angle_depth;
      if (c == '>') angle_depth = std::max(0, angle_depth - 1);
      if ((c == ',' || c == ';') && angle_depth == 0) {
        flush();
        continue;
      }
    }
    current += c;
  }
  flush();
  return out;
}

std::optional<EmailFormat> format_from_string(std::string_view s) {
  if (iequals(s, "eml")) return EmailFormat::eml;
  if (iequals(s, "mbox")) return EmailFormat::mbox;
  if (iequals(s, "jsonl")) return EmailFormat::jsonl;
  return std::nullopt;
}

std::string_view format_to_string(EmailFormat f) {
  switch (f) {
    case EmailFormat::eml: return "eml";
    case EmailFormat::mbox: return "mbox";
    case EmailFormat::jsonl: return "jsonl";
  }
  return "eml";
}

std::optional<ParsedDate> parse_date(std::string_view value) {
  std::string s(trim(value));
  if (s.empty()) return std::nullopt;

  // ISO 8601: 2014-02-04T14:05:00+00:00 / ...Z / date only
  static const std::regex iso_re(
      R"(^(\d{4})-(\d{2})-(\d{2})(?:[T ](\d{2}):(\d{2})(?::(\d{2}))?\s*(Z|[+-]\d{2}:?\d{2})?)?$)");
  std::smatch m;
  if (std::regex_match(s, m, iso_re)) {
    ParsedDate d;
    d.civil.year = std::atoi(m[1].str().c_str());
    d.civil.month = std::atoi(m[2].str().c_str());
    d.civil.day = std::atoi(m[3].str().c_str());
    if (m[4].matched) {
      d.civil.hour = std::atoi(m[4].str().c_str());
      d.civil.minute = std::atoi(m[5].str().c_str());
      if (m[6].matched) d.civil.second = std::atoi(m[6].str().c_str());
    }
    if (m[7].matched) {
      std::string z = m[7].str();
      d.has_offset = true;
      if (z != "Z") {
        int sign = z[0] == '-' ? -1 : 1;
        z.erase(std::remove(z.begin(), z.end(), ':'), z.end());
        int hh = std::atoi(z.substr(1, 2).c_str());
        int mm = std::atoi(z.substr(3, 2).c_str());
        d.offset_minutes = sign * (hh * 60 + mm);
      }
    }
    return d;
  }

  // RFC-822 style: [Tue, ]4 Feb 2014 14:05[:00] +0000|GMT|EST...
  static const std::regex rfc_re(
      R"(^(?:\w{3,9},\s*)?(\d{1,2})\s+(\w{3,9})\.?\s+(\d{2,4})\s+(\d{1,2}):(\d{2})(?::(\d{2}))?(?:\s+([+-]\d{4}|[A-Za-z]{1,5}))?)");
  if (!std::regex_search(s, m, rfc_re)) return std::nullopt;
  static const char* months[] = {"jan", "feb", "mar", "apr", "may", "jun",
                                 "jul", "aug", "sep", "oct", "nov", "dec"};
  std::string mon = to_lower(m[2].str()).substr(0, 3);
  int month = 0;
  for (int i = 0; i < 12; ++i)
    if (mon == months[i]) month = i + 1;
  if (month == 0) return std::nullopt;
  ParsedDate d;
  d.civil.day = std::atoi(m[1].str().c_str());
  d.civil.month = month;
  int year = std::atoi(m[3].str().c_str());
  if (year < 100) year += year < 50 ? 2000 : 1900;
  d.civil.year = year;
  d.civil.hour = std::atoi(m[4].str().c_str());
  d.civil.minute = std::atoi(m[5].str().c_str());
  if (m[6].matched) d.civil.second = std::atoi(m[6].str().c_str());
  if (m[7].matched) {
    std::string z = m[7].str();
    if (z[0] == '+' || z[0] == '-') {
      int sign = z[0] == '-' ? -1 : 1;
      int hh = std::atoi(z.substr(1, 2).c_str());
      int mm = std::atoi(z.substr(3, 2).c_str());
      d.offset_minutes = sign * (hh * 60 + mm);
      d.has_offset = true;
    } else {
      static const std::pair<std::string_view, int> zones[] = {
          {"ut", 0},     {"gmt", 0},    {"utc", 0},    {"z", 0},
          {"est", -300}, {"edt", -240}, {"cst", -360}, {"cdt", -300},
          {"mst", -420}, {"mdt", -360}, {"pst", -480}, {"pdt", -420}};
      std::string lz = to_lower(z);
      for (const auto& [name, off] : zones)
        if (lz == name) {
          d.offset_minutes = off;
          d.has_offset = true;
        }
    }
  }
  return d;
}

void apply_time_policy(const ParsedDate& d, const TimePolicy& tz, Email& out) {
  std::int64_t local_epoch = civil_to_epoch(d.civil);
  std::int64_t utc = local_epoch - static_cast<std::int64_t>(d.offset_minutes) * 60;
  out.sent_at = utc;
  if (tz.use_header_offset && d.has_offset) {
    // weekday/hour exactly as the sender wrote them
    out.weekday = weekday_from_days(days_from_civil(d.civil.year, d.civil.month, d.civil.day));
    out.hour = d.civil.hour;
  } else {
    int off = tz.use_header_offset ? 0 : tz.fixed_offset_minutes;
    CivilDateTime c = epoch_to_civil(utc + static_cast<std::int64_t>(off) * 60);
    out.weekday = weekday_from_days(days_from_civil(c.year, c.month, c.day));
    out.hour = c.hour;
  }
}

std::vector<std::string> extract_urls(std::string_view body) {
  std::vector<std::string> out;
  static const std::string_view schemes[] = {"http://", "https://", "ftp://", "www."};
  size_t i = 0;
  while (i < body.size()) {
    size_t best = std::string_view::npos;
    for (std::string_view scheme : schemes) {
      size_t p = body.find(scheme, i);
      if (p != std::string_view::npos && p < best) best = p;
    }
    if (best == std::string_view::npos) break;
    // token must start at a word boundary
    if (best > 0 && !std::isspace(static_cast<unsigned char>(body[best - 1])) &&
        body[best - 1] != '<' && body[best - 1] != '(' && body[best - 1] != '"' &&
        body[best - 1] != '\'' && body[best - 1] != '[' && body[best - 1] != '=') {
      i = best + 1;
      continue;
    }
    size_t end = best;
    while (end < body.size() && !std::isspace(static_cast<unsigned char>(body[end])) &&
           body[end] != '<' && body[end] != '>' && body[end] != '"')
      ++end;
    std::string_view tok = body.substr(best, end - best);
    while (!tok.empty() && std::string_view(").,;:!?']").find(tok.back()) != std::string_view::npos)
      tok.remove_suffix(1);
    if (tok.size() > 6 || (tok.starts_with("www.") && tok.size() > 4))
      out.emplace_back(tok);
    i = end;
  }
  return out;
}

std::string url_domain(std::string_view url) {
  std::string_view s = url;
  size_t scheme = s.find("://");
  if (scheme != std::string_view::npos) s = s.substr(scheme + 3);
  size_t slash = s.find_first_of("/?#");
  if (slash != std::string_view::npos) s = s.substr(0, slash);
  size_t at = s.rfind('@');  // userinfo
  if (at != std::string_view::npos) s = s.substr(at + 1);
  size_t colon = s.find(':');
  if (colon != std::string_view::npos) s = s.substr(0, colon);
  return to_lower(s);
}

std::string strip_quoted_and_signature(std::string_view body) {
  auto lines = split_lines(body);
  size_t sig = find_signature_start(lines);
  std::string out;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (sig != std::string_view::npos && i >= sig) break;
    if (line_is_quoted(lines[i])) continue;
    out.append(lines[i]);
    out += '\n';
  }
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string authored_text(const Email& email) { return strip_quoted_and_signature(email.body); }

namespace {

void finish_body_stats(Email& e) {
  auto lines = split_lines(e.body);
  size_t sig = find_signature_start(lines);
  e.has_signature = sig != std::string_view::npos;
  e.quoted_line_count = 0;
  e.indented_line_count = 0;
  for (const auto& line : lines) {
    if (line_is_quoted(line))
      ++e.quoted_line_count;
    else if (!line.empty() && is_ws(line.front()) && !trim(line).empty())
      ++e.indented_line_count;
  }
  e.urls = extract_urls(e.body);
  std::string low_body = to_lower(e.body);
  if (low_body.find("-----original message-----") != std::string::npos ||
      low_body.find("---------------------- forwarded") != std::string::npos ||
      low_body.find("---------- forwarded message") != std::string::npos ||
      low_body.find("begin forwarded message") != std::string::npos)
    e.attached_original = true;
}

std::optional<Email> parse_eml(std::string_view raw, const TimePolicy& tz, std::string* error) {
  HeaderBlock hb = parse_headers(raw);
  if (hb.fields.empty()) {
    if (error) *error = "no parseable headers";
    return std::nullopt;
  }
  Email e;
  auto from = hb.get("From");
  if (!from) {
    if (error) *error = "missing From header";
    return std::nullopt;
  }
  auto sender = Address::parse(*from);
  if (!sender) {
    if (error) *error = "unparseable From address: " + *from;
    return std::nullopt;
  }
  e.sender = std::move(*sender);
  e.recipients = parse_address_list(hb.get_joined("To"));
  e.cc = parse_address_list(hb.get_joined("Cc"));
  if (auto mid = hb.get("Message-ID"))
    e.message_id = std::string(trim(*mid));
  else
    e.message_id = "synth-" + hex64(fnv1a64(raw));
  if (auto subj = hb.get("Subject")) e.subject = sanitize_utf8(*subj);

  if (auto date = hb.get("Date")) {
    if (auto d = parse_date(*date)) apply_time_policy(*d, tz, e);
  }
  std::string low_subj = to_lower(e.subject);
  e.is_reply = low_subj.starts_with("re:") || hb.get("In-Reply-To").has_value();
  e.is_forwarded = low_subj.starts_with("fw:") || low_subj.starts_with("fwd:");

  BodyResult br;
  extract_body(raw.substr(hb.body_offset), hb, br, 0);
  e.body = sanitize_utf8(br.text);
  e.has_html = br.has_html;
  e.has_attachment = br.has_attachment;
  e.attached_original = br.attached_original;
  finish_body_stats(e);
  return e;
}

std::optional<Email> parse_jsonl(std::string_view raw, const TimePolicy& tz, std::string* error) {
  nlohmann::json j = nlohmann::json::parse(raw, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    if (error) *error = "invalid JSON object";
    return std::nullopt;
  }
  Email e;
  auto from_field = j.contains("from") ? j["from"] : j.value("sender", nlohmann::json());
  if (!from_field.is_string()) {
    if (error) *error = "missing from/sender";
    return std::nullopt;
  }
  auto sender = Address::parse(from_field.get<std::string>());
  if (!sender) {
    if (error) *error = "unparseable sender address";
    return std::nullopt;
  }
  e.sender = std::move(*sender);
  auto read_addrs = [&](const char* key, const char* alt) {
    std::vector<Address> out;
    const nlohmann::json* arr = nullptr;
    if (j.contains(key)) arr = &j[key];
    else if (alt && j.contains(alt)) arr = &j[alt];
    if (!arr) return out;
    if (arr->is_string()) return parse_address_list(arr->get<std::string>());
    if (arr->is_array())
      for (const auto& item : *arr)
        if (item.is_string())
          if (auto a = Address::parse(item.get<std::string>())) out.push_back(std::move(*a));
    return out;
  };
  e.recipients = read_addrs("to", "recipients");
  e.cc = read_addrs("cc", nullptr);
  e.subject = sanitize_utf8(j.value("subject", std::string{}));
  e.body = sanitize_utf8(j.value("body", std::string{}));
  if (j.contains("message_id") && j["message_id"].is_string())
    e.message_id = j["message_id"].get<std::string>();
  else
    e.message_id = "synth-" + hex64(fnv1a64(raw));

  const nlohmann::json& date = j.contains("date") ? j["date"] : j.value("sent_at", nlohmann::json());
  if (date.is_number_integer()) {
    e.sent_at = date.get<std::int64_t>();
    std::int64_t off = tz.use_header_offset ? 0 : tz.fixed_offset_minutes * 60ll;
    CivilDateTime c = epoch_to_civil(e.sent_at + off);
    e.weekday = weekday_from_days(days_from_civil(c.year, c.month, c.day));
    e.hour = c.hour;
  } else if (date.is_string()) {
    if (auto d = parse_date(date.get<std::string>())) apply_time_policy(*d, tz, e);
  }
  std::string low_subj = to_lower(e.subject);
  e.is_reply = j.value("is_reply", low_subj.starts_with("re:"));
  e.is_forwarded =
      j.value("is_forwarded", low_subj.starts_with("fw:") || low_subj.starts_with("fwd:"));
  e.has_html = j.value("has_html", false);
  e.has_attachment = j.value("has_attachment", false);
  e.attached_original = j.value("attached_original", false);
  bool original_flag = e.attached_original;
  finish_body_stats(e);
  e.attached_original = e.attached_original || original_flag;
  return e;
}

}  // namespace

std::optional<Email> parse_email(std::string_view raw, EmailFormat format, const TimePolicy& tz,
                                 std::string* error) {
  switch (format) {
    case EmailFormat::jsonl:
      return parse_jsonl(raw, tz, error);
    case EmailFormat::mbox: {
      // drop the leading "From " envelope line when present
      std::string_view body = raw;
      if (body.starts_with("From ")) {
        size_t nl = body.find('\n');
        body = nl == std::string_view::npos ? std::string_view{} : body.substr(nl + 1);
      }
      return parse_eml(body, tz, error);
    }
    case EmailFormat::eml:
      return parse_eml(raw, tz, error);
  }
  return std::nullopt;
}

}  // namespace mailsentry
