#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mailsentry/util.hpp"

namespace mailsentry {

struct Address {
  std::string local;
  std::string domain;  // always lowercase, non-empty

  std::string str() const { return local + "@" + domain; }
  bool operator==(const Address&) const = default;

  // Accepts "user@host", "Name <user@host>", quoted display names.
  static std::optional<Address> parse(std::string_view raw);
};

// Splits a To:/Cc: header value into addresses; unparseable entries are dropped.
std::vector<Address> parse_address_list(std::string_view value);

enum class EmailFormat { eml, mbox, jsonl };

std::optional<EmailFormat> format_from_string(std::string_view s);
std::string_view format_to_string(EmailFormat f);

// Reference clock for weekday/hour. By default the sender's own header offset
// is used (the civil time the sender wrote); a fixed offset can be forced.
struct TimePolicy {
  bool use_header_offset = true;
  int fixed_offset_minutes = 0;  // applied when use_header_offset is false
};

struct Email {
  std::string message_id;
  Address sender;
  std::vector<Address> recipients;
  std::vector<Address> cc;
  std::int64_t sent_at = 0;  // UTC epoch seconds
  int weekday = 0;           // 0 = Monday .. 6 = Sunday, per TimePolicy
  int hour = 0;              // 0..23, per TimePolicy
  std::string subject;
  std::string body;          // decoded text, line structure preserved
  std::vector<std::string> urls;
  bool has_attachment = false;
  bool attached_original = false;
  bool is_reply = false;
  bool is_forwarded = false;
  bool has_html = false;
  int quoted_line_count = 0;
  int indented_line_count = 0;
  bool has_signature = false;
};

// Parses one raw message. Returns nullopt for messages with unparseable
// headers; the reason lands in *error when provided. Never throws on bad input.
std::optional<Email> parse_email(std::string_view raw, EmailFormat format,
                                 const TimePolicy& tz = {},
                                 std::string* error = nullptr);

// Body with quoted lines and the trailing signature block removed; this is the
// text the sender actually authored and what writing-habit features run on.
std::string authored_text(const Email& email);
std::string strip_quoted_and_signature(std::string_view body);

// URL tokens found in a body, in order of appearance.
std::vector<std::string> extract_urls(std::string_view body);

// Registrable host of a URL: scheme, port and path stripped, lowercased.
std::string url_domain(std::string_view url);

// Date header in RFC-822 style ("Tue, 4 Feb 2014 14:05:00 +0000") or ISO 8601.
// Returns civil fields as written plus the offset in minutes.
struct ParsedDate {
  CivilDateTime civil;
  int offset_minutes = 0;
  bool has_offset = false;
};
std::optional<ParsedDate> parse_date(std::string_view value);

// Derives (sent_at, weekday, hour) from a parsed date under a policy.
void apply_time_policy(const ParsedDate& d, const TimePolicy& tz, Email& out);

}  // namespace mailsentry
