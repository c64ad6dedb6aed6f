#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mailsentry {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

// Splits on '\n'; a trailing '\r' on each line is dropped.
std::vector<std::string_view> split_lines(std::string_view text);

// Replaces invalid UTF-8 byte sequences with U+FFFD. Never throws.
std::string sanitize_utf8(std::string_view bytes);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string hex64(std::uint64_t v);

// Proleptic Gregorian calendar arithmetic, independent of the system zone database.
struct CivilDateTime {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  int hour = 0;
  int minute = 0;
  int second = 0;
};

std::int64_t days_from_civil(int year, int month, int day);
// 0 = Monday .. 6 = Sunday
int weekday_from_days(std::int64_t days);
std::int64_t civil_to_epoch(const CivilDateTime& c);
CivilDateTime epoch_to_civil(std::int64_t epoch_seconds);

std::string read_file(const std::string& path);     // throws std::runtime_error on failure
void write_file(const std::string& path, std::string_view content);

// Canonical shortest round-trip formatting for doubles (used by every
// serialized artifact so byte-identical reports stay byte-identical).
std::string format_double(double v);

}  // namespace mailsentry
