#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mailsentry/email.hpp"

namespace mailsentry {

enum class CorpusRole { user_sent, org_sent, external_legit, attack };

std::optional<CorpusRole> role_from_string(std::string_view s);
std::string_view role_to_string(CorpusRole r);

struct ManifestEntry {
  std::string path;  // file, or directory of message files for eml
  EmailFormat format = EmailFormat::eml;
  CorpusRole role = CorpusRole::org_sent;
  std::string user_id;  // required for user_sent
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;

  static CorpusManifest load(const std::string& path);  // throws CorpusError
  static CorpusManifest from_json(std::string_view json_text, const std::string& base_dir);
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CorpusCounters {
  std::map<CorpusRole, std::uint64_t> loaded;
  std::uint64_t skipped = 0;
  std::uint64_t files = 0;
};

using EmailSink =
    std::function<void(CorpusRole role, const std::string& user_id, Email&& email)>;

// Streams every message in manifest order, then file order, then message
// offset. Missing paths abort with CorpusError; malformed messages are skipped
// and counted. Logging goes through `log` when provided (one line per skip).
CorpusCounters load_corpus(const CorpusManifest& manifest, const EmailSink& sink,
                           const TimePolicy& tz = {},
                           const std::function<void(const std::string&)>& log = nullptr);

// Splits an mbox buffer into raw messages (offsets into the buffer).
std::vector<std::string_view> split_mbox(std::string_view data);

}  // namespace mailsentry
