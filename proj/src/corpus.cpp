#include "mailsentry/corpus.hpp"

#include <algorithm>
#include <filesystem>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace mailsentry {

std::optional<CorpusRole> role_from_string(std::string_view s) {
  if (s == "user_sent") return CorpusRole::user_sent;
  if (s == "org_sent") return CorpusRole::org_sent;
  if (s == "external_legit") return CorpusRole::external_legit;
  if (s == "attack") return CorpusRole::attack;
  return std::nullopt;
}

std::string_view role_to_string(CorpusRole r) {
  switch (r) {
    case CorpusRole::user_sent: return "user_sent";
    case CorpusRole::org_sent: return "org_sent";
    case CorpusRole::external_legit: return "external_legit";
    case CorpusRole::attack: return "attack";
  }
  return "org_sent";
}

CorpusManifest CorpusManifest::from_json(std::string_view json_text,
                                         const std::string& base_dir) {
  nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw CorpusError("manifest is not valid JSON");
  const nlohmann::json& entries = j.is_array() ? j : j.value("entries", nlohmann::json::array());
  CorpusManifest m;
  for (const auto& item : entries) {
    ManifestEntry e;
    e.path = item.value("path", std::string{});
    if (e.path.empty()) throw CorpusError("manifest entry without path");
    if (!base_dir.empty() && fs::path(e.path).is_relative())
      e.path = (fs::path(base_dir) / e.path).string();
    auto fmt = format_from_string(item.value("format", std::string{"eml"}));
    if (!fmt) throw CorpusError("unknown format in manifest: " + item.value("format", std::string{}));
    e.format = *fmt;
    auto role = role_from_string(item.value("role", std::string{"org_sent"}));
    if (!role) throw CorpusError("unknown role in manifest: " + item.value("role", std::string{}));
    e.role = *role;
    e.user_id = item.value("user_id", std::string{});
    if (e.role == CorpusRole::user_sent && e.user_id.empty())
      throw CorpusError("user_sent entry requires user_id: " + e.path);
    m.entries.push_back(std::move(e));
  }
  return m;
}

CorpusManifest CorpusManifest::load(const std::string& path) {
  if (!fs::exists(path)) throw CorpusError("manifest not found: " + path);
  std::string base = fs::path(path).parent_path().string();
  return from_json(read_file(path), base);
}

std::vector<std::string_view> split_mbox(std::string_view data) {
  std::vector<std::string_view> out;
  size_t pos = 0;
  std::vector<size_t> starts;
  while (pos < data.size()) {
    bool at_line_start = pos == 0 || data[pos - 1] == '\n';
    if (at_line_start && data.substr(pos).starts_with("From ")) starts.push_back(pos);
    size_t nl = data.find('\n', pos);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  for (size_t i = 0; i < starts.size(); ++i) {
    size_t end = i + 1 < starts.size() ? starts[i + 1] : data.size();
    out.push_back(data.substr(starts[i], end - starts[i]));
  }
  return out;
}

namespace {

std::vector<std::string> collect_files(const std::string& path) {
  std::vector<std::string> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::recursive_directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  return files;
}

}  // namespace

CorpusCounters load_corpus(const CorpusManifest& manifest, const EmailSink& sink,
                           const TimePolicy& tz,
                           const std::function<void(const std::string&)>& log) {
  CorpusCounters counters;
  for (const auto& entry : manifest.entries) {
    if (!fs::exists(entry.path)) throw CorpusError("missing corpus path: " + entry.path);
    for (const std::string& file : collect_files(entry.path)) {
      ++counters.files;
      std::string data;
      try {
        data = read_file(file);
      } catch (const std::exception& ex) {
        throw CorpusError(std::string("unreadable file: ") + ex.what());
      }
      auto deliver = [&](std::string_view raw, EmailFormat fmt) {
        std::string err;
        if (auto email = parse_email(raw, fmt, tz, &err)) {
          ++counters.loaded[entry.role];
          sink(entry.role, entry.user_id, std::move(*email));
        } else {
          ++counters.skipped;
          if (log) log("skip (" + err + "): " + file);
        }
      };
      switch (entry.format) {
        case EmailFormat::eml:
          deliver(data, EmailFormat::eml);
          break;
        case EmailFormat::mbox:
          for (std::string_view msg : split_mbox(data)) deliver(msg, EmailFormat::mbox);
          break;
        case EmailFormat::jsonl: {
          for (std::string_view line : split_lines(data)) {
            if (trim(line).empty()) continue;
            deliver(line, EmailFormat::jsonl);
          }
          break;
        }
      }
    }
  }
  return counters;
}

}  // namespace mailsentry
